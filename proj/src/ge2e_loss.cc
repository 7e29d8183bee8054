// Copyright (c) 2026 The ge2e-asv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ge2e/ge2e_loss.h"

#include <cmath>
#include <string>

#include "ge2e/error.h"

namespace ge2e {

double Cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw ConfigError("cosine of unequal lengths");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw NumericError("cosine of a zero-norm vector");
  }
  return a.dot(b) / (na * nb);
}

Eigen::VectorXd Centroid(const Eigen::Ref<const Eigen::MatrixXd>& embeddings) {
  if (embeddings.cols() < 1) throw ConfigError("centroid of no embeddings");
  return embeddings.rowwise().sum() / static_cast<double>(embeddings.cols());
}

Eigen::VectorXd LeaveOneOutCentroid(
    const Eigen::Ref<const Eigen::MatrixXd>& embeddings, int excluded) {
  const auto m = embeddings.cols();
  if (m < 2) {
    throw ConfigError("leave-one-out centroid needs at least 2 embeddings");
  }
  if (excluded < 0 || excluded >= m) {
    throw ConfigError("excluded index out of range");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(embeddings.rows());
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i != excluded) sum += embeddings.col(i);
  }
  return sum / static_cast<double>(m - 1);
}

namespace {

void CheckBatch(const EmbeddingBatch& batch) {
  if (batch.speakers < 1 || batch.utterances < 2 ||
      batch.values.cols() != batch.speakers * batch.utterances) {
    throw ConfigError("GE2E batch needs N >= 1 speakers and M >= 2 "
                      "utterances per speaker, got N=" +
                      std::to_string(batch.speakers) +
                      " M=" + std::to_string(batch.utterances));
  }
}

// Centroids and leave-one-out centroids of every speaker.
struct Centroids {
  Eigen::MatrixXd full;  // D x N
  Eigen::MatrixXd loo;   // D x N*M, column j*M + i excludes e_ji
};

Centroids ComputeCentroids(const EmbeddingBatch& batch) {
  const int n = batch.speakers, m = batch.utterances;
  Centroids c;
  c.full.resize(batch.values.rows(), n);
  c.loo.resize(batch.values.rows(), n * m);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd sum = batch.speaker(j).rowwise().sum();
    c.full.col(j) = sum / m;
    for (int i = 0; i < m; ++i) {
      c.loo.col(j * m + i) = (sum - batch.col(j, i)) / (m - 1);
    }
  }
  return c;
}

const Eigen::VectorXd& CheckedCentroid(const Eigen::VectorXd& c, int speaker) {
  if (!(c.norm() > 0.0)) {
    throw NumericError("zero-norm centroid for speaker " +
                       std::to_string(speaker) + " (degenerate batch)");
  }
  return c;
}

}  // namespace

SimilarityMatrix ComputeSimilarity(const EmbeddingBatch& batch,
                                   const Ge2eScalars& scalars) {
  CheckBatch(batch);
  const int n = batch.speakers, m = batch.utterances;
  const Centroids cents = ComputeCentroids(batch);
  SimilarityMatrix sim{Eigen::MatrixXd(n * m, n), n, m};
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd c =
            k == j ? cents.loo.col(j * m + i) : cents.full.col(k);
        sim.values(j * m + i, k) =
            scalars.w * Cosine(batch.col(j, i), CheckedCentroid(c, k)) +
            scalars.b;
      }
    }
  }
  return sim;
}

double Ge2eLoss(const SimilarityMatrix& sim) {
  const int n = sim.speakers, m = sim.utterances;
  double total = 0.0;
  for (int row = 0; row < n * m; ++row) {
    const int j = row / m;
    const double mx = sim.values.row(row).maxCoeff();
    const double lse =
        mx + std::log((sim.values.row(row).array() - mx).exp().sum());
    total += lse - sim.values(row, j);
  }
  return total / (n * m);
}

Ge2eGradients Ge2eLossGradients(const EmbeddingBatch& batch,
                                const Ge2eScalars& scalars) {
  CheckBatch(batch);
  const int n = batch.speakers, m = batch.utterances;
  const Eigen::Index dim = batch.values.rows();
  const double inv_rows = 1.0 / (n * m);
  const Centroids cents = ComputeCentroids(batch);

  Ge2eGradients out;
  out.d_embeddings = Eigen::MatrixXd::Zero(dim, n * m);
  Eigen::MatrixXd d_full = Eigen::MatrixXd::Zero(dim, n);
  Eigen::MatrixXd d_loo = Eigen::MatrixXd::Zero(dim, n * m);

  Eigen::VectorXd cos(n), s(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const int row = j * m + i;
      const auto e = batch.col(j, i);
      for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd& c =
            k == j ? cents.loo.col(row).eval() : cents.full.col(k).eval();
        cos[k] = Cosine(e, CheckedCentroid(c, k));
        s[k] = scalars.w * cos[k] + scalars.b;
      }
      const double mx = s.maxCoeff();
      const Eigen::VectorXd p = (s.array() - mx).exp().matrix();
      const double z = p.sum();
      total += mx + std::log(z) - s[j];

      const double e_norm = e.norm();
      for (int k = 0; k < n; ++k) {
        // dL/dS = softmax - onehot, averaged over rows.
        const double g = (p[k] / z - (k == j ? 1.0 : 0.0)) * inv_rows;
        out.d_w += g * cos[k];
        out.d_b += g;
        const double gc = g * scalars.w;
        const Eigen::VectorXd c =
            k == j ? cents.loo.col(row).eval() : cents.full.col(k).eval();
        const double c_norm = c.norm();
        // d cos(a, c) / da = c / (|a||c|) - cos * a / |a|^2.
        out.d_embeddings.col(row) +=
            gc * (c / (e_norm * c_norm) - cos[k] * e / (e_norm * e_norm));
        const Eigen::VectorXd dc =
            gc * (e / (e_norm * c_norm) - cos[k] * c / (c_norm * c_norm));
        if (k == j) {
          d_loo.col(row) += dc;
        } else {
          d_full.col(k) += dc;
        }
      }
    }
  }

  // Centroid coupling: c_k = mean_i e_ki, c_j^(-i) = (sum_j - e_ji)/(M-1).
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd loo_sum = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < m; ++i) loo_sum += d_loo.col(j * m + i);
    for (int i = 0; i < m; ++i) {
      const int row = j * m + i;
      out.d_embeddings.col(row) += d_full.col(j) / m;
      out.d_embeddings.col(row) += (loo_sum - d_loo.col(row)) / (m - 1);
    }
  }
  out.loss = total * inv_rows;
  return out;
}

}  // namespace ge2e
