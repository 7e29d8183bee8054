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

// Generalized end-to-end (softmax) loss over an N speakers x M utterances
// batch of embeddings, with analytic gradients.

#ifndef GE2E_GE2E_LOSS_H_
#define GE2E_GE2E_LOSS_H_

#include <Eigen/Core>

namespace ge2e {

struct Ge2eScalars {
  double w = 10.0;
  double b = -5.0;
};

inline constexpr double kMinScale = 1e-4;

// D x (N*M) embeddings; column j*M + i is utterance i of speaker j.
struct EmbeddingBatch {
  Eigen::MatrixXd values;
  int speakers = 0;
  int utterances = 0;

  auto col(int j, int i) const { return values.col(j * utterances + i); }
  auto speaker(int j) const {
    return values.middleCols(j * utterances, utterances);
  }
};

// Rows indexed (j, i) -> j*M + i, one column per centroid k.
struct SimilarityMatrix {
  Eigen::MatrixXd values;
  int speakers = 0;
  int utterances = 0;
};

// a.b / (|a| |b|). Throws NumericError when either norm is zero.
double Cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b);

// Arithmetic mean of the columns (not re-normalized).
Eigen::VectorXd Centroid(const Eigen::Ref<const Eigen::MatrixXd>& embeddings);

// Mean of all columns except `excluded`. Requires at least two columns.
Eigen::VectorXd LeaveOneOutCentroid(
    const Eigen::Ref<const Eigen::MatrixXd>& embeddings, int excluded);

SimilarityMatrix ComputeSimilarity(const EmbeddingBatch& batch,
                                   const Ge2eScalars& scalars);

// Mean over rows of -S[row, j] + logsumexp(S[row, :]).
double Ge2eLoss(const SimilarityMatrix& sim);

struct Ge2eGradients {
  double loss = 0.0;
  Eigen::MatrixXd d_embeddings;  // same layout as EmbeddingBatch::values
  double d_w = 0.0;
  double d_b = 0.0;
};

Ge2eGradients Ge2eLossGradients(const EmbeddingBatch& batch,
                                const Ge2eScalars& scalars);

}  // namespace ge2e

#endif  // GE2E_GE2E_LOSS_H_
