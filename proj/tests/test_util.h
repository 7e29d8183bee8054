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

// Shared helpers for the unit and acceptance tests: independent oracles
// (brute-force GE2E loss, exhaustive EER sweep, direct DFT), finite-difference
// gradient checks and scratch directories.

#ifndef GE2E_TESTS_TEST_UTIL_H_
#define GE2E_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "ge2e/ge2e_loss.h"
#include "ge2e/network.h"

namespace ge2e::testing {

// Relative error with an absolute floor in the denominator, so that
// components whose true value is zero (such as d/db of the loss) are judged
// on absolute error instead of dividing by zero.
inline constexpr double kGradFloor = 1e-5;

inline double RelErr(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() /
            ("ge2e_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline Eigen::MatrixXd RandomUnitColumns(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
    m.col(c).normalize();
  }
  return m;
}

// GE2E similarity and loss written out entry by entry, sharing nothing with
// the library code.
inline double OracleCos(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

inline double OracleSimilarity(const Eigen::MatrixXd& e, int n, int m, int j,
                               int i, int k, double w, double b) {
  const int d = static_cast<int>(e.rows());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  int count = 0;
  for (int u = 0; u < m; ++u) {
    if (k == j && u == i) continue;
    c += e.col(k * m + u);
    ++count;
  }
  c /= count;
  (void)n;
  return w * OracleCos(e.col(j * m + i), c) + b;
}

inline double OracleLoss(const Eigen::MatrixXd& e, int n, int m, double w,
                         double b) {
  double total = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      double denom = 0;
      for (int k = 0; k < n; ++k) denom += std::exp(OracleSimilarity(e, n, m, j, i, k, w, b));
      total += -OracleSimilarity(e, n, m, j, i, j, w, b) + std::log(denom);
    }
  }
  return total / (n * m);
}

// Exhaustive EER: FAR and FRR at every candidate threshold (each score,
// each midpoint between neighbouring distinct scores, below-min and
// above-max), then the crossing of the two curves by linear interpolation
// between the last point with FAR > FRR and the first with FAR <= FRR.
inline double OracleEer(const std::vector<double>& gen,
                        const std::vector<double>& imp) {
  std::vector<double> all = gen;
  all.insert(all.end(), imp.begin(), imp.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> cand;
  cand.push_back(all.front() - 1);
  for (size_t i = 0; i < all.size(); ++i) {
    cand.push_back(all[i]);
    if (i + 1 < all.size()) cand.push_back(0.5 * (all[i] + all[i + 1]));
  }
  cand.push_back(all.back() + 1);
  auto far = [&](double t) {
    double c = 0;
    for (double s : imp) c += s >= t;
    return c / imp.size();
  };
  auto frr = [&](double t) {
    double c = 0;
    for (double s : gen) c += s < t;
    return c / gen.size();
  };
  for (size_t i = 0; i < cand.size(); ++i) {
    const double d = far(cand[i]) - frr(cand[i]);
    if (d <= 0) {
      if (i == 0 || d == 0) return 100 * 0.5 * (far(cand[i]) + frr(cand[i]));
      const double d0 = far(cand[i - 1]) - frr(cand[i - 1]);
      const double a = d0 / (d0 - d);
      const double f = far(cand[i - 1]) + a * (far(cand[i]) - far(cand[i - 1]));
      const double r = frr(cand[i - 1]) + a * (frr(cand[i]) - frr(cand[i - 1]));
      return 100 * 0.5 * (f + r);
    }
  }
  return 100 * 0.5 * (far(cand.back()) + frr(cand.back()));
}

// Direct O(N^2) DFT power spectrum of one Hann-windowed frame.
inline std::vector<double> OraclePowerSpectrum(const std::vector<double>& frame,
                                               int fft_size) {
  const double pi = std::acos(-1.0);
  const int len = static_cast<int>(frame.size());
  std::vector<double> power(fft_size / 2 + 1);
  for (int k = 0; k <= fft_size / 2; ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < len; ++n) {
      const double win = 0.5 - 0.5 * std::cos(2 * pi * n / len);
      acc += win * frame[n] * std::polar(1.0, -2 * pi * k * n / fft_size);
    }
    power[k] = std::norm(acc);
  }
  return power;
}

// Largest relative error between analytic network gradients and central
// differences of f(params) = <upstream, Forward(params, x)> over every
// parameter entry. Also reports the worst tensor name.
inline double NetworkGradCheck(const NetworkParams<double>& params,
                               const Mat<double>& inputs, int batch,
                               const Mat<double>& upstream, double h,
                               std::string* worst_tensor = nullptr) {
  ForwardCache<double> cache;
  Forward(params, inputs, batch, &cache);
  const NetworkParams<double> grad = Backward(params, cache, upstream);
  auto objective = [&](const NetworkParams<double>& p) {
    return (upstream.array() * Forward(p, inputs, batch).array()).sum();
  };
  std::vector<Mat<double>> gtensors;
  grad.ForEachTensor([&](const std::string&, const auto& t) {
    gtensors.push_back(Mat<double>(t));
  });
  double worst = 0;
  NetworkParams<double> probe = params;
  size_t index = 0;
  probe.ForEachTensor([&](const std::string& name, auto& t) {
    const Mat<double>& g = gtensors[index++];
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const double keep = t(r, c);
        t(r, c) = keep + h;
        const double up = objective(probe);
        t(r, c) = keep - h;
        const double down = objective(probe);
        t(r, c) = keep;
        const double e = RelErr(g(r, c), (up - down) / (2 * h));
        if (e > worst) {
          worst = e;
          if (worst_tensor) *worst_tensor = name;
        }
      }
    }
  });
  return worst;
}

// Largest relative error between Ge2eLossGradients and central differences
// over every embedding entry, w and b.
inline double Ge2eGradCheck(const Eigen::MatrixXd& e, int n, int m,
                            const Ge2eScalars& s, double h) {
  const Ge2eGradients g = Ge2eLossGradients({e, n, m}, s);
  double worst = 0;
  Eigen::MatrixXd probe = e;
  for (Eigen::Index c = 0; c < e.cols(); ++c) {
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
      probe(r, c) = e(r, c) + h;
      const double up = OracleLoss(probe, n, m, s.w, s.b);
      probe(r, c) = e(r, c) - h;
      const double down = OracleLoss(probe, n, m, s.w, s.b);
      probe(r, c) = e(r, c);
      worst = std::max(worst, RelErr(g.d_embeddings(r, c), (up - down) / (2 * h)));
    }
  }
  const double dw = (OracleLoss(e, n, m, s.w + h, s.b) - OracleLoss(e, n, m, s.w - h, s.b)) / (2 * h);
  const double db = (OracleLoss(e, n, m, s.w, s.b + h) - OracleLoss(e, n, m, s.w, s.b - h)) / (2 * h);
  worst = std::max(worst, RelErr(g.d_w, dw));
  worst = std::max(worst, RelErr(g.d_b, db));
  return worst;
}

}  // namespace ge2e::testing

#endif  // GE2E_TESTS_TEST_UTIL_H_
