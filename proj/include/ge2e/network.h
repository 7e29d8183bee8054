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

// Stacked LSTM d-vector network: log-mel frames -> LSTM layers -> affine
// projection of the last frame's top hidden state -> L2 normalization.
//
// Sequences are batched. A batch of B sequences of length L is stored as an
// (input_dim x L*B) matrix whose column block [t*B, (t+1)*B) holds frame t of
// every sequence. Gate blocks inside the stacked LSTM matrices are ordered
// input, forget, cell candidate, output.

#ifndef GE2E_NETWORK_H_
#define GE2E_NETWORK_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ge2e/frontend.h"

namespace ge2e {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct NetworkShape {
  int input_dim = kNumMelBins;
  int hidden = 768;
  int layers = 3;
  int embedding = 256;

  void Validate() const;
  bool operator==(const NetworkShape&) const = default;
};

template <typename T>
struct LstmLayerParams {
  Mat<T> weight_ih;  // 4H x input
  Mat<T> weight_hh;  // 4H x H
  Vec<T> bias;       // 4H
};

template <typename T>
struct NetworkParams {
  NetworkShape shape;
  std::vector<LstmLayerParams<T>> lstm;
  Mat<T> proj_weight;  // E x H
  Vec<T> proj_bias;    // E

  static NetworkParams Zeros(const NetworkShape& shape);

  // Visits every tensor as (name, matrix), in checkpoint order.
  template <typename Fn>
  void ForEachTensor(Fn&& fn) {
    VisitTensors(*this, fn);
  }
  template <typename Fn>
  void ForEachTensor(Fn&& fn) const {
    VisitTensors(*this, fn);
  }

  size_t NumParameters() const;

  template <typename U>
  NetworkParams<U> Cast() const;

 private:
  template <typename Self, typename Fn>
  static void VisitTensors(Self& self, Fn& fn) {
    for (size_t l = 0; l < self.lstm.size(); ++l) {
      const std::string p = "lstm." + std::to_string(l) + ".";
      fn(p + "weight_ih", self.lstm[l].weight_ih);
      fn(p + "weight_hh", self.lstm[l].weight_hh);
      fn(p + "bias", self.lstm[l].bias);
    }
    fn(std::string("proj.weight"), self.proj_weight);
    fn(std::string("proj.bias"), self.proj_bias);
  }
};

// Gradients of one loss with respect to the network and the two GE2E scalars.
template <typename T>
struct GradientSet {
  NetworkParams<T> net;
  double w = 0.0;
  double b = 0.0;

  static GradientSet Zeros(const NetworkShape& shape) {
    return {NetworkParams<T>::Zeros(shape), 0.0, 0.0};
  }
};

template <typename T>
struct ForwardCache {
  NetworkShape shape;
  int length = 0;
  int batch = 0;
  struct Layer {
    Mat<T> input;   // in x L*B
    Mat<T> gates;   // 4H x L*B, post-activation
    Mat<T> cell;    // H x L*B
    Mat<T> tanh_cell;
    Mat<T> hidden;  // H x L*B
  };
  std::vector<Layer> layers;
  Mat<T> projection;  // E x B, before normalization
  Vec<T> norms;       // B
  Mat<T> embeddings;  // E x B
};

// Xavier normal weights, zero biases. Identical seeds give bitwise-identical
// parameters.
NetworkParams<float> InitParams(const NetworkShape& shape, uint64_t seed);

// Returns the E x B matrix of unit-norm embeddings. Throws NumericError when an
// activation is non-finite or a projection is the zero vector.
template <typename T>
Mat<T> Forward(const NetworkParams<T>& params, const Mat<T>& inputs, int batch,
               ForwardCache<T>* cache = nullptr);

// Exact gradients of <grad_embeddings, embeddings> with respect to every
// parameter. Throws ConfigError if the cache does not match.
template <typename T>
NetworkParams<T> Backward(const NetworkParams<T>& params,
                          const ForwardCache<T>& cache,
                          const Mat<T>& grad_embeddings);

// One window of frames taken from a feature matrix.
struct FrameWindow {
  const LogMelFrames* frames = nullptr;
  int start = 0;
};

// Packs equal-length windows into the batched layout described above.
Mat<float> PackWindows(std::span<const FrameWindow> windows, int length);

template <typename T>
double GlobalNorm(const GradientSet<T>& grads);

// Rescales all gradients by max_norm / norm when the global L2 norm exceeds
// max_norm.
template <typename T>
GradientSet<T> ClipGradients(GradientSet<T> grads, double max_norm = 3.0);

}  // namespace ge2e

#endif  // GE2E_NETWORK_H_
