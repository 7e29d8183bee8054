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

#include "ge2e/network.h"

#include <cmath>
#include <random>

#include "ge2e/error.h"

namespace ge2e {

void NetworkShape::Validate() const {
  if (input_dim < 1 || hidden < 1 || layers < 1 || embedding < 1) {
    throw ConfigError("network dimensions must all be positive");
  }
}

template <typename T>
NetworkParams<T> NetworkParams<T>::Zeros(const NetworkShape& shape) {
  shape.Validate();
  NetworkParams p;
  p.shape = shape;
  const int h = shape.hidden;
  for (int l = 0; l < shape.layers; ++l) {
    const int in = l == 0 ? shape.input_dim : h;
    p.lstm.push_back({Mat<T>::Zero(4 * h, in), Mat<T>::Zero(4 * h, h),
                      Vec<T>::Zero(4 * h)});
  }
  p.proj_weight = Mat<T>::Zero(shape.embedding, h);
  p.proj_bias = Vec<T>::Zero(shape.embedding);
  return p;
}

template <typename T>
size_t NetworkParams<T>::NumParameters() const {
  size_t n = 0;
  ForEachTensor([&](const std::string&, const auto& t) { n += t.size(); });
  return n;
}

template <typename T>
template <typename U>
NetworkParams<U> NetworkParams<T>::Cast() const {
  NetworkParams<U> out;
  out.shape = shape;
  for (const auto& l : lstm) {
    out.lstm.push_back({l.weight_ih.template cast<U>(),
                        l.weight_hh.template cast<U>(),
                        l.bias.template cast<U>()});
  }
  out.proj_weight = proj_weight.template cast<U>();
  out.proj_bias = proj_bias.template cast<U>();
  return out;
}

NetworkParams<float> InitParams(const NetworkShape& shape, uint64_t seed) {
  auto p = NetworkParams<float>::Zeros(shape);
  std::mt19937_64 rng(seed);
  auto xavier = [&](auto block, int fan_in, int fan_out) {
    std::normal_distribution<double> dist(
        0.0, std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)));
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        block(r, c) = static_cast<float>(dist(rng));
      }
    }
  };
  const int h = shape.hidden;
  for (auto& layer : p.lstm) {
    const int in = static_cast<int>(layer.weight_ih.cols());
    for (int g = 0; g < 4; ++g) {
      xavier(layer.weight_ih.middleRows(g * h, h), in, h);
    }
    for (int g = 0; g < 4; ++g) {
      xavier(layer.weight_hh.middleRows(g * h, h), h, h);
    }
  }
  xavier(p.proj_weight.leftCols(h), h, shape.embedding);
  return p;
}

namespace {

template <typename T>
auto Sigmoid(const Eigen::ArrayBase<T>& x) {
  return (1 + (-x).exp()).inverse();
}

template <typename T>
void RequireFinite(const Mat<T>& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite ") + what +
                       " in network forward pass");
  }
}

}  // namespace

template <typename T>
Mat<T> Forward(const NetworkParams<T>& params, const Mat<T>& inputs, int batch,
               ForwardCache<T>* cache) {
  const NetworkShape& shape = params.shape;
  if (batch < 1 || inputs.rows() != shape.input_dim ||
      inputs.cols() % batch != 0 || inputs.cols() == 0) {
    throw ConfigError("network input has shape " +
                      std::to_string(inputs.rows()) + "x" +
                      std::to_string(inputs.cols()) + ", incompatible with " +
                      std::to_string(shape.input_dim) + " features and batch " +
                      std::to_string(batch));
  }
  const int length = static_cast<int>(inputs.cols() / batch);
  const int h = shape.hidden;
  if (cache) {
    cache->shape = shape;
    cache->length = length;
    cache->batch = batch;
    cache->layers.assign(shape.layers, {});
  }

  Mat<T> x = inputs;
  for (int l = 0; l < shape.layers; ++l) {
    const auto& lp = params.lstm[l];
    Mat<T> gates = lp.weight_ih * x;
    gates.colwise() += lp.bias;
    Mat<T> hidden(h, static_cast<Eigen::Index>(length) * batch);
    Mat<T> cell, tanh_cell;
    if (cache) {
      cell.resize(h, hidden.cols());
      tanh_cell.resize(h, hidden.cols());
    }
    Mat<T> hprev = Mat<T>::Zero(h, batch);
    Mat<T> cprev = Mat<T>::Zero(h, batch);
    for (int t = 0; t < length; ++t) {
      auto z = gates.middleCols(t * batch, batch);
      z.noalias() += lp.weight_hh * hprev;
      z.middleRows(0, 2 * h) = Sigmoid(z.middleRows(0, 2 * h).array()).matrix();
      z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
      z.middleRows(3 * h, h) = Sigmoid(z.middleRows(3 * h, h).array()).matrix();
      cprev = (z.middleRows(h, h).array() * cprev.array() +
               z.middleRows(0, h).array() * z.middleRows(2 * h, h).array())
                  .matrix();
      const Mat<T> tc = cprev.array().tanh().matrix();
      hprev = (z.middleRows(3 * h, h).array() * tc.array()).matrix();
      hidden.middleCols(t * batch, batch) = hprev;
      if (cache) {
        cell.middleCols(t * batch, batch) = cprev;
        tanh_cell.middleCols(t * batch, batch) = tc;
      }
    }
    RequireFinite(hidden, "LSTM activation");
    if (cache) {
      auto& cl = cache->layers[l];
      cl.input = std::move(x);
      cl.gates = std::move(gates);
      cl.cell = std::move(cell);
      cl.tanh_cell = std::move(tanh_cell);
      cl.hidden = hidden;
    }
    x = std::move(hidden);
  }

  const auto last = x.middleCols(static_cast<Eigen::Index>(length - 1) * batch,
                                 batch);
  Mat<T> proj = params.proj_weight * last;
  proj.colwise() += params.proj_bias;
  RequireFinite(proj, "projection output");
  Vec<T> norms(batch);
  for (int b = 0; b < batch; ++b) {
    double sq = 0.0;
    for (Eigen::Index r = 0; r < proj.rows(); ++r) {
      sq += static_cast<double>(proj(r, b)) * proj(r, b);
    }
    if (!(sq > 0.0)) {
      throw NumericError("projection output is the zero vector; embedding "
                         "normalization undefined");
    }
    norms[b] = static_cast<T>(std::sqrt(sq));
  }
  Mat<T> emb = proj * norms.cwiseInverse().asDiagonal();
  if (cache) {
    cache->projection = std::move(proj);
    cache->norms = norms;
    cache->embeddings = emb;
  }
  return emb;
}

template <typename T>
NetworkParams<T> Backward(const NetworkParams<T>& params,
                          const ForwardCache<T>& cache,
                          const Mat<T>& grad_embeddings) {
  const NetworkShape& shape = params.shape;
  if (!(cache.shape == shape) ||
      static_cast<int>(cache.layers.size()) != shape.layers ||
      cache.embeddings.cols() != cache.batch ||
      grad_embeddings.rows() != shape.embedding ||
      grad_embeddings.cols() != cache.batch) {
    throw ConfigError("forward cache does not match parameters or gradient");
  }
  const int h = shape.hidden, batch = cache.batch, length = cache.length;
  auto grads = NetworkParams<T>::Zeros(shape);

  // Through e = y / |y|: dy = (de - e <e, de>) / |y|.
  const Mat<T>& emb = cache.embeddings;
  Mat<T> dy(shape.embedding, batch);
  for (int b = 0; b < batch; ++b) {
    const T dot = emb.col(b).dot(grad_embeddings.col(b));
    dy.col(b) = (grad_embeddings.col(b) - emb.col(b) * dot) / cache.norms[b];
  }
  const auto& top = cache.layers.back().hidden;
  const auto last =
      top.middleCols(static_cast<Eigen::Index>(length - 1) * batch, batch);
  grads.proj_weight.noalias() = dy * last.transpose();
  grads.proj_bias = dy.rowwise().sum();

  Mat<T> dhidden = Mat<T>::Zero(h, static_cast<Eigen::Index>(length) * batch);
  dhidden.middleCols(static_cast<Eigen::Index>(length - 1) * batch, batch) =
      params.proj_weight.transpose() * dy;

  for (int l = shape.layers - 1; l >= 0; --l) {
    const auto& cl = cache.layers[l];
    const auto& lp = params.lstm[l];
    Mat<T> dz(4 * h, static_cast<Eigen::Index>(length) * batch);
    Mat<T> dh_next = Mat<T>::Zero(h, batch);
    Mat<T> dc_next = Mat<T>::Zero(h, batch);
    for (int t = length - 1; t >= 0; --t) {
      const auto cols = [&](const Mat<T>& m) {
        return m.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
      };
      const auto gt = cols(cl.gates);
      const auto i = gt.middleRows(0, h).array();
      const auto f = gt.middleRows(h, h).array();
      const auto g = gt.middleRows(2 * h, h).array();
      const auto o = gt.middleRows(3 * h, h).array();
      const auto tc = cols(cl.tanh_cell).array();

      const Mat<T> dh = cols(dhidden) + dh_next;
      const auto dha = dh.array();
      Mat<T> dc = (dc_next.array() + dha * o * (1 - tc.square())).matrix();
      auto dzt = dz.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
      dzt.middleRows(3 * h, h) = (dha * tc * o * (1 - o)).matrix();
      dzt.middleRows(0, h) = (dc.array() * g * i * (1 - i)).matrix();
      dzt.middleRows(2 * h, h) = (dc.array() * i * (1 - g.square())).matrix();
      if (t > 0) {
        const auto cprev =
            cl.cell.middleCols(static_cast<Eigen::Index>(t - 1) * batch, batch)
                .array();
        dzt.middleRows(h, h) = (dc.array() * cprev * f * (1 - f)).matrix();
      } else {
        dzt.middleRows(h, h).setZero();
      }
      dc_next = (dc.array() * f).matrix();
      dh_next.noalias() = lp.weight_hh.transpose() * dzt;
    }
    auto& gl = grads.lstm[l];
    gl.weight_ih.noalias() = dz * cl.input.transpose();
    gl.bias = dz.rowwise().sum();
    if (length > 1) {
      const Eigen::Index n = static_cast<Eigen::Index>(length - 1) * batch;
      gl.weight_hh.noalias() =
          dz.rightCols(n) * cl.hidden.leftCols(n).transpose();
    }
    if (l > 0) dhidden.noalias() = lp.weight_ih.transpose() * dz;
  }
  return grads;
}

Mat<float> PackWindows(std::span<const FrameWindow> windows, int length) {
  const Eigen::Index batch = static_cast<Eigen::Index>(windows.size());
  Mat<float> out(kNumMelBins, static_cast<Eigen::Index>(length) * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto& w = windows[b];
    if (!w.frames || w.start < 0 || w.start + length > w.frames->frames()) {
      throw ConfigError("frame window out of range");
    }
    for (int t = 0; t < length; ++t) {
      out.col(t * batch + b) = w.frames->values.row(w.start + t).transpose();
    }
  }
  return out;
}

template <typename T>
double GlobalNorm(const GradientSet<T>& grads) {
  double sq = grads.w * grads.w + grads.b * grads.b;
  grads.net.ForEachTensor([&](const std::string&, const auto& t) {
    sq += t.template cast<double>().squaredNorm();
  });
  return std::sqrt(sq);
}

template <typename T>
GradientSet<T> ClipGradients(GradientSet<T> grads, double max_norm) {
  const double norm = GlobalNorm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    grads.net.ForEachTensor([&](const std::string&, auto& t) {
      t *= static_cast<T>(scale);
    });
    grads.w *= scale;
    grads.b *= scale;
  }
  return grads;
}

template struct NetworkParams<float>;
template struct NetworkParams<double>;
template NetworkParams<double> NetworkParams<float>::Cast<double>() const;
template NetworkParams<float> NetworkParams<double>::Cast<float>() const;
template NetworkParams<float> NetworkParams<float>::Cast<float>() const;
template Mat<float> Forward(const NetworkParams<float>&, const Mat<float>&, int,
                            ForwardCache<float>*);
template Mat<double> Forward(const NetworkParams<double>&, const Mat<double>&,
                             int, ForwardCache<double>*);
template NetworkParams<float> Backward(const NetworkParams<float>&,
                                       const ForwardCache<float>&,
                                       const Mat<float>&);
template NetworkParams<double> Backward(const NetworkParams<double>&,
                                        const ForwardCache<double>&,
                                        const Mat<double>&);
template double GlobalNorm(const GradientSet<float>&);
template double GlobalNorm(const GradientSet<double>&);
template GradientSet<float> ClipGradients(GradientSet<float>, double);
template GradientSet<double> ClipGradients(GradientSet<double>, double);

}  // namespace ge2e
