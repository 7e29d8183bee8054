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

#include "ge2e/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ge2e/error.h"
#include "ge2e/format.h"
#include "ge2e/log.h"

namespace ge2e {

void BatchSpec::Validate() const {
  if (speakers < 2) {
    throw ConfigError("batch needs at least 2 speakers (GE2E loss is "
                      "identically zero for one speaker)");
  }
  if (utterances < 2) throw ConfigError("batch needs at least 2 utterances");
  if (min_frames < 1 || min_frames > max_frames ||
      max_frames > kMinPartialFrames) {
    throw ConfigError("segment length range must satisfy 1 <= min <= max <= " +
                      std::to_string(kMinPartialFrames));
  }
}

namespace {

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// First k entries of a uniformly shuffled 0..n-1.
std::vector<int> DrawDistinct(std::mt19937_64& rng, int n, int k) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) std::swap(idx[i], idx[UniformInt(rng, i, n - 1)]);
  idx.resize(k);
  return idx;
}

}  // namespace

TrainBatch SampleBatch(const FeaturePool& pool, const BatchSpec& spec,
                       std::mt19937_64& rng) {
  spec.Validate();
  std::vector<int> eligible;
  for (size_t s = 0; s < pool.size(); ++s) {
    const auto& parts = pool[s].partials;
    if (std::any_of(parts.begin(), parts.end(), [&](const LogMelFrames& p) {
          return p.frames() >= spec.max_frames;
        })) {
      eligible.push_back(static_cast<int>(s));
    }
  }
  if (static_cast<int>(eligible.size()) < spec.speakers) {
    throw ConfigError("need " + std::to_string(spec.speakers) +
                      " speakers with a partial of at least " +
                      std::to_string(spec.max_frames) + " frames, only " +
                      std::to_string(eligible.size()) + " available");
  }

  TrainBatch batch;
  batch.length = UniformInt(rng, spec.min_frames, spec.max_frames);
  batch.speakers = spec.speakers;
  batch.utterances = spec.utterances;
  for (int k : DrawDistinct(rng, static_cast<int>(eligible.size()),
                            spec.speakers)) {
    batch.speaker_index.push_back(eligible[k]);
  }

  std::vector<FrameWindow> windows;
  for (int s : batch.speaker_index) {
    const auto& parts = pool[s].partials;
    std::vector<int> usable;
    for (size_t p = 0; p < parts.size(); ++p) {
      if (parts[p].frames() >= batch.length) usable.push_back(static_cast<int>(p));
    }
    const int avail = static_cast<int>(usable.size());
    std::vector<int> chosen;
    if (avail >= spec.utterances) {
      for (int k : DrawDistinct(rng, avail, spec.utterances)) {
        chosen.push_back(usable[k]);
      }
    } else {
      for (int i = 0; i < spec.utterances; ++i) {
        chosen.push_back(usable[UniformInt(rng, 0, avail - 1)]);
      }
    }
    for (int p : chosen) {
      const int start = UniformInt(rng, 0, parts[p].frames() - batch.length);
      batch.sources.emplace_back(p, start);
      windows.push_back({&parts[p], start});
    }
  }
  batch.inputs = PackWindows(windows, batch.length);
  return batch;
}

void TrainConfig::Validate() const {
  if (steps < 0) throw ConfigError("steps must be nonnegative");
  if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (!(clip_norm > 0)) throw ConfigError("clip norm must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint interval must be >= 1");
  if (!(initial_scalars.w > 0)) throw ConfigError("initial w must be positive");
  shape.Validate();
  if (learning_rate < 1e-5 || learning_rate > 1e-4) {
    LogWarning("learning rate " + FormatG(learning_rate) +
               " is outside the usual [1e-5, 1e-4] range");
  }
}

AdamState AdamState::Zeros(const NetworkShape& shape) {
  AdamState s;
  s.m = NetworkParams<float>::Zeros(shape);
  s.v = NetworkParams<float>::Zeros(shape);
  return s;
}

void AdamStep(NetworkParams<float>* params, Ge2eScalars* scalars,
              const GradientSet<float>& grads, AdamState* state,
              const TrainConfig& cfg) {
  if (!(grads.net.shape == params->shape) ||
      !(state->m.shape == params->shape)) {
    throw ConfigError("Adam state, gradients and parameters disagree in shape");
  }
  bool finite = std::isfinite(grads.w) && std::isfinite(grads.b);
  grads.net.ForEachTensor([&](const std::string&, const auto& t) {
    finite = finite && t.allFinite();
  });
  if (!finite) throw NumericError("non-finite gradient in Adam step");

  state->step += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state->step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state->step));
  const double lr = cfg.learning_rate, eps = cfg.epsilon;

  std::vector<Eigen::Map<Eigen::VectorXf>> p, g, m, v;
  auto collect = [](auto& params, auto& out) {
    params.ForEachTensor([&](const std::string&, auto& t) {
      out.emplace_back(const_cast<float*>(t.data()), t.size());
    });
  };
  collect(*params, p);
  collect(grads.net, g);
  collect(state->m, m);
  collect(state->v, v);
  for (size_t k = 0; k < p.size(); ++k) {
    for (Eigen::Index i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      const double mi = b1 * m[k][i] + (1 - b1) * gi;
      const double vi = b2 * v[k][i] + (1 - b2) * gi * gi;
      m[k][i] = static_cast<float>(mi);
      v[k][i] = static_cast<float>(vi);
      p[k][i] -= static_cast<float>(lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
    }
  }
  auto scalar_step = [&](double* x, double gx, double* mx, double* vx) {
    *mx = b1 * *mx + (1 - b1) * gx;
    *vx = b2 * *vx + (1 - b2) * gx * gx;
    *x -= lr * (*mx / c1) / (std::sqrt(*vx / c2) + eps);
  };
  scalar_step(&scalars->w, grads.w, &state->m_w, &state->v_w);
  scalar_step(&scalars->b, grads.b, &state->m_b, &state->v_b);
  scalars->w = std::max(scalars->w, kMinScale);
}

void WriteLossTrace(const std::filesystem::path& path,
                    const std::vector<TrainStepRecord>& trace) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "step,loss,grad_norm_preclip,L,lr\n";
  for (const auto& r : trace) {
    os << r.step << ',' << FormatG(r.loss) << ',' << FormatG(r.grad_norm_preclip)
       << ',' << r.length << ',' << FormatG(r.learning_rate) << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

TrainResult Train(const FeaturePool& pool, const TrainConfig& cfg,
                  const BatchSpec& spec,
                  const std::filesystem::path& checkpoint_dir) {
  cfg.Validate();
  spec.Validate();
  if (static_cast<int>(pool.size()) < 2) {
    throw ConfigError("training pool has " + std::to_string(pool.size()) +
                      " speaker(s); GE2E needs at least 2");
  }
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  TrainResult result;
  result.checkpoint.params = InitParams(cfg.shape, cfg.seed);
  result.checkpoint.scalars = cfg.initial_scalars;
  auto& params = result.checkpoint.params;
  auto& scalars = result.checkpoint.scalars;
  AdamState adam = AdamState::Zeros(cfg.shape);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int step = 1; step <= cfg.steps; ++step) {
    try {
      TrainBatch batch = SampleBatch(pool, spec, rng);
      const int count = batch.speakers * batch.utterances;
      ForwardCache<float> cache;
      const Mat<float> emb = Forward(params, batch.inputs, count, &cache);
      EmbeddingBatch eb{emb.cast<double>(), batch.speakers, batch.utterances};
      const Ge2eGradients lg = Ge2eLossGradients(eb, scalars);
      if (!std::isfinite(lg.loss)) throw NumericError("non-finite loss");

      GradientSet<float> grads{
          Backward(params, cache, Mat<float>(lg.d_embeddings.cast<float>())),
          lg.d_w, lg.d_b};
      const double norm = GlobalNorm(grads);
      grads = ClipGradients(std::move(grads), cfg.clip_norm);
      AdamStep(&params, &scalars, grads, &adam, cfg);
      result.trace.push_back(
          {step, lg.loss, norm, batch.length, cfg.learning_rate});
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) +
                         ": " + e.what());
    }
    if (step % 50 == 0 || step == cfg.steps) {
      LogInfo("step " + std::to_string(step) + " loss " +
              FormatFixed(result.trace.back().loss, 4));
    }
    if (!checkpoint_dir.empty() && step % cfg.checkpoint_every == 0) {
      SaveCheckpoint(checkpoint_dir / ("step_" + std::to_string(step) + ".ge2e"),
                     result.checkpoint);
    }
  }
  if (!checkpoint_dir.empty()) {
    SaveCheckpoint(checkpoint_dir / "final.ge2e", result.checkpoint);
    WriteLossTrace(checkpoint_dir / "loss.csv", result.trace);
  }
  return result;
}

}  // namespace ge2e
