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

#ifndef GE2E_TRAINER_H_
#define GE2E_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ge2e/checkpoint.h"
#include "ge2e/frontend.h"
#include "ge2e/ge2e_loss.h"
#include "ge2e/network.h"

namespace ge2e {

struct BatchSpec {
  int speakers = 16;   // N
  int utterances = 4;  // M
  int min_frames = 140;
  int max_frames = 180;

  void Validate() const;
};

// Admitted partial-utterance features of one training speaker.
struct SpeakerFeatures {
  std::string speaker_id;
  std::vector<LogMelFrames> partials;
};
using FeaturePool = std::vector<SpeakerFeatures>;

struct TrainBatch {
  int length = 0;
  int speakers = 0;
  int utterances = 0;
  std::vector<int> speaker_index;  // into the pool, N entries, distinct
  // N*M entries, segment j*M + i: (partial index, first frame).
  std::vector<std::pair<int, int>> sources;
  Mat<float> inputs;  // 40 x L*N*M, see network.h for the layout
};

// Draws L, then N distinct speakers, then M partials per speaker (with
// replacement only when a speaker has fewer than M), then a random L-frame
// crop of each. Throws ConfigError when fewer than N speakers are eligible.
TrainBatch SampleBatch(const FeaturePool& pool, const BatchSpec& spec,
                       std::mt19937_64& rng);

struct TrainConfig {
  double learning_rate = 5e-5;
  int steps = 2000;
  uint64_t seed = 0;
  double clip_norm = 3.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int checkpoint_every = 500;
  NetworkShape shape;
  Ge2eScalars initial_scalars;

  // Warns (does not fail) when the learning rate leaves [1e-5, 1e-4].
  void Validate() const;
};

struct AdamState {
  int64_t step = 0;
  NetworkParams<float> m;
  NetworkParams<float> v;
  double m_w = 0, v_w = 0, m_b = 0, v_b = 0;

  static AdamState Zeros(const NetworkShape& shape);
};

// Bias-corrected Adam update of network and GE2E scalars; w is clamped to
// kMinScale afterwards. Throws NumericError on a non-finite gradient.
void AdamStep(NetworkParams<float>* params, Ge2eScalars* scalars,
              const GradientSet<float>& grads, AdamState* state,
              const TrainConfig& cfg);

struct TrainStepRecord {
  int step = 0;
  double loss = 0.0;
  double grad_norm_preclip = 0.0;
  int length = 0;
  double learning_rate = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainStepRecord> trace;
};

// Trains from InitParams(cfg.shape, cfg.seed). When checkpoint_dir is
// non-empty, writes step_<k>.ge2e every cfg.checkpoint_every steps plus
// final.ge2e and loss.csv. Throws NumericError naming the step on divergence.
TrainResult Train(const FeaturePool& pool, const TrainConfig& cfg,
                  const BatchSpec& spec,
                  const std::filesystem::path& checkpoint_dir = {});

// CSV columns: step, loss, grad_norm_preclip, L, lr.
void WriteLossTrace(const std::filesystem::path& path,
                    const std::vector<TrainStepRecord>& trace);

}  // namespace ge2e

#endif  // GE2E_TRAINER_H_
