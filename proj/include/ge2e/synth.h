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

// Seeded synthetic speaker cohorts. Each speaker is a parametric voice (pitch,
// three resonances, spectral tilt, per-harmonic amplitude pattern); each
// utterance is a sequence of voiced segments separated by pauses, with
// syllable-level resonance movement shared by all speakers, per-utterance
// jitter of the voice parameters and additive noise.

#ifndef GE2E_SYNTH_H_
#define GE2E_SYNTH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ge2e/manifest.h"
#include "ge2e/wav.h"

namespace ge2e {

struct GroupSpec {
  std::string name = "ctrl";
  double weight = 1.0;
  double age_mean = 12.16;
  double age_std = 3.72;
  double wrr_mean = 65.87;
  double wrr_std = 12.44;
  // Multiplies the per-utterance jitter; > 1 models a pathological voice.
  double variability = 1.0;
};

struct SynthConfig {
  int speakers = 8;
  int utterances = 8;
  uint64_t seed = 0;
  std::vector<GroupSpec> groups = {GroupSpec{}};
  // Relative per-utterance spread of pitch and resonances.
  double jitter = 0.04;
  // Signal-to-noise ratio of the additive white noise, in dB; each utterance
  // draws uniformly within snr_db +- snr_spread_db.
  double snr_db = 30.0;
  double snr_spread_db = 0.0;
  // Scales the population ranges of the voice parameters around their
  // centres; smaller values make speakers more alike.
  double voice_spread = 1.0;
  int segments_per_utterance = 2;
  double min_segment_s = 1.95;
  double max_segment_s = 2.6;

  void Validate() const;
};

struct VoiceProfile {
  double f0_hz = 120.0;
  std::array<double, 3> formants_hz{};
  std::array<double, 3> bandwidths_hz{};
  double tilt = 1.0;
  std::vector<double> harmonic_gains;  // per-harmonic multiplicative pattern
};

VoiceProfile SampleVoice(std::mt19937_64& rng, double spread = 1.0);

// Renders one utterance of `voice`, already quantized to the 16-bit grid.
// jitter == 0 renders the voice parameters exactly; syllable movement and
// noise still depend on rng.
Waveform SynthesizeUtterance(const VoiceProfile& voice, const SynthConfig& cfg,
                             double variability, std::mt19937_64& rng);

// Writes <out_dir>/wav/<speaker>/<speaker>_<k>.wav for every utterance and
// <out_dir>/manifest.jsonl, and returns the manifest.
CohortManifest SynthesizeCohort(const SynthConfig& cfg,
                                const std::filesystem::path& out_dir);

}  // namespace ge2e

#endif  // GE2E_SYNTH_H_
