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

// Waveform -> log-mel partial utterances: volume normalization, energy VAD,
// quiet-interval pruning, partial segmentation and 40-band log-mel features.

#ifndef GE2E_FRONTEND_H_
#define GE2E_FRONTEND_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ge2e/wav.h"

namespace ge2e {

inline constexpr int kFrameLength = 400;  // 25 ms at 16 kHz
inline constexpr int kFrameShift = 160;   // 10 ms
inline constexpr int kFftSize = 512;
inline constexpr int kNumFftBins = kFftSize / 2 + 1;
inline constexpr int kNumMelBins = 40;
inline constexpr int kMinPartialFrames = 180;
inline constexpr double kMelEnergyFloor = 1e-10;

struct VadConfig {
  double window_ms = 30.0;
  double max_silence_ms = 6.0;
  double smoothing_ms = 8.0;
  // Level relative to the waveform peak below which audio counts as silence
  // and below which whole intervals are pruned.
  double prune_threshold_db = -30.0;

  // Throws ConfigError when a duration is not positive or the threshold is
  // not negative.
  void Validate() const;
};

// Half-open sample range [begin, end).
struct Interval {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  bool operator==(const Interval&) const = default;
};

struct PartialUtterance {
  std::vector<float> samples;
  std::string source_utterance_id;
  size_t offset = 0;
};

using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// T x 40 log-mel energies, one row per 25 ms frame at 10 ms hop.
struct LogMelFrames {
  FeatureMatrix values;

  int frames() const { return static_cast<int>(values.rows()); }
};

// Number of complete 400-sample frames at a 160-sample hop; 0 when shorter
// than one frame.
int FrameCount(size_t num_samples);

// Peak normalization to max |x| = 1. Silent input is returned unchanged.
Waveform NormalizeVolume(const Waveform& wave);

// Sorted, disjoint activity intervals. Gaps shorter than max_silence_ms are
// merged into the surrounding activity.
std::vector<Interval> DetectVoiceActivity(const Waveform& wave,
                                          const VadConfig& cfg);

// Drops intervals whose RMS level is below threshold_db relative to the peak
// absolute amplitude of the waveform.
std::vector<Interval> PruneQuietIntervals(std::vector<Interval> intervals,
                                          const Waveform& wave,
                                          double threshold_db);

// One partial per interval, keeping those with at least kMinPartialFrames
// frames.
std::vector<PartialUtterance> SegmentPartials(
    const Waveform& wave, const std::vector<Interval>& intervals,
    const std::string& utterance_id = "");

// Hann-windowed 512-point power spectrum -> 40 triangular mel filters ->
// natural log with a 1e-10 energy floor.
LogMelFrames ExtractLogMel(std::span<const float> samples);
LogMelFrames ExtractLogMel(const PartialUtterance& partial);

// Triangular mel filterbank over 0..8000 Hz on the 257 one-sided FFT bins.
class MelFilterbank {
 public:
  MelFilterbank(int num_bins, int fft_size, int sample_rate, double low_hz,
                double high_hz);

  static const MelFilterbank& Default();

  // num_bins x (fft_size / 2 + 1), nonnegative.
  const Eigen::MatrixXd& weights() const { return weights_; }
  double center_hz(int bin) const { return centers_hz_[bin]; }
  int num_bins() const { return static_cast<int>(weights_.rows()); }

  static double HzToMel(double hz);
  static double MelToHz(double mel);

 private:
  Eigen::MatrixXd weights_;
  std::vector<double> centers_hz_;
};

// The full per-utterance chain: normalize, VAD, prune, segment, log-mel.
// Returns the features of every admitted partial in time order.
std::vector<LogMelFrames> PreprocessUtterance(const Waveform& wave,
                                              const VadConfig& cfg,
                                              const std::string& id = "");

// "LMEL" feature dumps: magic, u32 version, u32 rows, u32 cols, f32 data.
void SaveLogMel(const std::filesystem::path& path, const LogMelFrames& frames);
LogMelFrames LoadLogMel(const std::filesystem::path& path);

}  // namespace ge2e

#endif  // GE2E_FRONTEND_H_
