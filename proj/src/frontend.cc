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

#include "ge2e/frontend.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "binary_io.h"

namespace ge2e {

void VadConfig::Validate() const {
  if (!(window_ms > 0) || !(max_silence_ms > 0) || !(smoothing_ms > 0)) {
    throw ConfigError("VAD durations must be positive");
  }
  if (!(prune_threshold_db < 0)) {
    throw ConfigError("VAD prune threshold must be negative dB re peak");
  }
}

int FrameCount(size_t num_samples) {
  if (num_samples < static_cast<size_t>(kFrameLength)) return 0;
  return static_cast<int>((num_samples - kFrameLength) / kFrameShift) + 1;
}

namespace {

float PeakAbs(std::span<const float> x) {
  float peak = 0.0f;
  for (float v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

size_t MsToSamples(double ms, int sample_rate) {
  return static_cast<size_t>(
      std::max(1.0, std::round(ms * sample_rate / 1000.0)));
}

}  // namespace

Waveform NormalizeVolume(const Waveform& wave) {
  Waveform out = wave;
  const float peak = PeakAbs(wave.samples);
  if (peak == 0.0f) return out;
  for (auto& s : out.samples) s /= peak;
  return out;
}

std::vector<Interval> DetectVoiceActivity(const Waveform& wave,
                                          const VadConfig& cfg) {
  cfg.Validate();
  const size_t n = wave.samples.size();
  const double peak = PeakAbs(wave.samples);
  if (n == 0 || peak == 0.0) return {};

  const size_t hop = MsToSamples(1.0, wave.sample_rate);
  const size_t win = std::min(MsToSamples(cfg.window_ms, wave.sample_rate), n);
  const size_t num_frames = (n - win) / hop + 1;

  std::vector<double> prefix(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double v = wave.samples[i] / peak;
    prefix[i + 1] = prefix[i] + v * v;
  }
  std::vector<double> energy(num_frames);
  for (size_t f = 0; f < num_frames; ++f) {
    const size_t b = f * hop;
    energy[f] = (prefix[b + win] - prefix[b]) / static_cast<double>(win);
  }

  // Centered moving average over the smoothing window, in frames.
  const size_t smooth = std::max<size_t>(
      1, static_cast<size_t>(std::round(cfg.smoothing_ms / 1.0)));
  const size_t half_lo = (smooth - 1) / 2, half_hi = smooth / 2;
  std::vector<double> eprefix(num_frames + 1, 0.0);
  for (size_t f = 0; f < num_frames; ++f) eprefix[f + 1] = eprefix[f] + energy[f];
  const double threshold = std::pow(10.0, cfg.prune_threshold_db / 10.0);
  std::vector<bool> active(num_frames);
  for (size_t f = 0; f < num_frames; ++f) {
    const size_t lo = f >= half_lo ? f - half_lo : 0;
    const size_t hi = std::min(num_frames - 1, f + half_hi);
    const double mean =
        (eprefix[hi + 1] - eprefix[lo]) / static_cast<double>(hi - lo + 1);
    active[f] = mean >= threshold;
  }

  // Frame f stands for the hop-sized slice around its window center; the
  // first and last frames also own the edges of the waveform.
  auto frame_begin = [&](size_t f) -> size_t {
    if (f == 0) return 0;
    return std::min(n, f * hop + (win - hop) / 2);
  };
  auto frame_end = [&](size_t f) -> size_t {
    if (f + 1 == num_frames) return n;
    return std::min(n, f * hop + (win + hop) / 2);
  };

  std::vector<Interval> runs;
  for (size_t f = 0; f < num_frames;) {
    if (!active[f]) {
      ++f;
      continue;
    }
    size_t g = f;
    while (g + 1 < num_frames && active[g + 1]) ++g;
    runs.push_back({frame_begin(f), frame_end(g)});
    f = g + 1;
  }

  const size_t max_gap = MsToSamples(cfg.max_silence_ms, wave.sample_rate);
  std::vector<Interval> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.begin - merged.back().end < max_gap) {
      merged.back().end = r.end;
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

std::vector<Interval> PruneQuietIntervals(std::vector<Interval> intervals,
                                          const Waveform& wave,
                                          double threshold_db) {
  const double peak = PeakAbs(wave.samples);
  if (peak == 0.0) return {};
  std::erase_if(intervals, [&](const Interval& iv) {
    if (iv.size() == 0) return true;
    double sum = 0.0;
    for (size_t i = iv.begin; i < iv.end; ++i) {
      sum += static_cast<double>(wave.samples[i]) * wave.samples[i];
    }
    const double rms = std::sqrt(sum / static_cast<double>(iv.size()));
    return 20.0 * std::log10(rms / peak) < threshold_db;
  });
  return intervals;
}

std::vector<PartialUtterance> SegmentPartials(
    const Waveform& wave, const std::vector<Interval>& intervals,
    const std::string& utterance_id) {
  std::vector<PartialUtterance> out;
  for (const auto& iv : intervals) {
    if (iv.end > wave.samples.size() || iv.begin >= iv.end) continue;
    if (FrameCount(iv.size()) < kMinPartialFrames) continue;
    PartialUtterance p;
    p.samples.assign(wave.samples.begin() + static_cast<ptrdiff_t>(iv.begin),
                     wave.samples.begin() + static_cast<ptrdiff_t>(iv.end));
    p.source_utterance_id = utterance_id;
    p.offset = iv.begin;
    out.push_back(std::move(p));
  }
  return out;
}

double MelFilterbank::HzToMel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelFilterbank::MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(int num_bins, int fft_size, int sample_rate,
                             double low_hz, double high_hz) {
  const int num_fft_bins = fft_size / 2 + 1;
  const double mel_lo = HzToMel(low_hz), mel_hi = HzToMel(high_hz);
  std::vector<double> edges(num_bins + 2);
  for (int i = 0; i < num_bins + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (num_bins + 1));
  }
  weights_ = Eigen::MatrixXd::Zero(num_bins, num_fft_bins);
  centers_hz_.resize(num_bins);
  for (int m = 0; m < num_bins; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    centers_hz_[m] = center;
    for (int k = 0; k < num_fft_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      weights_(m, k) = w;
    }
  }
}

const MelFilterbank& MelFilterbank::Default() {
  static const MelFilterbank bank(kNumMelBins, kFftSize, kSampleRate, 0.0,
                                  kSampleRate / 2.0);
  return bank;
}

LogMelFrames ExtractLogMel(std::span<const float> samples) {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFrameLength);
    for (int i = 0; i < kFrameLength; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kFrameLength);
    }
    return w;
  }();
  thread_local Eigen::FFT<double> fft;

  const auto& bank = MelFilterbank::Default().weights();
  const int frames = FrameCount(samples.size());
  LogMelFrames out;
  out.values.resize(frames, kNumMelBins);
  std::vector<double> buf(kFftSize, 0.0);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd power(kNumFftBins);
  for (int t = 0; t < frames; ++t) {
    const size_t base = static_cast<size_t>(t) * kFrameShift;
    for (int i = 0; i < kFrameLength; ++i) buf[i] = samples[base + i] * window[i];
    std::fill(buf.begin() + kFrameLength, buf.end(), 0.0);
    fft.fwd(spec, buf);
    for (int k = 0; k < kNumFftBins; ++k) power[k] = std::norm(spec[k]);
    const Eigen::VectorXd mel = bank * power;
    for (int m = 0; m < kNumMelBins; ++m) {
      out.values(t, m) =
          static_cast<float>(std::log(std::max(mel[m], kMelEnergyFloor)));
    }
  }
  return out;
}

LogMelFrames ExtractLogMel(const PartialUtterance& partial) {
  return ExtractLogMel(std::span<const float>(partial.samples));
}

std::vector<LogMelFrames> PreprocessUtterance(const Waveform& wave,
                                              const VadConfig& cfg,
                                              const std::string& id) {
  const Waveform normalized = NormalizeVolume(wave);
  auto intervals = DetectVoiceActivity(normalized, cfg);
  intervals = PruneQuietIntervals(std::move(intervals), normalized,
                                  cfg.prune_threshold_db);
  std::vector<LogMelFrames> out;
  for (const auto& p : SegmentPartials(normalized, intervals, id)) {
    out.push_back(ExtractLogMel(p));
  }
  return out;
}

namespace {
constexpr char kLogMelMagic[5] = "LMEL";
constexpr uint32_t kLogMelVersion = 1;
}  // namespace

void SaveLogMel(const std::filesystem::path& path, const LogMelFrames& frames) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  internal::WriteMagic(os, kLogMelMagic);
  internal::WriteUInt<uint32_t>(os, kLogMelVersion);
  internal::WriteUInt<uint32_t>(os, static_cast<uint32_t>(frames.values.rows()));
  internal::WriteUInt<uint32_t>(os, static_cast<uint32_t>(frames.values.cols()));
  for (Eigen::Index r = 0; r < frames.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < frames.values.cols(); ++c) {
      internal::WriteF32(os, frames.values(r, c));
    }
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

LogMelFrames LoadLogMel(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open file");
  if (!internal::ReadMagic(is, kLogMelMagic)) {
    throw IoError(path.string() + ": not an LMEL feature file");
  }
  const auto version = internal::ReadUInt<uint32_t>(is, "LMEL version");
  if (version != kLogMelVersion) {
    throw IoError(path.string() + ": unsupported LMEL version " +
                  std::to_string(version));
  }
  const auto rows = internal::ReadUInt<uint32_t>(is, "LMEL rows");
  const auto cols = internal::ReadUInt<uint32_t>(is, "LMEL cols");
  if (cols != static_cast<uint32_t>(kNumMelBins)) {
    throw IoError(path.string() + ": expected 40 columns, found " +
                  std::to_string(cols));
  }
  LogMelFrames out;
  out.values.resize(rows, cols);
  for (uint32_t r = 0; r < rows; ++r) {
    for (uint32_t c = 0; c < cols; ++c) {
      out.values(r, c) = internal::ReadF32(is, "LMEL data");
    }
  }
  return out;
}

}  // namespace ge2e
