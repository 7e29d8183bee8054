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

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ge2e/error.h"
#include "ge2e/wav.h"
#include "test_util.h"

namespace ge2e {
namespace {

// Raw RIFF writer independent of SaveWaveform, for malformed inputs.
std::string RiffBytes(int channels, int rate, int bits,
                      const std::vector<int16_t>& pcm, int format = 1) {
  std::string out;
  auto u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
  };
  const uint32_t data_bytes = static_cast<uint32_t>(pcm.size() * 2);
  out += "RIFF";
  u32(36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  u32(16);
  u16(static_cast<uint16_t>(format));
  u16(static_cast<uint16_t>(channels));
  u32(static_cast<uint32_t>(rate));
  u32(static_cast<uint32_t>(rate * channels * bits / 8));
  u16(static_cast<uint16_t>(channels * bits / 8));
  u16(static_cast<uint16_t>(bits));
  out += "data";
  u32(data_bytes);
  for (int16_t s : pcm) u16(static_cast<uint16_t>(s));
  return out;
}

std::filesystem::path WriteBytes(const testing::ScratchDir& dir,
                                 const std::string& name, const std::string& bytes) {
  std::ofstream(dir.path() / name, std::ios::binary) << bytes;
  return dir.path() / name;
}

WavError::Kind LoadErrorKind(const std::filesystem::path& p) {
  try {
    LoadWaveform(p);
  } catch (const WavError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << p;
  return WavError::Kind::kOpen;
}

Waveform Tone(double seconds, double hz, double amplitude) {
  Waveform w;
  const size_t n = static_cast<size_t>(seconds * kSampleRate);
  for (size_t i = 0; i < n; ++i) {
    w.samples.push_back(static_cast<float>(
        amplitude * std::sin(2 * std::numbers::pi * hz * i / kSampleRate)));
  }
  return w;
}

void Append(Waveform* w, const Waveform& more) {
  w->samples.insert(w->samples.end(), more.samples.begin(), more.samples.end());
}

TEST(WavTest, ZeroSignal) {
  testing::ScratchDir dir("wav_zero");
  const auto p = WriteBytes(dir, "z.wav", RiffBytes(1, 16000, 16, std::vector<int16_t>(16000, 0)));
  const Waveform w = LoadWaveform(p);
  EXPECT_EQ(w.sample_rate, 16000);
  ASSERT_EQ(w.samples.size(), 16000u);
  for (float s : w.samples) EXPECT_EQ(s, 0.0f);
}

TEST(WavTest, FullScaleSample) {
  testing::ScratchDir dir("wav_one");
  const auto p = WriteBytes(dir, "o.wav", RiffBytes(1, 16000, 16, {32767, -32768}));
  const Waveform w = LoadWaveform(p);
  EXPECT_NEAR(w.samples[0], 0.99997, 1e-5);
  EXPECT_EQ(w.samples[0], 32767.0f / 32768.0f);
  EXPECT_EQ(w.samples[1], -1.0f);
}

TEST(WavTest, RoundTripIsBitExact) {
  testing::ScratchDir dir("wav_rt");
  Waveform w = Tone(0.3, 440, 0.7);
  QuantizeToPcm16(&w);
  SaveWaveform(dir.path() / "t.wav", w);
  EXPECT_EQ(LoadWaveform(dir.path() / "t.wav").samples, w.samples);
}

TEST(WavTest, SkipsUnknownChunks) {
  testing::ScratchDir dir("wav_chunk");
  std::string bytes = RiffBytes(1, 16000, 16, {100, -100});
  const std::string list = std::string("LIST") + std::string("\x04\x00\x00\x00", 4) + "abcd";
  bytes.insert(36, list);
  const Waveform w = LoadWaveform(WriteBytes(dir, "c.wav", bytes));
  ASSERT_EQ(w.samples.size(), 2u);
  EXPECT_EQ(w.samples[0], 100.0f / 32768.0f);
}

TEST(WavTest, Errors) {
  testing::ScratchDir dir("wav_err");
  EXPECT_EQ(LoadErrorKind(dir.path() / "missing.wav"), WavError::Kind::kOpen);
  EXPECT_EQ(LoadErrorKind(WriteBytes(dir, "junk.wav", "not a wave file at all")),
            WavError::Kind::kCorruptHeader);
  EXPECT_EQ(LoadErrorKind(WriteBytes(dir, "st.wav", RiffBytes(2, 16000, 16, {1, 2}))),
            WavError::Kind::kMultiChannel);
  EXPECT_EQ(LoadErrorKind(WriteBytes(dir, "r.wav", RiffBytes(1, 8000, 16, {1, 2}))),
            WavError::Kind::kUnsupportedRate);
  EXPECT_EQ(LoadErrorKind(WriteBytes(dir, "f.wav", RiffBytes(1, 16000, 16, {1}, 3))),
            WavError::Kind::kUnsupportedFormat);
  const std::string full = RiffBytes(1, 16000, 16, {1, 2, 3, 4});
  EXPECT_EQ(LoadErrorKind(WriteBytes(dir, "cut.wav", full.substr(0, full.size() - 3))),
            WavError::Kind::kCorruptHeader);
}

TEST(FrameCountTest, Formula) {
  EXPECT_EQ(FrameCount(0), 0);
  EXPECT_EQ(FrameCount(399), 0);
  EXPECT_EQ(FrameCount(400), 1);
  EXPECT_EQ(FrameCount(559), 1);
  EXPECT_EQ(FrameCount(560), 2);
  EXPECT_EQ(FrameCount(29040), 180);
  EXPECT_EQ(FrameCount(28880), 179);
}

TEST(NormalizeVolumeTest, Examples) {
  EXPECT_EQ(NormalizeVolume({{0.5f, -0.25f}}).samples, (std::vector<float>{1.0f, -0.5f}));
  EXPECT_EQ(NormalizeVolume({{0.1f, 0.2f, -0.4f}}).samples,
            (std::vector<float>{0.25f, 0.5f, -1.0f}));
  EXPECT_EQ(NormalizeVolume({{0.0f, 0.0f}}).samples, (std::vector<float>{0.0f, 0.0f}));
}

TEST(NormalizeVolumeTest, Idempotent) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-0.3f, 0.3f);
  for (int t = 0; t < 20; ++t) {
    Waveform w;
    for (int i = 0; i < 500; ++i) w.samples.push_back(u(rng));
    const Waveform once = NormalizeVolume(w);
    EXPECT_EQ(NormalizeVolume(once).samples, once.samples);
  }
}

TEST(VadTest, SilenceHasNoActivity) {
  Waveform w;
  w.samples.assign(16000, 0.0f);
  EXPECT_TRUE(DetectVoiceActivity(w, {}).empty());
}

TEST(VadTest, ContinuousToneIsOneInterval) {
  const Waveform w = Tone(1.0, 300, 1.0);
  const auto iv = DetectVoiceActivity(w, {});
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_EQ(iv[0], (Interval{0, w.samples.size()}));
}

TEST(VadTest, ToneGapTone) {
  Waveform w = Tone(1.0, 300, 0.8);
  Waveform gap;
  gap.samples.assign(8000, 0.0f);
  Append(&w, gap);
  Append(&w, Tone(1.0, 300, 0.8));
  const VadConfig cfg;
  const auto iv = DetectVoiceActivity(w, cfg);
  ASSERT_EQ(iv.size(), 2u);
  const double window = cfg.window_ms * kSampleRate / 1000;
  EXPECT_EQ(iv[0].begin, 0u);
  EXPECT_NEAR(static_cast<double>(iv[0].end), 16000, window);
  EXPECT_NEAR(static_cast<double>(iv[1].begin), 24000, window);
  EXPECT_EQ(iv[1].end, w.samples.size());
}

TEST(VadTest, ShortGapsAreMerged) {
  Waveform w = Tone(0.5, 300, 0.8);
  Waveform gap;
  gap.samples.assign(16 * 100, 0.0f);  // 100 ms
  Append(&w, gap);
  Append(&w, Tone(0.5, 300, 0.8));
  VadConfig cfg;
  EXPECT_EQ(DetectVoiceActivity(w, cfg).size(), 2u);
  cfg.max_silence_ms = 200;
  EXPECT_EQ(DetectVoiceActivity(w, cfg).size(), 1u);
}

TEST(VadTest, IntervalsSortedDisjointInRange) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dur(0.02, 0.4), amp(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Waveform w;
    for (int s = 0; s < 12; ++s) {
      const double a = amp(rng) < 0.5 ? 0.0 : amp(rng);
      Append(&w, Tone(dur(rng), 200 + 50 * s, a));
    }
    const auto iv = DetectVoiceActivity(w, {});
    for (size_t i = 0; i < iv.size(); ++i) {
      EXPECT_LT(iv[i].begin, iv[i].end);
      EXPECT_LE(iv[i].end, w.samples.size());
      if (i > 0) EXPECT_LT(iv[i - 1].end, iv[i].begin);
    }
  }
}

TEST(VadTest, ConfigValidation) {
  VadConfig cfg;
  cfg.window_ms = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = VadConfig{};
  cfg.prune_threshold_db = 3;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(PruneTest, Examples) {
  Waveform w = Tone(0.5, 300, 1.0);
  Append(&w, Tone(0.5, 300, 0.001));  // -60 dB re peak
  const std::vector<Interval> iv = {{0, 8000}, {8000, 16000}};
  const auto kept = PruneQuietIntervals(iv, w, -30);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], (Interval{0, 8000}));
  EXPECT_EQ(PruneQuietIntervals({{0, 4000}, {4000, 8000}}, w, -30).size(), 2u);
  EXPECT_TRUE(PruneQuietIntervals({}, w, -30).empty());
}

TEST(SegmentTest, MinimumLength) {
  const Waveform w = Tone(4.0, 300, 0.5);
  const auto p = SegmentPartials(w, {{0, 29040}, {30000, 30000 + 28880}}, "u");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].samples.size(), 29040u);
  EXPECT_EQ(p[0].source_utterance_id, "u");
  EXPECT_EQ(p[0].offset, 0u);
  EXPECT_TRUE(SegmentPartials(w, {}).empty());
}

TEST(SegmentTest, PartialsAreCopiesOfInput) {
  const Waveform w = Tone(5.0, 311, 0.5);
  const auto p = SegmentPartials(w, {{1000, 40000}, {45000, 75000}});
  ASSERT_EQ(p.size(), 2u);
  for (const auto& part : p) {
    for (size_t i = 0; i < part.samples.size(); ++i) {
      ASSERT_EQ(part.samples[i], w.samples[part.offset + i]);
    }
  }
}

TEST(MelFilterbankTest, Shape) {
  const auto& w = MelFilterbank::Default().weights();
  EXPECT_EQ(w.rows(), 40);
  EXPECT_EQ(w.cols(), 257);
  EXPECT_GE(w.minCoeff(), 0.0);
  EXPECT_LE(w.maxCoeff(), 1.0);
}

TEST(MelFilterbankTest, NoHolesInsideRange) {
  const auto& w = MelFilterbank::Default().weights();
  // The triangles vanish exactly at 0 Hz and at Nyquist, so only bins
  // strictly inside the band are required to be covered.
  for (int k = 1; k < 256; ++k) EXPECT_GT(w.col(k).sum(), 0.0) << k;
}

TEST(MelFilterbankTest, MelScale) {
  EXPECT_NEAR(MelFilterbank::HzToMel(700), 2595 * std::log10(2.0), 1e-12);
  for (double hz : {0.0, 123.0, 1000.0, 7999.0}) {
    EXPECT_NEAR(MelFilterbank::MelToHz(MelFilterbank::HzToMel(hz)), hz, 1e-9);
  }
  const auto& bank = MelFilterbank::Default();
  for (int m = 1; m < 40; ++m) EXPECT_GT(bank.center_hz(m), bank.center_hz(m - 1));
}

TEST(LogMelTest, ZeroInputHitsFloor) {
  const std::vector<float> z(1000, 0.0f);
  const LogMelFrames f = ExtractLogMel(z);
  ASSERT_EQ(f.frames(), FrameCount(1000));
  EXPECT_EQ(f.values.minCoeff(), static_cast<float>(std::log(1e-10)));
  EXPECT_EQ(f.values.maxCoeff(), static_cast<float>(std::log(1e-10)));
}

TEST(LogMelTest, ShapeFollowsFrameCount) {
  const Waveform w = Tone(29040.0 / kSampleRate, 440, 0.5);
  ASSERT_EQ(w.samples.size(), 29040u);
  const LogMelFrames f = ExtractLogMel(w.samples);
  EXPECT_EQ(f.values.rows(), 180);
  EXPECT_EQ(f.values.cols(), 40);
}

TEST(LogMelTest, MatchesDirectDft) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n(0, 0.3f);
  std::vector<float> x(400 + 3 * 160);
  for (auto& v : x) v = n(rng);
  const LogMelFrames f = ExtractLogMel(x);
  ASSERT_EQ(f.frames(), 4);
  const auto& bank = MelFilterbank::Default().weights();
  for (int t = 0; t < 4; ++t) {
    std::vector<double> frame(x.begin() + t * 160, x.begin() + t * 160 + 400);
    const auto p = testing::OraclePowerSpectrum(frame, 512);
    for (int m = 0; m < 40; ++m) {
      double e = 0;
      for (int k = 0; k < 257; ++k) e += bank(m, k) * p[k];
      EXPECT_NEAR(f.values(t, m), std::log(std::max(e, 1e-10)), 1e-4) << t << "," << m;
    }
  }
}

TEST(LogMelTest, SineAtCentreSelectsItsFilter) {
  const auto& bank = MelFilterbank::Default();
  for (int m = 0; m < 40; ++m) {
    const Waveform w = Tone(400.0 / kSampleRate, bank.center_hz(m), 0.5);
    // Oracle spectrum, not the library FFT, decides the winning filter.
    std::vector<double> frame(w.samples.begin(), w.samples.end());
    const auto p = testing::OraclePowerSpectrum(frame, 512);
    const Eigen::VectorXd e =
        bank.weights() * Eigen::Map<const Eigen::VectorXd>(p.data(), 257);
    Eigen::Index best;
    e.maxCoeff(&best);
    EXPECT_EQ(best, m) << bank.center_hz(m) << " Hz";
    const LogMelFrames f = ExtractLogMel(w.samples);
    Eigen::Index lib_best;
    f.values.row(0).maxCoeff(&lib_best);
    EXPECT_EQ(lib_best, m);
  }
}

TEST(LogMelTest, DumpRoundTrip) {
  testing::ScratchDir dir("lmel");
  const Waveform w = Tone(0.5, 440, 0.5);
  const LogMelFrames f = ExtractLogMel(w.samples);
  SaveLogMel(dir.path() / "f.lmel", f);
  EXPECT_EQ(LoadLogMel(dir.path() / "f.lmel").values, f.values);
  std::ofstream(dir.path() / "bad.lmel", std::ios::binary) << "LMEL\x01";
  EXPECT_THROW(LoadLogMel(dir.path() / "bad.lmel"), IoError);
}

TEST(PreprocessTest, TwoVoicedRegions) {
  Waveform w;
  w.samples.assign(3200, 0.0f);
  Append(&w, Tone(2.0, 220, 0.3));
  Waveform gap;
  gap.samples.assign(6400, 0.0f);
  Append(&w, gap);
  Append(&w, Tone(1.0, 220, 0.3));  // 1 s: too short for a partial
  Append(&w, gap);
  Append(&w, Tone(2.5, 330, 0.3));
  const auto parts = PreprocessUtterance(w, {}, "x");
  ASSERT_EQ(parts.size(), 2u);
  for (const auto& p : parts) {
    EXPECT_GE(p.frames(), kMinPartialFrames);
    EXPECT_EQ(p.values.cols(), 40);
  }
}

}  // namespace
}  // namespace ge2e
