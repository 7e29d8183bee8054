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

#include "ge2e/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "ge2e/error.h"

namespace ge2e {

namespace {

constexpr int kMaxHarmonics = 48;
constexpr double kMaxHarmonicHz = 7000.0;
constexpr double kSyllableS = 0.2;

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double Normal(std::mt19937_64& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Magnitude response of the three resonances at frequency f.
double ResonanceGain(const VoiceProfile& v, const std::array<double, 3>& formants,
                     double f) {
  static constexpr double kWeights[3] = {1.0, 0.7, 0.45};
  double g = 0.02;
  for (int i = 0; i < 3; ++i) {
    const double x = (f - formants[i]) / (0.5 * v.bandwidths_hz[i]);
    g += kWeights[i] / std::sqrt(1.0 + x * x);
  }
  return g;
}

std::vector<double> HarmonicAmplitudes(const VoiceProfile& v,
                                       const std::array<double, 3>& formants,
                                       double f0, double tilt) {
  const int count =
      std::min(kMaxHarmonics, static_cast<int>(kMaxHarmonicHz / f0));
  std::vector<double> amp(kMaxHarmonics, 0.0);
  for (int k = 1; k <= count; ++k) {
    amp[k - 1] = std::pow(static_cast<double>(k), -tilt) *
                 v.harmonic_gains[k - 1] * ResonanceGain(v, formants, k * f0);
  }
  return amp;
}

std::string SpeakerName(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%04d", index);
  return buf;
}

}  // namespace

void SynthConfig::Validate() const {
  if (speakers < 1) throw ConfigError("synth needs at least one speaker");
  if (utterances < 1) throw ConfigError("synth needs at least one utterance");
  if (groups.empty()) throw ConfigError("synth needs at least one group");
  double total = 0.0;
  for (const auto& g : groups) {
    if (!(g.weight >= 0) || !(g.variability >= 0) || !(g.age_std >= 0) ||
        !(g.wrr_std >= 0)) {
      throw ConfigError("group " + g.name + " has a negative parameter");
    }
    total += g.weight;
  }
  if (!(total > 0)) throw ConfigError("group weights must not all be zero");
  if (!(jitter >= 0)) throw ConfigError("jitter must be nonnegative");
  if (!(snr_spread_db >= 0)) throw ConfigError("snr_spread_db must be nonnegative");
  if (!(voice_spread > 0 && voice_spread <= 1)) {
    throw ConfigError("voice_spread must lie in (0, 1]");
  }
  if (segments_per_utterance < 1) throw ConfigError("need >= 1 segment");
  if (!(min_segment_s > 0) || min_segment_s > max_segment_s) {
    throw ConfigError("segment duration range is invalid");
  }
}

VoiceProfile SampleVoice(std::mt19937_64& rng, double spread) {
  // Uniform on [lo, hi] shrunk about its centre.
  auto range = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * spread;
    return Uniform(rng, mid - half, mid + half);
  };
  VoiceProfile v;
  v.f0_hz = std::exp(range(std::log(90.0), std::log(280.0)));
  v.formants_hz = {range(300.0, 850.0), range(900.0, 2300.0),
                   range(2300.0, 3400.0)};
  v.bandwidths_hz = {range(60.0, 150.0), range(80.0, 200.0),
                     range(100.0, 250.0)};
  v.tilt = range(0.6, 1.4);
  v.harmonic_gains.resize(kMaxHarmonics);
  for (auto& g : v.harmonic_gains) g = std::exp(0.3 * spread * Normal(rng));
  return v;
}

Waveform SynthesizeUtterance(const VoiceProfile& voice, const SynthConfig& cfg,
                             double variability, std::mt19937_64& rng) {
  const double sr = kSampleRate;
  const double spread = cfg.jitter * variability;

  // Utterance-level jitter of the voice.
  const double f0 = voice.f0_hz * std::exp(spread * Normal(rng));
  std::array<double, 3> formants = voice.formants_hz;
  for (auto& f : formants) f *= std::exp(0.5 * spread * Normal(rng));
  const double tilt = voice.tilt + spread * Normal(rng);

  std::vector<float> out;
  auto append_silence = [&](double seconds) {
    out.resize(out.size() + static_cast<size_t>(seconds * sr), 0.0f);
  };
  append_silence(Uniform(rng, 0.1, 0.2));

  std::vector<std::pair<size_t, size_t>> voiced;
  for (int seg = 0; seg < cfg.segments_per_utterance; ++seg) {
    if (seg > 0) append_silence(Uniform(rng, 0.25, 0.5));
    const size_t len = static_cast<size_t>(
        Uniform(rng, cfg.min_segment_s, cfg.max_segment_s) * sr);
    const size_t syl_len = static_cast<size_t>(kSyllableS * sr);
    const size_t syllables = len / syl_len + 2;

    // Resonance targets per syllable boundary; the movement pattern is not
    // speaker specific.
    std::vector<std::vector<double>> anchors;
    std::vector<double> f0_anchor;
    for (size_t s = 0; s < syllables; ++s) {
      std::array<double, 3> f = formants;
      f[0] *= std::exp(Uniform(rng, -0.2, 0.2));
      f[1] *= std::exp(Uniform(rng, -0.15, 0.15));
      const double pitch = f0 * std::exp(Uniform(rng, -0.06, 0.06));
      anchors.push_back(HarmonicAmplitudes(voice, f, pitch, tilt));
      f0_anchor.push_back(pitch);
    }

    const size_t begin = out.size();
    out.resize(begin + len);
    double phase = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (size_t n = 0; n < len; ++n) {
      const size_t s = n / syl_len;
      const double frac = static_cast<double>(n % syl_len) / syl_len;
      const double pitch = f0_anchor[s] + frac * (f0_anchor[s + 1] - f0_anchor[s]);
      phase += 2.0 * std::numbers::pi * pitch / sr;
      if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
      // sin(k*phase) by the Chebyshev recurrence.
      const double c2 = 2.0 * std::cos(phase);
      double prev = 0.0, cur = std::sin(phase), acc = 0.0;
      for (int k = 0; k < kMaxHarmonics; ++k) {
        const double a = anchors[s][k] + frac * (anchors[s + 1][k] - anchors[s][k]);
        if (a == 0.0 && anchors[s][k] == 0.0) break;
        acc += a * cur;
        const double next = c2 * cur - prev;
        prev = cur;
        cur = next;
      }
      // Gentle syllabic envelope, 5 ms fades at the segment edges.
      double env = 0.75 + 0.25 * std::cos(2.0 * std::numbers::pi * frac);
      const double edge = std::min(n, len - 1 - n) / (0.005 * sr);
      env *= std::min(1.0, edge);
      out[begin + n] = static_cast<float>(acc * env);
    }
    voiced.emplace_back(begin, begin + len);
  }
  append_silence(Uniform(rng, 0.1, 0.2));

  double power = 0.0, count = 0.0;
  for (auto [b, e] : voiced) {
    for (size_t n = b; n < e; ++n) power += static_cast<double>(out[n]) * out[n];
    count += static_cast<double>(e - b);
  }
  const double rms = std::sqrt(power / std::max(count, 1.0));
  const double snr =
      cfg.snr_db + Uniform(rng, -cfg.snr_spread_db, cfg.snr_spread_db);
  const double noise_rms = rms * std::pow(10.0, -snr / 20.0);
  std::normal_distribution<double> noise(0.0, noise_rms);
  for (auto& x : out) x = static_cast<float>(x + noise(rng));

  Waveform w;
  w.sample_rate = kSampleRate;
  w.samples = std::move(out);
  float peak = 0.0f;
  for (float x : w.samples) peak = std::max(peak, std::abs(x));
  if (peak > 0.0f) {
    const float scale = 0.5f / peak;
    for (auto& x : w.samples) x *= scale;
  }
  QuantizeToPcm16(&w);
  return w;
}

CohortManifest SynthesizeCohort(const SynthConfig& cfg,
                                const std::filesystem::path& out_dir) {
  cfg.Validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "wav");

  double total_weight = 0.0;
  for (const auto& g : cfg.groups) total_weight += g.weight;

  CohortManifest manifest;
  manifest.base_dir = out_dir;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : cfg.groups) {
    groups.push_back({{"name", g.name},
                      {"weight", g.weight},
                      {"age_mean", g.age_mean},
                      {"age_std", g.age_std},
                      {"wrr_mean", g.wrr_mean},
                      {"wrr_std", g.wrr_std},
                      {"variability", g.variability}});
  }
  manifest.provenance = {{"generator", "synth"},
                         {"speakers", cfg.speakers},
                         {"utterances", cfg.utterances},
                         {"seed", cfg.seed},
                         {"jitter", cfg.jitter},
                         {"snr_db", cfg.snr_db},
                         {"snr_spread_db", cfg.snr_spread_db},
                         {"voice_spread", cfg.voice_spread},
                         {"groups", groups}};

  for (int s = 0; s < cfg.speakers; ++s) {
    std::seed_seq seq{static_cast<uint64_t>(cfg.seed), static_cast<uint64_t>(s)};
    std::mt19937_64 rng(seq);

    // Group by weighted draw.
    double pick = Uniform(rng, 0.0, total_weight);
    const GroupSpec* group = &cfg.groups.back();
    for (const auto& g : cfg.groups) {
      if (pick < g.weight) {
        group = &g;
        break;
      }
      pick -= g.weight;
    }

    SpeakerRecord rec;
    rec.speaker_id = SpeakerName(s);
    rec.group = group->name;
    rec.age = std::round(std::max(2.0, group->age_mean + group->age_std * Normal(rng)) *
                         100.0) / 100.0;
    rec.wrr = std::round(std::clamp(group->wrr_mean + group->wrr_std * Normal(rng),
                                    0.0, 100.0) * 100.0) / 100.0;
    const VoiceProfile voice = SampleVoice(rng, cfg.voice_spread);

    fs::create_directories(out_dir / "wav" / rec.speaker_id);
    for (int u = 0; u < cfg.utterances; ++u) {
      const Waveform w = SynthesizeUtterance(voice, cfg, group->variability, rng);
      const std::string rel =
          "wav/" + rec.speaker_id + "/" + rec.speaker_id + "_" +
          std::to_string(u) + ".wav";
      SaveWaveform(out_dir / rel, w);
      rec.utterances.push_back(rel);
    }
    manifest.speakers.push_back(std::move(rec));
  }
  SaveManifest(out_dir / "manifest.jsonl", manifest);
  std::ofstream prov(out_dir / "provenance.json", std::ios::trunc);
  prov << manifest.provenance.dump(2) << '\n';
  if (!prov) throw IoError((out_dir / "provenance.json").string() + ": write failed");
  return manifest;
}

}  // namespace ge2e
