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

#ifndef GE2E_WAV_H_
#define GE2E_WAV_H_

#include <filesystem>
#include <string>
#include <vector>

#include "ge2e/error.h"

namespace ge2e {

inline constexpr int kSampleRate = 16000;

// Mono PCM audio with samples scaled to [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
};

class WavError : public IoError {
 public:
  enum class Kind {
    kOpen,
    kCorruptHeader,
    kUnsupportedFormat,
    kMultiChannel,
    kUnsupportedRate,
  };

  WavError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Reads a RIFF/WAVE file holding 16-bit little-endian mono PCM at 16 kHz.
// Samples are divided by 32768.
Waveform LoadWaveform(const std::filesystem::path& path);

// Writes 16-bit PCM. Samples are rounded to the nearest int16 after scaling by
// 32768 and clamped to the representable range.
void SaveWaveform(const std::filesystem::path& path, const Waveform& wave);

// Rounds every sample to the int16 grid, so that a later Save/Load round-trip
// is lossless.
void QuantizeToPcm16(Waveform* wave);

}  // namespace ge2e

#endif  // GE2E_WAV_H_
