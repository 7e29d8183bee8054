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

#include "ge2e/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>

#include "binary_io.h"

namespace ge2e {

using internal::ReadUInt;
using internal::WriteUInt;

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xfffe;

struct FmtChunk {
  uint16_t format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

std::string Describe(const std::filesystem::path& path) {
  return path.string() + ": ";
}

int16_t ToPcm16(float x) {
  double scaled = std::nearbyint(static_cast<double>(x) * 32768.0);
  scaled = std::clamp(scaled, -32768.0, 32767.0);
  return static_cast<int16_t>(scaled);
}

}  // namespace

Waveform LoadWaveform(const std::filesystem::path& path) {
  using Kind = WavError::Kind;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WavError(Kind::kOpen, Describe(path) + "cannot open file");

  char riff[4], wave[4];
  if (!is.read(riff, 4) || std::string(riff, 4) != "RIFF") {
    throw WavError(Kind::kCorruptHeader, Describe(path) + "missing RIFF tag");
  }
  try {
    ReadUInt<uint32_t>(is, "RIFF size");
  } catch (const IoError&) {
    throw WavError(Kind::kCorruptHeader, Describe(path) + "truncated header");
  }
  if (!is.read(wave, 4) || std::string(wave, 4) != "WAVE") {
    throw WavError(Kind::kCorruptHeader, Describe(path) + "missing WAVE tag");
  }

  std::optional<FmtChunk> fmt;
  while (true) {
    char id[4];
    if (!is.read(id, 4)) {
      throw WavError(Kind::kCorruptHeader,
                     Describe(path) + "no data chunk found");
    }
    uint32_t size = 0;
    try {
      size = ReadUInt<uint32_t>(is, "chunk size");
    } catch (const IoError&) {
      throw WavError(Kind::kCorruptHeader, Describe(path) + "truncated chunk");
    }
    std::string tag(id, 4);
    if (tag == "fmt ") {
      if (size < 16) {
        throw WavError(Kind::kCorruptHeader,
                       Describe(path) + "fmt chunk too small");
      }
      FmtChunk f;
      try {
        f.format = ReadUInt<uint16_t>(is, "format");
        f.channels = ReadUInt<uint16_t>(is, "channels");
        f.sample_rate = ReadUInt<uint32_t>(is, "sample rate");
        ReadUInt<uint32_t>(is, "byte rate");
        ReadUInt<uint16_t>(is, "block align");
        f.bits_per_sample = ReadUInt<uint16_t>(is, "bits per sample");
      } catch (const IoError&) {
        throw WavError(Kind::kCorruptHeader,
                       Describe(path) + "truncated fmt chunk");
      }
      is.seekg(size - 16 + (size & 1), std::ios::cur);
      fmt = f;
    } else if (tag == "data") {
      if (!fmt) {
        throw WavError(Kind::kCorruptHeader,
                       Describe(path) + "data chunk before fmt chunk");
      }
      if (fmt->format != kFormatPcm && fmt->format != kFormatExtensible) {
        throw WavError(Kind::kUnsupportedFormat,
                       Describe(path) + "unsupported audio format code " +
                           std::to_string(fmt->format) + " (need PCM)");
      }
      if (fmt->bits_per_sample != 16) {
        throw WavError(Kind::kUnsupportedFormat,
                       Describe(path) + "unsupported sample width " +
                           std::to_string(fmt->bits_per_sample) +
                           " bits (need 16)");
      }
      if (fmt->channels != 1) {
        throw WavError(Kind::kMultiChannel,
                       Describe(path) + std::to_string(fmt->channels) +
                           " channels; only mono is supported");
      }
      if (fmt->sample_rate != static_cast<uint32_t>(kSampleRate)) {
        throw WavError(Kind::kUnsupportedRate,
                       Describe(path) + "sample rate " +
                           std::to_string(fmt->sample_rate) +
                           " Hz; only 16000 Hz is supported");
      }
      if (size % 2 != 0) {
        throw WavError(Kind::kCorruptHeader,
                       Describe(path) + "odd data chunk size");
      }
      Waveform w;
      w.sample_rate = static_cast<int>(fmt->sample_rate);
      w.samples.resize(size / 2);
      for (auto& s : w.samples) {
        uint16_t raw = 0;
        try {
          raw = ReadUInt<uint16_t>(is, "sample");
        } catch (const IoError&) {
          throw WavError(Kind::kCorruptHeader,
                         Describe(path) + "data chunk shorter than declared");
        }
        s = static_cast<float>(static_cast<int16_t>(raw)) / 32768.0f;
      }
      return w;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
}

void SaveWaveform(const std::filesystem::path& path, const Waveform& wave) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  os.write("RIFF", 4);
  WriteUInt<uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteUInt<uint32_t>(os, 16);
  WriteUInt<uint16_t>(os, kFormatPcm);
  WriteUInt<uint16_t>(os, 1);
  WriteUInt<uint32_t>(os, static_cast<uint32_t>(wave.sample_rate));
  WriteUInt<uint32_t>(os, static_cast<uint32_t>(wave.sample_rate) * 2);
  WriteUInt<uint16_t>(os, 2);
  WriteUInt<uint16_t>(os, 16);
  os.write("data", 4);
  WriteUInt<uint32_t>(os, data_bytes);
  for (float s : wave.samples) {
    WriteUInt<uint16_t>(os, static_cast<uint16_t>(ToPcm16(s)));
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

void QuantizeToPcm16(Waveform* wave) {
  for (auto& s : wave->samples) {
    s = static_cast<float>(ToPcm16(s)) / 32768.0f;
  }
}

}  // namespace ge2e
