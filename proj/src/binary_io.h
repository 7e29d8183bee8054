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

// Little-endian primitives shared by the WAV, feature dump and checkpoint
// codecs.

#ifndef GE2E_SRC_BINARY_IO_H_
#define GE2E_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "ge2e/error.h"

namespace ge2e::internal {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename UInt>
UInt ToLittle(UInt v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    UInt out = 0;
    for (size_t i = 0; i < sizeof(UInt); ++i) {
      out = static_cast<UInt>((out << 8) | ((v >> (8 * i)) & 0xff));
    }
    return out;
  }
}

template <typename UInt>
void WriteUInt(std::ostream& os, UInt v) {
  v = ToLittle(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void WriteF32(std::ostream& os, float v) {
  WriteUInt(os, std::bit_cast<uint32_t>(v));
}

template <typename UInt>
UInt ReadUInt(std::istream& is, const char* what) {
  UInt v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw IoError(std::string("unexpected end of file while reading ") + what);
  }
  return ToLittle(v);
}

inline float ReadF32(std::istream& is, const char* what) {
  return std::bit_cast<float>(ReadUInt<uint32_t>(is, what));
}

inline void WriteMagic(std::ostream& os, const char (&magic)[5]) {
  os.write(magic, 4);
}

inline bool ReadMagic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4)) return false;
  return std::string(buf, 4) == std::string(magic, 4);
}

}  // namespace ge2e::internal

#endif  // GE2E_SRC_BINARY_IO_H_
