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

#ifndef GE2E_FORMAT_H_
#define GE2E_FORMAT_H_

#include <cstdio>
#include <string>

namespace ge2e {

// printf %.<digits>g; locale independent for the "C" locale the tools run in.
inline std::string FormatG(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

inline std::string FormatFixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace ge2e

#endif  // GE2E_FORMAT_H_
