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

#ifndef GE2E_LOG_H_
#define GE2E_LOG_H_

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace ge2e {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

inline std::atomic<LogLevel>& GlobalLogLevel() {
  static std::atomic<LogLevel> level{LogLevel::kWarning};
  return level;
}

inline void Log(LogLevel level, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(GlobalLogLevel().load())) {
    return;
  }
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << (level == LogLevel::kWarning ? "WARNING: " : "") << msg << '\n';
}

inline void LogWarning(std::string_view msg) { Log(LogLevel::kWarning, msg); }
inline void LogInfo(std::string_view msg) { Log(LogLevel::kInfo, msg); }

}  // namespace ge2e

#endif  // GE2E_LOG_H_
