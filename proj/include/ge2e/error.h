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

#ifndef GE2E_ERROR_H_
#define GE2E_ERROR_H_

#include <stdexcept>
#include <string>

namespace ge2e {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input (flags, config files, preconditions on arguments).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File system and format problems.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or degenerate geometry during numerical work.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ge2e

#endif  // GE2E_ERROR_H_
