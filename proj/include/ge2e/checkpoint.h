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

#ifndef GE2E_CHECKPOINT_H_
#define GE2E_CHECKPOINT_H_

#include <filesystem>

#include "ge2e/ge2e_loss.h"
#include "ge2e/network.h"

namespace ge2e {

struct Checkpoint {
  NetworkParams<float> params;
  Ge2eScalars scalars;
};

// Binary layout: "GE2E", u32 version, then per tensor: u16 name length, name,
// u8 rank, u32 dims, row-major little-endian f32 data. The scalars are stored
// as rank-0 tensors "ge2e.w" and "ge2e.b".
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Infers the architecture from the tensor shapes and validates every
// dimension. Throws IoError on any inconsistency.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace ge2e

#endif  // GE2E_CHECKPOINT_H_
