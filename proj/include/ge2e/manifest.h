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

#ifndef GE2E_MANIFEST_H_
#define GE2E_MANIFEST_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ge2e {

inline constexpr int kMinUtterancesPerSpeaker = 8;

struct SpeakerRecord {
  std::string speaker_id;
  std::string group;
  double age = 0.0;
  double wrr = 0.0;  // percent
  std::vector<std::string> utterances;  // relative to the manifest directory

  bool operator==(const SpeakerRecord&) const = default;
};

struct CohortManifest {
  std::vector<SpeakerRecord> speakers;
  nlohmann::json provenance = nlohmann::json::object();
  std::filesystem::path base_dir;  // utterance paths resolve against this

  std::filesystem::path Resolve(const std::string& utterance) const {
    return base_dir / utterance;
  }
};

struct ManifestOptions {
  int min_utterances = kMinUtterancesPerSpeaker;
  bool check_paths = true;
};

struct ManifestLoad {
  CohortManifest manifest;
  // One entry per rejected record or other problem, naming the line.
  std::vector<std::string> diagnostics;
};

// JSONL, one record per line: speaker_id, group, age, wrr, utterances.
// Records that are malformed, duplicate an earlier id, have too few
// utterances, a non-positive age, a WRR outside [0, 100] or unreadable files
// are rejected with a diagnostic. Throws IoError if the file cannot be read.
ManifestLoad LoadManifest(const std::filesystem::path& path,
                          const ManifestOptions& options = {});

void SaveManifest(const std::filesystem::path& path,
                  const CohortManifest& manifest);

}  // namespace ge2e

#endif  // GE2E_MANIFEST_H_
