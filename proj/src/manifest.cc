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

#include "ge2e/manifest.h"

#include <fstream>
#include <set>

#include "ge2e/error.h"
#include "ge2e/log.h"

namespace ge2e {

namespace {

using nlohmann::json;

SpeakerRecord ParseRecord(const json& j) {
  if (!j.is_object()) throw ConfigError("record is not a JSON object");
  for (const char* key : {"speaker_id", "group", "age", "wrr", "utterances"}) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field ") + key);
  }
  SpeakerRecord r;
  if (!j["speaker_id"].is_string() || !j["group"].is_string()) {
    throw ConfigError("speaker_id and group must be strings");
  }
  if (!j["age"].is_number() || !j["wrr"].is_number()) {
    throw ConfigError("age and wrr must be numbers");
  }
  if (!j["utterances"].is_array()) throw ConfigError("utterances must be an array");
  r.speaker_id = j["speaker_id"].get<std::string>();
  r.group = j["group"].get<std::string>();
  r.age = j["age"].get<double>();
  r.wrr = j["wrr"].get<double>();
  for (const auto& u : j["utterances"]) {
    if (!u.is_string()) throw ConfigError("utterance paths must be strings");
    r.utterances.push_back(u.get<std::string>());
  }
  if (r.speaker_id.empty()) throw ConfigError("empty speaker_id");
  return r;
}

}  // namespace

ManifestLoad LoadManifest(const std::filesystem::path& path,
                          const ManifestOptions& options) {
  std::ifstream is(path);
  if (!is) throw IoError(path.string() + ": cannot open manifest");
  ManifestLoad out;
  out.manifest.base_dir = path.parent_path();
  out.manifest.provenance = {{"source", path.string()}};

  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    SpeakerRecord r;
    try {
      r = ParseRecord(json::parse(line));
    } catch (const json::exception& e) {
      out.diagnostics.push_back(where + ": malformed JSON: " + e.what());
      continue;
    } catch (const ConfigError& e) {
      out.diagnostics.push_back(where + ": " + e.what());
      continue;
    }
    const std::string who = where + ": speaker " + r.speaker_id;
    if (seen.count(r.speaker_id)) {
      out.diagnostics.push_back(who + ": duplicate speaker_id");
      continue;
    }
    seen.insert(r.speaker_id);
    if (static_cast<int>(r.utterances.size()) < options.min_utterances) {
      out.diagnostics.push_back(who + ": " + std::to_string(r.utterances.size()) +
                                " utterances, at least " +
                                std::to_string(options.min_utterances) +
                                " required");
      continue;
    }
    if (!(r.age > 0)) {
      out.diagnostics.push_back(who + ": age must be positive");
      continue;
    }
    if (!(r.wrr >= 0 && r.wrr <= 100)) {
      out.diagnostics.push_back(who + ": wrr must lie in [0, 100]");
      continue;
    }
    if (options.check_paths) {
      std::string missing;
      for (const auto& u : r.utterances) {
        std::ifstream probe(out.manifest.Resolve(u), std::ios::binary);
        if (!probe) missing = u;
      }
      if (!missing.empty()) {
        out.diagnostics.push_back(who + ": unreadable utterance " + missing);
        continue;
      }
    }
    out.manifest.speakers.push_back(std::move(r));
  }
  if (lineno == 0) out.diagnostics.push_back(path.string() + ": manifest is empty");
  for (const auto& d : out.diagnostics) LogWarning(d);
  return out;
}

void SaveManifest(const std::filesystem::path& path,
                  const CohortManifest& manifest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  for (const auto& r : manifest.speakers) {
    json j = {{"speaker_id", r.speaker_id},
              {"group", r.group},
              {"age", r.age},
              {"wrr", r.wrr},
              {"utterances", r.utterances}};
    os << j.dump() << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

}  // namespace ge2e
