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

#include "ge2e/verifier.h"

#include <algorithm>
#include <fstream>
#include <random>

#include "ge2e/error.h"
#include "ge2e/format.h"
#include "ge2e/ge2e_loss.h"

namespace ge2e {

int NumEvalWindows(int total_frames) {
  if (total_frames < kEvalWindowFrames) return 0;
  return (total_frames - kEvalWindowFrames) / kEvalHopFrames + 1;
}

UtteranceDVector ComputeUtteranceDVector(
    const NetworkParams<float>& params,
    const std::vector<LogMelFrames>& partials, const std::string& utterance_id,
    const std::string& speaker_id) {
  int total = 0;
  for (const auto& p : partials) total += p.frames();
  const int windows = NumEvalWindows(total);
  if (windows == 0) {
    throw ConfigError("utterance '" + utterance_id + "' has " +
                      std::to_string(total) + " frames; at least " +
                      std::to_string(kEvalWindowFrames) + " are required");
  }
  LogMelFrames joined;
  joined.values.resize(total, kNumMelBins);
  int row = 0;
  for (const auto& p : partials) {
    joined.values.middleRows(row, p.frames()) = p.values;
    row += p.frames();
  }
  std::vector<FrameWindow> spans;
  for (int w = 0; w < windows; ++w) spans.push_back({&joined, w * kEvalHopFrames});
  const Mat<float> emb =
      Forward(params, PackWindows(spans, kEvalWindowFrames), windows);

  Eigen::VectorXd mean = emb.cast<double>().rowwise().sum() / windows;
  const double norm = mean.norm();
  if (!(norm > 0.0)) {
    throw NumericError("utterance '" + utterance_id +
                       "' window d-vectors average to zero");
  }
  return {mean / norm, utterance_id, speaker_id};
}

Eigen::VectorXd Enroll(const std::vector<UtteranceDVector>& dvectors,
                       int enrollment_count) {
  if (enrollment_count < 1 ||
      static_cast<int>(dvectors.size()) < enrollment_count) {
    throw ConfigError("enrollment needs " + std::to_string(enrollment_count) +
                      " d-vectors, got " + std::to_string(dvectors.size()));
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dvectors[0].embedding.size());
  for (int i = 0; i < enrollment_count; ++i) sum += dvectors[i].embedding;
  return sum / enrollment_count;
}

TrialScores ScoreTrials(const std::vector<SpeakerDVectors>& speakers) {
  const int n = static_cast<int>(speakers.size());
  if (n < 2) {
    throw ConfigError("scoring needs at least 2 test speakers for impostor "
                      "trials");
  }
  const int m = static_cast<int>(speakers[0].utterances.size());
  if (m < 2) throw ConfigError("scoring needs M >= 2 utterances per speaker");
  for (const auto& s : speakers) {
    if (static_cast<int>(s.utterances.size()) != m) {
      throw ConfigError("speaker " + s.speaker_id + " has " +
                        std::to_string(s.utterances.size()) +
                        " utterances, expected " + std::to_string(m));
    }
  }

  std::vector<Eigen::MatrixXd> emb(n);
  std::vector<Eigen::VectorXd> centroid(n);
  for (int j = 0; j < n; ++j) {
    emb[j].resize(speakers[j].utterances[0].embedding.size(), m);
    for (int i = 0; i < m; ++i) emb[j].col(i) = speakers[j].utterances[i].embedding;
    centroid[j] = Centroid(emb[j]);
  }

  TrialScores out;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto& probe = speakers[j].utterances[i];
      for (int k = 0; k < n; ++k) {
        Trial t;
        t.genuine = k == j;
        t.probe_speaker = speakers[j].speaker_id;
        t.probe_utterance = probe.utterance_id;
        t.model_speaker = speakers[k].speaker_id;
        t.score = t.genuine
                      ? Cosine(emb[j].col(i), LeaveOneOutCentroid(emb[j], i))
                      : Cosine(emb[j].col(i), centroid[k]);
        (t.genuine ? out.genuine : out.impostor).push_back(t.score);
        out.trials.push_back(std::move(t));
      }
    }
  }
  return out;
}

EerResult ComputeEer(std::span<const double> genuine,
                     std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw ConfigError("EER needs both genuine and impostor scores");
  }
  std::vector<double> gen(genuine.begin(), genuine.end());
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> distinct(gen);
  distinct.insert(distinct.end(), imp.begin(), imp.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  EerResult r;
  for (size_t k = 0; k < distinct.size(); ++k) {
    r.thresholds.push_back(distinct[k]);
    if (k + 1 < distinct.size()) {
      r.thresholds.push_back(0.5 * (distinct[k] + distinct[k + 1]));
    }
  }
  r.thresholds.push_back(distinct.back() + 1.0);

  const double ng = static_cast<double>(gen.size());
  const double ni = static_cast<double>(imp.size());
  size_t crossing = r.thresholds.size();
  for (size_t k = 0; k < r.thresholds.size(); ++k) {
    const double t = r.thresholds[k];
    const auto below_gen = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
    const auto below_imp = std::lower_bound(imp.begin(), imp.end(), t) - imp.begin();
    r.frr.push_back(static_cast<double>(below_gen) / ng);
    r.far.push_back(static_cast<double>(imp.size() - below_imp) / ni);
    if (crossing == r.thresholds.size() && r.far[k] - r.frr[k] <= 0.0) {
      crossing = k;
    }
  }

  const size_t c = crossing;
  const double dc = r.far[c] - r.frr[c];
  if (dc == 0.0 || c == 0) {
    r.eer_percent = 100.0 * 0.5 * (r.far[c] + r.frr[c]);
    r.threshold = r.thresholds[c];
    return r;
  }
  const size_t p = c - 1;
  const double dp = r.far[p] - r.frr[p];
  const double alpha = dp / (dp - dc);
  const double far = r.far[p] + alpha * (r.far[c] - r.far[p]);
  const double frr = r.frr[p] + alpha * (r.frr[c] - r.frr[p]);
  r.eer_percent = 100.0 * 0.5 * (far + frr);
  r.threshold = r.thresholds[p] + alpha * (r.thresholds[c] - r.thresholds[p]);
  return r;
}

EvaluationResult Evaluate(const NetworkParams<float>& params,
                          const std::vector<EvalSpeaker>& speakers, int m,
                          uint64_t seed) {
  if (m < 2) throw ConfigError("evaluation needs M >= 2");
  std::vector<std::vector<const EvalUtterance*>> usable(speakers.size());
  std::string short_speakers;
  for (size_t s = 0; s < speakers.size(); ++s) {
    for (const auto& u : speakers[s].utterances) {
      int frames = 0;
      for (const auto& p : u.partials) frames += p.frames();
      if (frames >= kEvalWindowFrames) usable[s].push_back(&u);
    }
    if (static_cast<int>(usable[s].size()) < m) {
      short_speakers += (short_speakers.empty() ? "" : ", ") +
                        speakers[s].speaker_id + " (" +
                        std::to_string(usable[s].size()) + " usable)";
    }
  }
  if (!short_speakers.empty()) {
    throw ConfigError("speakers with fewer than M=" + std::to_string(m) +
                      " usable utterances: " + short_speakers);
  }

  std::mt19937_64 rng(seed);
  std::vector<SpeakerDVectors> dvecs;
  for (size_t s = 0; s < speakers.size(); ++s) {
    auto& pool = usable[s];
    for (int i = 0; i < m; ++i) {
      const int pick = std::uniform_int_distribution<int>(
          i, static_cast<int>(pool.size()) - 1)(rng);
      std::swap(pool[i], pool[pick]);
    }
    SpeakerDVectors sd{speakers[s].speaker_id, {}};
    for (int i = 0; i < m; ++i) {
      try {
        sd.utterances.push_back(ComputeUtteranceDVector(
            params, pool[i]->partials, pool[i]->utterance_id,
            speakers[s].speaker_id));
      } catch (const Error& e) {
        throw NumericError("speaker " + speakers[s].speaker_id + ", utterance " +
                           pool[i]->utterance_id + ": " + e.what());
      }
    }
    dvecs.push_back(std::move(sd));
  }
  EvaluationResult result;
  result.scores = ScoreTrials(dvecs);
  result.eer = ComputeEer(result.scores);
  return result;
}

void WriteScoreDump(const std::filesystem::path& path,
                    const TrialScores& scores) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "trial_type,probe_speaker,probe_utterance,model_speaker,score\n";
  for (const auto& t : scores.trials) {
    os << (t.genuine ? "genuine" : "impostor") << ',' << t.probe_speaker << ','
       << t.probe_utterance << ',' << t.model_speaker << ',' << FormatG(t.score)
       << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

void WriteEerReport(const std::filesystem::path& path, const EerResult& eer,
                    const TrialScores& scores) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "eer_percent,threshold,n_genuine,n_impostor\n"
     << FormatG(eer.eer_percent) << ',' << FormatG(eer.threshold) << ','
     << scores.genuine.size() << ',' << scores.impostor.size() << '\n';
  if (!os) throw IoError(path.string() + ": write failed");
}

}  // namespace ge2e
