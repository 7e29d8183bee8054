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

// Enrollment/evaluation: sliding-window utterance d-vectors, cosine trial
// scoring with leave-one-out true-speaker centroids, and equal error rate.

#ifndef GE2E_VERIFIER_H_
#define GE2E_VERIFIER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ge2e/frontend.h"
#include "ge2e/network.h"

namespace ge2e {

inline constexpr int kEvalWindowFrames = 160;
inline constexpr int kEvalHopFrames = 80;

struct UtteranceDVector {
  Eigen::VectorXd embedding;  // unit norm
  std::string utterance_id;
  std::string speaker_id;
};

// Windows start at 0, 80, ... while start + 160 <= total frames.
int NumEvalWindows(int total_frames);

// Concatenates the partials along time, embeds every 160-frame window, and
// averages the window d-vectors; the mean is re-normalized. Throws
// ConfigError when fewer than 160 frames are available.
UtteranceDVector ComputeUtteranceDVector(
    const NetworkParams<float>& params,
    const std::vector<LogMelFrames>& partials,
    const std::string& utterance_id = "", const std::string& speaker_id = "");

// Mean of the first enrollment_count d-vectors.
Eigen::VectorXd Enroll(const std::vector<UtteranceDVector>& dvectors,
                       int enrollment_count);

struct Trial {
  bool genuine = false;
  std::string probe_speaker;
  std::string probe_utterance;
  std::string model_speaker;
  double score = 0.0;
};

struct TrialScores {
  std::vector<double> genuine;
  std::vector<double> impostor;
  std::vector<Trial> trials;
};

struct SpeakerDVectors {
  std::string speaker_id;
  std::vector<UtteranceDVector> utterances;
};

// Scores every utterance of every speaker against its own leave-one-out
// centroid (genuine) and against the full centroid of every other speaker
// (impostor), with raw cosine. All speakers must contribute the same M >= 2
// utterances and there must be at least two speakers.
TrialScores ScoreTrials(const std::vector<SpeakerDVectors>& speakers);

struct EerResult {
  double eer_percent = 0.0;
  double threshold = 0.0;
  // Sweep points (thresholds ascending) with FAR/FRR as fractions.
  std::vector<double> thresholds;
  std::vector<double> far;
  std::vector<double> frr;
};

// FRR(t) = P(genuine < t), FAR(t) = P(impostor >= t), swept over every
// distinct score, the midpoints between them, and max + 1. The EER is read
// where FAR - FRR first reaches zero, interpolating linearly across a sign
// change.
EerResult ComputeEer(std::span<const double> genuine,
                     std::span<const double> impostor);
inline EerResult ComputeEer(const TrialScores& scores) {
  return ComputeEer(scores.genuine, scores.impostor);
}

struct EvalUtterance {
  std::string utterance_id;
  std::vector<LogMelFrames> partials;
};

struct EvalSpeaker {
  std::string speaker_id;
  std::vector<EvalUtterance> utterances;
};

struct EvaluationResult {
  EerResult eer;
  TrialScores scores;
};

// Selects M usable utterances per speaker (randomly, with `seed`, when more
// are available), embeds them and scores all speakers jointly. Throws
// ConfigError naming every speaker with fewer than M usable utterances.
EvaluationResult Evaluate(const NetworkParams<float>& params,
                          const std::vector<EvalSpeaker>& speakers, int m,
                          uint64_t seed);

// trial_type, probe_speaker, probe_utterance, model_speaker, score.
void WriteScoreDump(const std::filesystem::path& path,
                    const TrialScores& scores);
// eer_percent, threshold, n_genuine, n_impostor.
void WriteEerReport(const std::filesystem::path& path, const EerResult& eer,
                    const TrialScores& scores);

}  // namespace ge2e

#endif  // GE2E_VERIFIER_H_
