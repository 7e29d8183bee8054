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

// Repeated train/evaluate experiments over a speaker cohort. Repetition r
// uses seed (master + r) for sampling, splitting, initialization, batching
// and enrollment selection, so a report is a pure function of the spec, the
// manifest and the audio.

#ifndef GE2E_EXPERIMENT_H_
#define GE2E_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ge2e/frontend.h"
#include "ge2e/manifest.h"
#include "ge2e/stats.h"
#include "ge2e/trainer.h"
#include "ge2e/verifier.h"

namespace ge2e {

struct ExperimentSpec {
  std::string name = "experiment";
  int speakers = 0;  // n; 0 takes the whole manifest
  double train_fraction = 0.8;
  int repetitions = 20;
  std::optional<double> target_mean_age;
  double age_tolerance = 0.5;
  int age_attempts = 1000;
  TrainConfig train;  // train.seed is overridden per repetition
  BatchSpec batch;
  int eval_m = 2;
  uint64_t seed = 0;
  // Summary JSON of a previous experiment to t-test against; empty for none.
  std::string baseline_report;
  VadConfig vad;
  int min_utterances = kMinUtterancesPerSpeaker;
  // Also score the untrained initialization on each test split.
  bool eval_untrained = false;

  void Validate() const;
};

// Flat JSON object. Keys: name, speakers, train_fraction, repetitions,
// target_mean_age, age_tolerance, age_attempts, eval_m, seed,
// baseline_report, min_utterances, eval_untrained, steps, learning_rate,
// clip_norm, checkpoint_every, batch_speakers, batch_utterances, min_frames,
// max_frames, hidden, layers, embedding, vad_window_ms, vad_max_silence_ms,
// vad_smoothing_ms, vad_prune_threshold_db. Unknown keys are a ConfigError.
ExperimentSpec ExperimentSpecFromJson(const nlohmann::json& j);
nlohmann::json ExperimentSpecToJson(const ExperimentSpec& spec);
ExperimentSpec LoadExperimentSpec(const std::filesystem::path& path);

// Indices into manifest.speakers. With a target age, redraws up to `attempts`
// times until the sample mean lies within `tolerance`, otherwise returns the
// closest draw and logs a warning.
std::vector<int> SampleCohort(const CohortManifest& manifest, int n,
                              std::optional<double> target_mean_age,
                              double tolerance, int attempts,
                              std::mt19937_64& rng);

// Number of training speakers for a cohort of n, rounding half up.
int TrainSplitSize(int n, double train_fraction);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

Split SplitTrainTest(const std::vector<int>& cohort, double train_fraction,
                     std::mt19937_64& rng);

// Loads and preprocesses every utterance of every speaker, on up to `jobs`
// threads. Utterance ids are the manifest-relative paths.
std::vector<EvalSpeaker> ExtractCohortFeatures(const CohortManifest& manifest,
                                               const VadConfig& vad, int jobs = 1);

// Flattens the partials of each speaker into a training pool.
FeaturePool ToFeaturePool(const std::vector<EvalSpeaker>& speakers);

struct RepetitionResult {
  int repetition = 0;
  uint64_t seed = 0;
  int train_size = 0;
  int test_size = 0;
  double train_duration_s = 0.0;
  double test_duration_s = 0.0;
  double train_mean_age = 0.0;
  double test_mean_age = 0.0;
  double test_mean_wrr = 0.0;
  double eer_percent = 0.0;
  double threshold = 0.0;
  double final_loss = 0.0;  // mean over the last (up to) 100 steps
  std::optional<double> untrained_eer_percent;
  // Pearson r between per-speaker EER and WRR within the test split.
  std::optional<double> speaker_wrr_r;
  std::vector<std::string> train_speakers;
  std::vector<std::string> test_speakers;
};

struct ExperimentReport {
  std::string name;
  int speakers = 0;
  std::vector<RepetitionResult> repetitions;

  double mean_eer = 0.0;
  std::optional<double> std_eer;  // absent for a single repetition
  std::optional<stats::TestResult> normality;
  std::string baseline_name;
  std::optional<stats::TestResult> baseline_comparison;
  // r between per-repetition EER and test mean WRR.
  std::optional<double> eer_wrr_r;
  // Mean and std of the per-repetition speaker-level r values.
  std::optional<double> speaker_wrr_r_mean;
  std::optional<double> speaker_wrr_r_std;

  std::vector<double> Eers() const;
};

struct RunOptions {
  int jobs = 1;
  // Receives report.csv, splits.csv, summary.json and rep_<r>/ directories.
  std::filesystem::path out_dir;
};

ExperimentReport RunExperiment(const ExperimentSpec& spec,
                               const CohortManifest& manifest,
                               const RunOptions& options);

// Recomputes the aggregate fields from the repetitions (and the baseline, if
// given).
void Aggregate(ExperimentReport* report,
               const ExperimentReport* baseline = nullptr);

void WriteReportCsv(const std::filesystem::path& path,
                    const ExperimentReport& report);
void WriteSplitsCsv(const std::filesystem::path& path,
                    const ExperimentReport& report);
nlohmann::json ReportSummaryJson(const ExperimentReport& report);

// Reads a summary JSON. Only name, speakers, train_size and the EER list are
// restored. Throws IoError naming the file when it is unreadable or
// malformed.
ExperimentReport LoadReport(const std::filesystem::path& path);

// Student t-test on the two EER lists; both need >= 2 repetitions.
stats::TestResult CompareReports(const ExperimentReport& a,
                                 const ExperimentReport& b);

}  // namespace ge2e

#endif  // GE2E_EXPERIMENT_H_
