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

#include <fstream>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "ge2e/error.h"
#include "ge2e/experiment.h"
#include "ge2e/manifest.h"
#include "ge2e/report.h"
#include "ge2e/synth.h"
#include "test_util.h"

namespace ge2e {
namespace {

CohortManifest FakeManifest(const std::vector<double>& ages) {
  CohortManifest m;
  for (size_t i = 0; i < ages.size(); ++i) {
    m.speakers.push_back({"s" + std::to_string(i), "ctrl", ages[i], 50, {}});
  }
  return m;
}

TEST(ManifestTest, RoundTrip) {
  testing::ScratchDir dir("manifest_rt");
  CohortManifest m;
  m.speakers.push_back({"a", "ctrl", 10.5, 70.25, {"x/1.wav", "x/2.wav"}});
  m.speakers.push_back({"b", "dlon", 13, 40, {"y/1.wav", "y/2.wav"}});
  SaveManifest(dir.path() / "m.jsonl", m);
  const ManifestLoad l = LoadManifest(dir.path() / "m.jsonl", {2, false});
  EXPECT_TRUE(l.diagnostics.empty());
  EXPECT_EQ(l.manifest.speakers, m.speakers);
  EXPECT_EQ(l.manifest.base_dir, dir.path());
}

TEST(ManifestTest, RejectsBadRecordsAndKeepsTheRest) {
  testing::ScratchDir dir("manifest_bad");
  std::vector<std::string> eight, seven;
  for (int i = 0; i < 8; ++i) eight.push_back("u" + std::to_string(i) + ".wav");
  seven.assign(eight.begin(), eight.begin() + 7);
  for (const auto& u : eight) std::ofstream(dir.path() / u) << "x";
  {
    std::ofstream os(dir.path() / "m.jsonl");
    auto rec = [](const std::string& id, const std::vector<std::string>& u,
                  double age = 11) {
      return nlohmann::json{{"speaker_id", id}, {"group", "g"}, {"age", age},
                            {"wrr", 60}, {"utterances", u}}.dump();
    };
    os << rec("ok", eight) << "\n"
       << rec("short", seven) << "\n"
       << "{not json\n"
       << rec("ok", eight) << "\n"
       << rec("noage", eight, -1) << "\n"
       << rec("missing", {"u0.wav", "u1.wav", "u2.wav", "u3.wav", "u4.wav",
                          "u5.wav", "u6.wav", "gone.wav"}) << "\n"
       << "\n";
  }
  const ManifestLoad l = LoadManifest(dir.path() / "m.jsonl");
  ASSERT_EQ(l.manifest.speakers.size(), 1u);
  EXPECT_EQ(l.manifest.speakers[0].speaker_id, "ok");
  ASSERT_EQ(l.diagnostics.size(), 5u);
  EXPECT_NE(l.diagnostics[0].find(":2: speaker short"), std::string::npos) << l.diagnostics[0];
  EXPECT_NE(l.diagnostics[0].find("7 utterances"), std::string::npos);
  EXPECT_NE(l.diagnostics[1].find(":3"), std::string::npos);
  EXPECT_NE(l.diagnostics[2].find("duplicate"), std::string::npos);
  EXPECT_NE(l.diagnostics[4].find("gone.wav"), std::string::npos);
}

TEST(ManifestTest, EmptyAndMissing) {
  testing::ScratchDir dir("manifest_empty");
  std::ofstream(dir.path() / "e.jsonl").close();
  const ManifestLoad l = LoadManifest(dir.path() / "e.jsonl");
  EXPECT_TRUE(l.manifest.speakers.empty());
  ASSERT_EQ(l.diagnostics.size(), 1u);
  EXPECT_NE(l.diagnostics[0].find("empty"), std::string::npos);
  EXPECT_THROW(LoadManifest(dir.path() / "nope.jsonl"), IoError);
}

TEST(SplitTest, EightyTwentySizes) {
  EXPECT_EQ(TrainSplitSize(85, 0.8), 68);
  EXPECT_EQ(TrainSplitSize(124, 0.8), 99);
  EXPECT_EQ(TrainSplitSize(5, 0.8), 4);
  EXPECT_EQ(TrainSplitSize(10, 0.25), 3);  // 2.5 rounds up
  for (int n : {85, 124}) {
    std::vector<int> cohort(n);
    std::iota(cohort.begin(), cohort.end(), 100);
    std::mt19937_64 rng(n);
    const Split s = SplitTrainTest(cohort, 0.8, rng);
    EXPECT_EQ(s.train.size() + s.test.size(), static_cast<size_t>(n));
    std::set<int> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all, std::set<int>(cohort.begin(), cohort.end()));
  }
  std::vector<int> c85(85), c124(124);
  std::iota(c85.begin(), c85.end(), 0);
  std::iota(c124.begin(), c124.end(), 0);
  std::mt19937_64 rng(1);
  EXPECT_EQ(SplitTrainTest(c85, 0.8, rng).train.size(), 68u);
  EXPECT_EQ(SplitTrainTest(c124, 0.8, rng).train.size(), 99u);
  EXPECT_THROW(SplitTrainTest({1, 2, 3, 4}, 0.8, rng), ConfigError);
}

TEST(SplitTest, SeedDependence) {
  std::vector<int> c(40);
  std::iota(c.begin(), c.end(), 0);
  std::mt19937_64 a(3), b(3), d(4);
  const Split x = SplitTrainTest(c, 0.8, a);
  EXPECT_EQ(x.train, SplitTrainTest(c, 0.8, b).train);
  EXPECT_NE(x.train, SplitTrainTest(c, 0.8, d).train);
}

TEST(SampleCohortTest, SizeAndDistinct) {
  const CohortManifest m = FakeManifest(std::vector<double>(30, 10.0));
  std::mt19937_64 rng(5);
  const auto c = SampleCohort(m, 12, std::nullopt, 0.5, 1000, rng);
  EXPECT_EQ(c.size(), 12u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_EQ(std::set<int>(c.begin(), c.end()).size(), 12u);
  EXPECT_THROW(SampleCohort(m, 31, std::nullopt, 0.5, 1000, rng), ConfigError);
}

TEST(SampleCohortTest, AgeMatching) {
  std::vector<double> ages;
  for (int i = 0; i < 40; ++i) ages.push_back(6 + 0.3 * i);  // 6 .. 17.7
  const CohortManifest m = FakeManifest(ages);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const auto c = SampleCohort(m, 10, 10.5, 0.5, 1000, rng);
    double mean = 0;
    for (int i : c) mean += ages[i];
    EXPECT_LE(std::abs(mean / 10 - 10.5), 0.5);
  }
  // Unreachable target: best effort, still the right size.
  const auto far = SampleCohort(m, 10, 40.0, 0.5, 50, rng);
  EXPECT_EQ(far.size(), 10u);
}

TEST(SynthTest, CountsAndDeterminism) {
  testing::ScratchDir dir("synth");
  SynthConfig cfg;
  cfg.speakers = 3;
  cfg.utterances = 2;
  cfg.seed = 4;
  const CohortManifest a = SynthesizeCohort(cfg, dir.path() / "a");
  const CohortManifest b = SynthesizeCohort(cfg, dir.path() / "b");
  ASSERT_EQ(a.speakers.size(), 3u);
  for (const auto& s : a.speakers) {
    EXPECT_EQ(s.utterances.size(), 2u);
    EXPECT_GT(s.age, 0);
    EXPECT_GE(s.wrr, 0);
    EXPECT_LE(s.wrr, 100);
  }
  EXPECT_EQ(a.speakers, b.speakers);
  EXPECT_EQ(testing::ReadFile(dir.path() / "a" / a.speakers[1].utterances[1]),
            testing::ReadFile(dir.path() / "b" / b.speakers[1].utterances[1]));
  const ManifestLoad l = LoadManifest(dir.path() / "a" / "manifest.jsonl", {2, true});
  EXPECT_TRUE(l.diagnostics.empty());
  EXPECT_EQ(l.manifest.speakers, a.speakers);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "a" / "provenance.json"));

  // Each synthetic utterance yields the configured number of partials.
  const auto feats = ExtractCohortFeatures(l.manifest, {}, 2);
  for (const auto& s : feats) {
    for (const auto& u : s.utterances) EXPECT_EQ(u.partials.size(), 2u) << u.utterance_id;
  }
}

TEST(SynthTest, Validation) {
  SynthConfig cfg;
  cfg.speakers = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.groups.clear();
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(ExperimentSpecTest, JsonRoundTripAndUnknownKeys) {
  ExperimentSpec s;
  s.name = "x";
  s.speakers = 20;
  s.target_mean_age = 12.5;
  s.train.steps = 7;
  s.batch.speakers = 3;
  const ExperimentSpec back = ExperimentSpecFromJson(ExperimentSpecToJson(s));
  EXPECT_EQ(ExperimentSpecToJson(back), ExperimentSpecToJson(s));
  EXPECT_THROW(ExperimentSpecFromJson({{"bogus", 1}}), ConfigError);
  EXPECT_THROW(ExperimentSpecFromJson({{"repetitions", 0}}), ConfigError);
  EXPECT_THROW(ExperimentSpecFromJson({{"speakers", "many"}}), ConfigError);
}

class SmallExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::ScratchDir("experiment");
    SynthConfig cfg;
    cfg.speakers = 6;
    cfg.utterances = 3;
    cfg.seed = 11;
    manifest_ = new CohortManifest(SynthesizeCohort(cfg, dir_->path() / "data"));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static ExperimentSpec Spec() {
    ExperimentSpec s;
    s.name = "small";
    s.train_fraction = 0.6;  // 4 train, 2 test
    s.repetitions = 2;
    s.seed = 3;
    s.min_utterances = 3;
    s.train.steps = 4;
    s.train.learning_rate = 1e-4;
    s.train.shape = {kNumMelBins, 8, 1, 4};
    s.batch = {3, 2, 140, 180};
    return s;
  }
  static testing::ScratchDir* dir_;
  static CohortManifest* manifest_;
};
testing::ScratchDir* SmallExperiment::dir_ = nullptr;
CohortManifest* SmallExperiment::manifest_ = nullptr;

TEST_F(SmallExperiment, DeterministicAcrossJobCounts) {
  const auto out = dir_->path();
  const ExperimentReport a = RunExperiment(Spec(), *manifest_, {1, out / "a"});
  const ExperimentReport b = RunExperiment(Spec(), *manifest_, {2, out / "b"});
  ASSERT_EQ(a.repetitions.size(), 2u);
  EXPECT_EQ(a.Eers(), b.Eers());
  for (const char* f : {"report.csv", "splits.csv", "rep_0/loss.csv",
                        "rep_1/scores.csv", "rep_1/eer.csv"}) {
    EXPECT_EQ(testing::ReadFile(out / "a" / f), testing::ReadFile(out / "b" / f)) << f;
  }
  for (const auto& r : a.repetitions) {
    EXPECT_EQ(r.train_size, 4);
    EXPECT_EQ(r.test_size, 2);
    EXPECT_GE(r.eer_percent, 0);
    EXPECT_LE(r.eer_percent, 100);
  }
  EXPECT_NE(a.repetitions[0].train_speakers, a.repetitions[1].train_speakers)
      << "repetitions should draw different splits";
  ASSERT_TRUE(a.std_eer.has_value());

  const ExperimentReport loaded = LoadReport(out / "a" / "summary.json");
  EXPECT_EQ(loaded.Eers(), a.Eers());
  EXPECT_EQ(loaded.name, "small");
  EXPECT_EQ(ReportSize(loaded), 4);
}

TEST_F(SmallExperiment, SingleRepetitionHasNoSpread) {
  ExperimentSpec s = Spec();
  s.repetitions = 1;
  const ExperimentReport r = RunExperiment(s, *manifest_, {1, dir_->path() / "one"});
  EXPECT_FALSE(r.std_eer.has_value());
  EXPECT_FALSE(r.normality.has_value());
  const auto j = nlohmann::json::parse(testing::ReadFile(dir_->path() / "one" / "summary.json"));
  EXPECT_TRUE(j["std_eer"].is_null());
}

TEST_F(SmallExperiment, ConfigErrors) {
  ExperimentSpec s = Spec();
  s.batch.speakers = 5;  // only 4 training speakers
  EXPECT_THROW(RunExperiment(s, *manifest_, {1, dir_->path() / "e1"}), ConfigError);
  s = Spec();
  s.baseline_report = (dir_->path() / "absent.json").string();
  EXPECT_THROW(RunExperiment(s, *manifest_, {1, dir_->path() / "e2"}), ConfigError);
}

TEST(CompareReportsTest, WelchOnEers) {
  ExperimentReport a, b;
  for (double e : {1.0, 2.0, 3.0}) a.repetitions.push_back({.eer_percent = e});
  for (double e : {11.0, 12.0, 13.0}) b.repetitions.push_back({.eer_percent = e});
  const stats::TestResult t = CompareReports(a, b);
  EXPECT_NEAR(t.statistic, -12.24744871391589, 1e-9);
  EXPECT_NEAR(t.p_value, 0.00025521674944192687, 1e-9);
  ExperimentReport one;
  one.repetitions.push_back({.eer_percent = 1.0});
  EXPECT_THROW(CompareReports(one, b), ConfigError);
}

TEST(LoadReportTest, Errors) {
  testing::ScratchDir dir("load_report");
  EXPECT_THROW(LoadReport(dir.path() / "none.json"), IoError);
  std::ofstream(dir.path() / "bad.json") << "{\"name\": \"x\"}";
  try {
    LoadReport(dir.path() / "bad.json");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  std::ofstream(dir.path() / "empty.json")
      << R"({"name": "x", "speakers": 3, "eer_percent": []})";
  EXPECT_THROW(LoadReport(dir.path() / "empty.json"), IoError);
}

TEST(TrendTest, FitOnReportSizes) {
  std::vector<ExperimentReport> reports;
  const std::vector<std::pair<int, double>> pts = {{50, 5.19}, {500, 1.87}, {1500, 1.15}, {3000, 0.90}};
  for (auto [n, e] : pts) {
    ExperimentReport r;
    r.repetitions.push_back({.train_size = n, .eer_percent = e});
    Aggregate(&r);
    reports.push_back(r);
  }
  const auto fit = FitSizeTrend(reports);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->intercept, 9.1543237903, 1e-6);
  EXPECT_NEAR(fit->slope, -1.0809973418, 1e-6);
  reports.resize(1);
  EXPECT_FALSE(FitSizeTrend(reports).has_value());
}

}  // namespace
}  // namespace ge2e
