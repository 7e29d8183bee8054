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

#include "ge2e/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "ge2e/error.h"
#include "ge2e/format.h"
#include "ge2e/log.h"
#include "ge2e/verifier.h"
#include "ge2e/wav.h"

namespace ge2e {

namespace {

using nlohmann::json;

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool HasVariance(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end();
}

template <typename T>
void Take(const json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("experiment spec: bad value for ") + key);
  }
}

// Features of one speaker, computed once and shared by all repetitions.
struct CachedSpeaker {
  std::vector<EvalUtterance> utterances;
  double duration_s = 0.0;
};

CachedSpeaker LoadSpeaker(const CohortManifest& manifest,
                          const SpeakerRecord& record, const VadConfig& vad) {
  CachedSpeaker out;
  for (const auto& rel : record.utterances) {
    const Waveform wave = LoadWaveform(manifest.Resolve(rel));
    out.duration_s += static_cast<double>(wave.samples.size()) / wave.sample_rate;
    out.utterances.push_back({rel, PreprocessUtterance(wave, vad, rel)});
  }
  return out;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first exception
// (lowest index) is rethrown after all workers finish.
template <typename Fn>
void ParallelFor(int count, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<double> SpeakerWrrCorrelation(const TrialScores& scores,
                                            const std::vector<std::string>& ids,
                                            const std::vector<double>& wrr) {
  std::vector<double> eers;
  for (const auto& id : ids) {
    std::vector<double> gen, imp;
    for (const auto& t : scores.trials) {
      if (t.genuine && t.probe_speaker == id) gen.push_back(t.score);
      if (!t.genuine && t.model_speaker == id) imp.push_back(t.score);
    }
    eers.push_back(ComputeEer(gen, imp).eer_percent);
  }
  if (ids.size() < 2 || !HasVariance(eers) || !HasVariance(wrr)) return std::nullopt;
  return stats::Pearson(eers, wrr);
}

std::string Opt(const std::optional<double>& v) {
  return v ? FormatG(*v, 17) : std::string();
}

json OptJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json TestJson(const std::optional<stats::TestResult>& t) {
  if (!t) return nullptr;
  return {{"statistic", t->statistic},
          {"p_value", t->p_value},
          {"significant", t->significant}};
}

}  // namespace

void ExperimentSpec::Validate() const {
  if (speakers < 0) throw ConfigError("speakers must be >= 0");
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(age_tolerance >= 0)) throw ConfigError("age_tolerance must be >= 0");
  if (age_attempts < 1) throw ConfigError("age_attempts must be >= 1");
  if (eval_m < 2) throw ConfigError("eval_m must be >= 2");
  if (min_utterances < 1) throw ConfigError("min_utterances must be >= 1");
  train.Validate();
  batch.Validate();
  vad.Validate();
}

ExperimentSpec ExperimentSpecFromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  static const std::set<std::string> kKeys = {
      "name", "speakers", "train_fraction", "repetitions", "target_mean_age",
      "age_tolerance", "age_attempts", "eval_m", "seed", "baseline_report",
      "min_utterances", "eval_untrained", "steps", "learning_rate", "clip_norm",
      "checkpoint_every", "batch_speakers", "batch_utterances", "min_frames",
      "max_frames", "hidden", "layers", "embedding", "vad_window_ms",
      "vad_max_silence_ms", "vad_smoothing_ms", "vad_prune_threshold_db"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("experiment spec: unknown key " + key);
  }
  ExperimentSpec s;
  Take(j, "name", &s.name);
  Take(j, "speakers", &s.speakers);
  Take(j, "train_fraction", &s.train_fraction);
  Take(j, "repetitions", &s.repetitions);
  if (j.contains("target_mean_age") && !j["target_mean_age"].is_null()) {
    double age = 0.0;
    Take(j, "target_mean_age", &age);
    s.target_mean_age = age;
  }
  Take(j, "age_tolerance", &s.age_tolerance);
  Take(j, "age_attempts", &s.age_attempts);
  Take(j, "eval_m", &s.eval_m);
  Take(j, "seed", &s.seed);
  Take(j, "baseline_report", &s.baseline_report);
  Take(j, "min_utterances", &s.min_utterances);
  Take(j, "eval_untrained", &s.eval_untrained);
  Take(j, "steps", &s.train.steps);
  Take(j, "learning_rate", &s.train.learning_rate);
  Take(j, "clip_norm", &s.train.clip_norm);
  Take(j, "checkpoint_every", &s.train.checkpoint_every);
  Take(j, "batch_speakers", &s.batch.speakers);
  Take(j, "batch_utterances", &s.batch.utterances);
  Take(j, "min_frames", &s.batch.min_frames);
  Take(j, "max_frames", &s.batch.max_frames);
  Take(j, "hidden", &s.train.shape.hidden);
  Take(j, "layers", &s.train.shape.layers);
  Take(j, "embedding", &s.train.shape.embedding);
  Take(j, "vad_window_ms", &s.vad.window_ms);
  Take(j, "vad_max_silence_ms", &s.vad.max_silence_ms);
  Take(j, "vad_smoothing_ms", &s.vad.smoothing_ms);
  Take(j, "vad_prune_threshold_db", &s.vad.prune_threshold_db);
  s.Validate();
  return s;
}

json ExperimentSpecToJson(const ExperimentSpec& s) {
  return {{"name", s.name},
          {"speakers", s.speakers},
          {"train_fraction", s.train_fraction},
          {"repetitions", s.repetitions},
          {"target_mean_age", OptJson(s.target_mean_age)},
          {"age_tolerance", s.age_tolerance},
          {"age_attempts", s.age_attempts},
          {"eval_m", s.eval_m},
          {"seed", s.seed},
          {"baseline_report", s.baseline_report},
          {"min_utterances", s.min_utterances},
          {"eval_untrained", s.eval_untrained},
          {"steps", s.train.steps},
          {"learning_rate", s.train.learning_rate},
          {"clip_norm", s.train.clip_norm},
          {"checkpoint_every", s.train.checkpoint_every},
          {"batch_speakers", s.batch.speakers},
          {"batch_utterances", s.batch.utterances},
          {"min_frames", s.batch.min_frames},
          {"max_frames", s.batch.max_frames},
          {"hidden", s.train.shape.hidden},
          {"layers", s.train.shape.layers},
          {"embedding", s.train.shape.embedding},
          {"vad_window_ms", s.vad.window_ms},
          {"vad_max_silence_ms", s.vad.max_silence_ms},
          {"vad_smoothing_ms", s.vad.smoothing_ms},
          {"vad_prune_threshold_db", s.vad.prune_threshold_db}};
}

ExperimentSpec LoadExperimentSpec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path.string() + ": cannot open experiment spec");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ExperimentSpecFromJson(j);
}

std::vector<int> SampleCohort(const CohortManifest& manifest, int n,
                              std::optional<double> target_mean_age,
                              double tolerance, int attempts,
                              std::mt19937_64& rng) {
  const int total = static_cast<int>(manifest.speakers.size());
  if (n > total) {
    throw ConfigError("cohort of " + std::to_string(n) + " requested from " +
                      std::to_string(total) + " speakers");
  }
  if (n < 1) throw ConfigError("cohort size must be positive");
  std::vector<int> all(total);
  std::iota(all.begin(), all.end(), 0);

  auto draw = [&] {
    std::vector<int> pool = all;
    for (int i = 0; i < n; ++i) {
      const int j = std::uniform_int_distribution<int>(i, total - 1)(rng);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
  };
  if (!target_mean_age) return draw();

  auto gap = [&](const std::vector<int>& c) {
    double sum = 0.0;
    for (int i : c) sum += manifest.speakers[i].age;
    return std::abs(sum / n - *target_mean_age);
  };
  std::vector<int> best;
  double best_gap = 0.0;
  for (int a = 0; a < attempts; ++a) {
    std::vector<int> c = draw();
    const double g = gap(c);
    if (best.empty() || g < best_gap) {
      best = std::move(c);
      best_gap = g;
    }
    if (best_gap <= tolerance) return best;
  }
  LogWarning("no cohort within " + FormatG(tolerance) + " years of mean age " +
             FormatG(*target_mean_age) + " after " + std::to_string(attempts) +
             " attempts; closest is off by " + FormatG(best_gap, 4));
  return best;
}

int TrainSplitSize(int n, double train_fraction) {
  // Rounded in a way that ignores representation error in n * fraction.
  const double exact = n * train_fraction;
  return static_cast<int>(std::floor(exact + 0.5 + 1e-9));
}

Split SplitTrainTest(const std::vector<int>& cohort, double train_fraction,
                     std::mt19937_64& rng) {
  const int n = static_cast<int>(cohort.size());
  if (n < 5) throw ConfigError("a train/test split needs at least 5 speakers");
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  std::vector<int> order = cohort;
  std::shuffle(order.begin(), order.end(), rng);
  const int k = TrainSplitSize(n, train_fraction);
  Split s;
  s.train.assign(order.begin(), order.begin() + k);
  s.test.assign(order.begin() + k, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<EvalSpeaker> ExtractCohortFeatures(const CohortManifest& manifest,
                                               const VadConfig& vad, int jobs) {
  vad.Validate();
  std::vector<EvalSpeaker> out(manifest.speakers.size());
  ParallelFor(static_cast<int>(out.size()), jobs, [&](int i) {
    const SpeakerRecord& rec = manifest.speakers[i];
    try {
      out[i] = {rec.speaker_id, LoadSpeaker(manifest, rec, vad).utterances};
    } catch (const Error& e) {
      throw IoError("preprocessing speaker " + rec.speaker_id + ": " + e.what());
    }
  });
  return out;
}

FeaturePool ToFeaturePool(const std::vector<EvalSpeaker>& speakers) {
  FeaturePool pool;
  for (const auto& s : speakers) {
    SpeakerFeatures f{s.speaker_id, {}};
    for (const auto& u : s.utterances) {
      f.partials.insert(f.partials.end(), u.partials.begin(), u.partials.end());
    }
    pool.push_back(std::move(f));
  }
  return pool;
}

std::vector<double> ExperimentReport::Eers() const {
  std::vector<double> out;
  for (const auto& r : repetitions) out.push_back(r.eer_percent);
  return out;
}

void Aggregate(ExperimentReport* report, const ExperimentReport* baseline) {
  const std::vector<double> eers = report->Eers();
  if (eers.empty()) throw ConfigError("report has no repetitions");
  const stats::Descriptive d = stats::Describe(eers);
  report->mean_eer = d.mean;
  report->std_eer = d.std;

  report->normality.reset();
  if (eers.size() >= 3 && HasVariance(eers)) {
    report->normality = stats::ShapiroWilk(eers);
  }

  report->baseline_comparison.reset();
  report->baseline_name.clear();
  if (baseline) {
    report->baseline_name = baseline->name;
    if (report->repetitions.size() >= 2 && baseline->repetitions.size() >= 2) {
      report->baseline_comparison = CompareReports(*report, *baseline);
    } else {
      LogWarning("t-test against " + baseline->name +
                 " skipped: both need >= 2 repetitions");
    }
  }

  std::vector<double> wrr;
  for (const auto& r : report->repetitions) wrr.push_back(r.test_mean_wrr);
  report->eer_wrr_r.reset();
  if (eers.size() >= 2 && HasVariance(eers) && HasVariance(wrr)) {
    report->eer_wrr_r = stats::Pearson(eers, wrr);
  }

  std::vector<double> rs;
  for (const auto& r : report->repetitions) {
    if (r.speaker_wrr_r) rs.push_back(*r.speaker_wrr_r);
  }
  report->speaker_wrr_r_mean.reset();
  report->speaker_wrr_r_std.reset();
  if (!rs.empty()) {
    const stats::Descriptive dr = stats::Describe(rs);
    report->speaker_wrr_r_mean = dr.mean;
    report->speaker_wrr_r_std = dr.std;
  }
}

stats::TestResult CompareReports(const ExperimentReport& a,
                                 const ExperimentReport& b) {
  if (a.repetitions.size() < 2 || b.repetitions.size() < 2) {
    throw ConfigError("comparing reports needs >= 2 repetitions in each");
  }
  return stats::TTestUnpaired(a.Eers(), b.Eers());
}

ExperimentReport RunExperiment(const ExperimentSpec& spec,
                               const CohortManifest& manifest,
                               const RunOptions& options) {
  spec.Validate();
  std::optional<ExperimentReport> baseline;
  if (!spec.baseline_report.empty()) {
    if (!std::filesystem::exists(spec.baseline_report)) {
      throw ConfigError("baseline report not found: " + spec.baseline_report);
    }
    baseline = LoadReport(spec.baseline_report);
  }
  const int n = spec.speakers > 0 ? spec.speakers
                                  : static_cast<int>(manifest.speakers.size());
  const int train_n = TrainSplitSize(n, spec.train_fraction);
  if (train_n < spec.batch.speakers) {
    throw ConfigError("training split of " + std::to_string(train_n) +
                      " speakers is smaller than the batch (" +
                      std::to_string(spec.batch.speakers) + ")");
  }
  if (n - train_n < 2) throw ConfigError("test split needs at least 2 speakers");

  // Sampling and splitting are cheap and sequential; doing them first fixes
  // which speakers need features.
  std::vector<Split> splits;
  std::set<int> needed;
  for (int r = 0; r < spec.repetitions; ++r) {
    std::mt19937_64 rng(spec.seed + static_cast<uint64_t>(r));
    const std::vector<int> cohort =
        SampleCohort(manifest, n, spec.target_mean_age, spec.age_tolerance,
                     spec.age_attempts, rng);
    splits.push_back(SplitTrainTest(cohort, spec.train_fraction, rng));
    needed.insert(cohort.begin(), cohort.end());
  }

  const std::vector<int> needed_list(needed.begin(), needed.end());
  std::map<int, CachedSpeaker> cache;
  for (int i : needed_list) cache[i];
  ParallelFor(static_cast<int>(needed_list.size()), options.jobs, [&](int k) {
    const int i = needed_list[k];
    try {
      cache.at(i) = LoadSpeaker(manifest, manifest.speakers[i], spec.vad);
    } catch (const Error& e) {
      throw IoError("preprocessing speaker " + manifest.speakers[i].speaker_id +
                    ": " + e.what());
    }
  });

  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  ExperimentReport report;
  report.name = spec.name;
  report.speakers = n;
  report.repetitions.resize(spec.repetitions);
  ParallelFor(spec.repetitions, options.jobs, [&](int r) {
    const uint64_t seed = spec.seed + static_cast<uint64_t>(r);
    const Split& split = splits[r];
    RepetitionResult& rep = report.repetitions[r];
    rep.repetition = r;
    rep.seed = seed;
    rep.train_size = static_cast<int>(split.train.size());
    rep.test_size = static_cast<int>(split.test.size());
    try {
      FeaturePool pool;
      std::vector<double> ages;
      for (int i : split.train) {
        const SpeakerRecord& rec = manifest.speakers[i];
        const CachedSpeaker& c = cache.at(i);
        SpeakerFeatures f{rec.speaker_id, {}};
        for (const auto& u : c.utterances) {
          f.partials.insert(f.partials.end(), u.partials.begin(), u.partials.end());
        }
        pool.push_back(std::move(f));
        rep.train_duration_s += c.duration_s;
        ages.push_back(rec.age);
        rep.train_speakers.push_back(rec.speaker_id);
      }
      rep.train_mean_age = Mean(ages);

      std::vector<EvalSpeaker> test;
      std::vector<double> test_ages, test_wrr;
      for (int i : split.test) {
        const SpeakerRecord& rec = manifest.speakers[i];
        const CachedSpeaker& c = cache.at(i);
        test.push_back({rec.speaker_id, c.utterances});
        rep.test_duration_s += c.duration_s;
        test_ages.push_back(rec.age);
        test_wrr.push_back(rec.wrr);
        rep.test_speakers.push_back(rec.speaker_id);
      }
      rep.test_mean_age = Mean(test_ages);
      rep.test_mean_wrr = Mean(test_wrr);

      TrainConfig tc = spec.train;
      tc.seed = seed;
      std::filesystem::path rep_dir;
      if (!options.out_dir.empty()) {
        rep_dir = options.out_dir / ("rep_" + std::to_string(r));
      }
      const TrainResult trained = Train(pool, tc, spec.batch, rep_dir);
      const size_t tail = std::min<size_t>(100, trained.trace.size());
      double loss = 0.0;
      for (size_t k = trained.trace.size() - tail; k < trained.trace.size(); ++k) {
        loss += trained.trace[k].loss;
      }
      rep.final_loss = tail ? loss / static_cast<double>(tail) : 0.0;

      const EvaluationResult eval =
          Evaluate(trained.checkpoint.params, test, spec.eval_m, seed);
      rep.eer_percent = eval.eer.eer_percent;
      rep.threshold = eval.eer.threshold;
      rep.speaker_wrr_r =
          SpeakerWrrCorrelation(eval.scores, rep.test_speakers, test_wrr);
      if (!rep_dir.empty()) {
        WriteScoreDump(rep_dir / "scores.csv", eval.scores);
        WriteEerReport(rep_dir / "eer.csv", eval.eer, eval.scores);
      }
      if (spec.eval_untrained) {
        const NetworkParams<float> init = InitParams(tc.shape, seed);
        rep.untrained_eer_percent =
            Evaluate(init, test, spec.eval_m, seed).eer.eer_percent;
      }
    } catch (const std::exception& e) {
      throw Error("repetition " + std::to_string(r) + ": " + e.what());
    }
    LogInfo(spec.name + ": repetition " + std::to_string(r) + " EER " +
            FormatFixed(rep.eer_percent, 2) + "%");
  });

  Aggregate(&report, baseline ? &*baseline : nullptr);
  if (!options.out_dir.empty()) {
    WriteReportCsv(options.out_dir / "report.csv", report);
    WriteSplitsCsv(options.out_dir / "splits.csv", report);
    std::ofstream os(options.out_dir / "summary.json", std::ios::trunc);
    json summary = ReportSummaryJson(report);
    summary["spec"] = ExperimentSpecToJson(spec);
    summary["manifest"] = manifest.provenance;
    os << summary.dump(2) << '\n';
    if (!os) throw IoError((options.out_dir / "summary.json").string() + ": write failed");
  }
  return report;
}

void WriteReportCsv(const std::filesystem::path& path,
                    const ExperimentReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "repetition,seed,train_size,test_size,train_duration_s,test_duration_s,"
        "train_mean_age,test_mean_age,test_mean_wrr,eer_percent,threshold,"
        "final_loss,untrained_eer_percent,speaker_wrr_r\n";
  for (const auto& r : report.repetitions) {
    os << r.repetition << ',' << r.seed << ',' << r.train_size << ','
       << r.test_size << ',' << FormatG(r.train_duration_s) << ','
       << FormatG(r.test_duration_s) << ',' << FormatG(r.train_mean_age) << ','
       << FormatG(r.test_mean_age) << ',' << FormatG(r.test_mean_wrr) << ','
       << FormatG(r.eer_percent, 17) << ',' << FormatG(r.threshold) << ','
       << FormatG(r.final_loss) << ',' << Opt(r.untrained_eer_percent) << ','
       << Opt(r.speaker_wrr_r) << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

void WriteSplitsCsv(const std::filesystem::path& path,
                    const ExperimentReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "repetition,speaker_id,role\n";
  for (const auto& r : report.repetitions) {
    for (const auto& s : r.train_speakers) os << r.repetition << ',' << s << ",train\n";
    for (const auto& s : r.test_speakers) os << r.repetition << ',' << s << ",test\n";
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

json ReportSummaryJson(const ExperimentReport& report) {
  const int train_size =
      report.repetitions.empty() ? 0 : report.repetitions.front().train_size;
  return {{"name", report.name},
          {"speakers", report.speakers},
          {"train_size", train_size},
          {"repetitions", report.repetitions.size()},
          {"eer_percent", report.Eers()},
          {"mean_eer", report.mean_eer},
          {"std_eer", OptJson(report.std_eer)},
          {"shapiro_wilk", TestJson(report.normality)},
          {"baseline", report.baseline_name},
          {"baseline_t_test", TestJson(report.baseline_comparison)},
          {"eer_wrr_r", OptJson(report.eer_wrr_r)},
          {"speaker_wrr_r_mean", OptJson(report.speaker_wrr_r_mean)},
          {"speaker_wrr_r_std", OptJson(report.speaker_wrr_r_std)}};
}

ExperimentReport LoadReport(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path.string() + ": cannot open report");
  ExperimentReport report;
  try {
    const json j = json::parse(is);
    report.name = j.at("name").get<std::string>();
    report.speakers = j.at("speakers").get<int>();
    const int train_size = j.value("train_size", 0);
    int r = 0;
    for (const auto& e : j.at("eer_percent")) {
      RepetitionResult rep;
      rep.repetition = r++;
      rep.train_size = train_size;
      rep.eer_percent = e.get<double>();
      if (!std::isfinite(rep.eer_percent)) throw ConfigError("non-finite EER");
      report.repetitions.push_back(rep);
    }
    if (report.repetitions.empty()) throw ConfigError("no EER values");
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": malformed report: " + e.what());
  }
  Aggregate(&report);
  return report;
}

}  // namespace ge2e
