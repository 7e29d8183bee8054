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

// ge2e: synth | prep | train | eval | experiment | report.
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ge2e/checkpoint.h"
#include "ge2e/error.h"
#include "ge2e/experiment.h"
#include "ge2e/format.h"
#include "ge2e/frontend.h"
#include "ge2e/log.h"
#include "ge2e/manifest.h"
#include "ge2e/report.h"
#include "ge2e/synth.h"
#include "ge2e/trainer.h"
#include "ge2e/verifier.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
  uint64_t seed = 0;
  int jobs = 1;
  bool verbose = false;
};

void AddGlobals(CLI::App* app, Globals* g) {
  app->add_option("--seed", g->seed, "Seed for all randomness");
  app->add_option("--jobs", g->jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--verbose", g->verbose, "Log progress to stderr");
}

void AddVad(CLI::App* app, ge2e::VadConfig* vad) {
  app->add_option("--vad-window-ms", vad->window_ms, "VAD energy window (ms)");
  app->add_option("--vad-max-silence-ms", vad->max_silence_ms,
                  "Gaps shorter than this are merged (ms)");
  app->add_option("--vad-smoothing-ms", vad->smoothing_ms,
                  "Energy smoothing span (ms)");
  app->add_option("--vad-threshold-db", vad->prune_threshold_db,
                  "Silence level relative to the peak (dB)");
}

void AddShape(CLI::App* app, ge2e::NetworkShape* shape) {
  app->add_option("--hidden", shape->hidden, "LSTM width");
  app->add_option("--layers", shape->layers, "LSTM layers");
  app->add_option("--embedding", shape->embedding, "d-vector dimension");
}

void AddBatch(CLI::App* app, ge2e::BatchSpec* batch) {
  app->add_option("--batch-speakers", batch->speakers, "Speakers per batch (N)");
  app->add_option("--batch-utterances", batch->utterances,
                  "Segments per speaker (M)");
  app->add_option("--min-frames", batch->min_frames, "Shortest segment length");
  app->add_option("--max-frames", batch->max_frames, "Longest segment length");
}

ge2e::CohortManifest ReadManifest(const fs::path& path, int min_utterances) {
  ge2e::ManifestOptions opts;
  opts.min_utterances = min_utterances;
  ge2e::ManifestLoad load = ge2e::LoadManifest(path, opts);
  ge2e::LogInfo(path.string() + ": " +
                std::to_string(load.manifest.speakers.size()) + " speakers, " +
                std::to_string(load.diagnostics.size()) + " rejected records");
  return std::move(load.manifest);
}

// "name:weight:age_mean:age_std:wrr_mean:wrr_std:variability"
ge2e::GroupSpec ParseGroup(const std::string& text) {
  std::vector<std::string> f;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) f.push_back(part);
  if (f.size() != 7) throw ge2e::ConfigError("--group needs 7 ':'-separated fields");
  ge2e::GroupSpec g;
  try {
    g.name = f[0];
    g.weight = std::stod(f[1]);
    g.age_mean = std::stod(f[2]);
    g.age_std = std::stod(f[3]);
    g.wrr_mean = std::stod(f[4]);
    g.wrr_std = std::stod(f[5]);
    g.variability = std::stod(f[6]);
  } catch (const std::logic_error&) {
    throw ge2e::ConfigError("--group: bad number in " + text);
  }
  return g;
}

int RunSynth(const Globals& g, ge2e::SynthConfig cfg,
             const std::vector<std::string>& groups, const fs::path& out) {
  cfg.seed = g.seed;
  if (!groups.empty()) {
    cfg.groups.clear();
    for (const auto& s : groups) cfg.groups.push_back(ParseGroup(s));
  }
  cfg.Validate();
  const ge2e::CohortManifest m = ge2e::SynthesizeCohort(cfg, out);
  size_t files = 0;
  for (const auto& s : m.speakers) files += s.utterances.size();
  std::cout << "wrote " << m.speakers.size() << " speakers, " << files
            << " utterances to " << out.string() << '\n';
  return 0;
}

int RunPrep(const Globals& g, const fs::path& manifest_path, int min_utterances,
            const ge2e::VadConfig& vad, const fs::path& out) {
  const ge2e::CohortManifest m = ReadManifest(manifest_path, min_utterances);
  const auto speakers = ge2e::ExtractCohortFeatures(m, vad, g.jobs);
  size_t dumps = 0;
  for (const auto& s : speakers) {
    fs::create_directories(out / s.speaker_id);
    for (const auto& u : s.utterances) {
      const std::string stem = fs::path(u.utterance_id).stem().string();
      for (size_t k = 0; k < u.partials.size(); ++k) {
        ge2e::SaveLogMel(out / s.speaker_id / (stem + "_p" + std::to_string(k) + ".lmel"),
                         u.partials[k]);
        ++dumps;
      }
    }
  }
  std::cout << "wrote " << dumps << " feature dumps for " << speakers.size()
            << " speakers to " << out.string() << '\n';
  return 0;
}

int RunTrain(const Globals& g, const fs::path& manifest_path, int min_utterances,
             const ge2e::VadConfig& vad, ge2e::TrainConfig cfg,
             const ge2e::BatchSpec& batch, const fs::path& ckpt_dir) {
  cfg.seed = g.seed;
  cfg.Validate();
  batch.Validate();
  const ge2e::CohortManifest m = ReadManifest(manifest_path, min_utterances);
  const auto pool = ge2e::ToFeaturePool(ge2e::ExtractCohortFeatures(m, vad, g.jobs));
  const ge2e::TrainResult r = ge2e::Train(pool, cfg, batch, ckpt_dir);
  std::cout << "trained " << r.trace.size() << " steps, final loss "
            << ge2e::FormatFixed(r.trace.empty() ? 0.0 : r.trace.back().loss, 4)
            << "; checkpoint " << (ckpt_dir / "final.ge2e").string() << '\n';
  return 0;
}

int RunEval(const Globals& g, const fs::path& manifest_path, int min_utterances,
            const ge2e::VadConfig& vad, const fs::path& ckpt, int m,
            const fs::path& out) {
  const ge2e::Checkpoint c = ge2e::LoadCheckpoint(ckpt);
  const ge2e::CohortManifest man = ReadManifest(manifest_path, min_utterances);
  const auto speakers = ge2e::ExtractCohortFeatures(man, vad, g.jobs);
  const ge2e::EvaluationResult r = ge2e::Evaluate(c.params, speakers, m, g.seed);
  if (!out.empty()) {
    fs::create_directories(out);
    ge2e::WriteScoreDump(out / "scores.csv", r.scores);
    ge2e::WriteEerReport(out / "eer.csv", r.eer, r.scores);
  }
  std::cout << "EER " << ge2e::FormatFixed(r.eer.eer_percent, 2) << "% ("
            << r.scores.genuine.size() << " genuine, " << r.scores.impostor.size()
            << " impostor trials)\n";
  return 0;
}

struct ExperimentArgs {
  fs::path spec_path;
  fs::path manifest;
  fs::path out;
  fs::path baseline;
  ge2e::ExperimentSpec overrides;
};

int RunExperimentCmd(const Globals& g, const CLI::App& sub,
                     const ExperimentArgs& a) {
  ge2e::ExperimentSpec spec = a.spec_path.empty()
                                  ? ge2e::ExperimentSpec{}
                                  : ge2e::LoadExperimentSpec(a.spec_path);
  const auto& o = a.overrides;
  auto set = [&](const char* flag, auto* dst, auto value) {
    if (sub.count(flag)) *dst = value;
  };
  set("--name", &spec.name, o.name);
  set("--speakers", &spec.speakers, o.speakers);
  set("--reps", &spec.repetitions, o.repetitions);
  set("--m", &spec.eval_m, o.eval_m);
  set("--steps", &spec.train.steps, o.train.steps);
  set("--lr", &spec.train.learning_rate, o.train.learning_rate);
  set("--batch-speakers", &spec.batch.speakers, o.batch.speakers);
  set("--batch-utterances", &spec.batch.utterances, o.batch.utterances);
  set("--min-frames", &spec.batch.min_frames, o.batch.min_frames);
  set("--max-frames", &spec.batch.max_frames, o.batch.max_frames);
  set("--hidden", &spec.train.shape.hidden, o.train.shape.hidden);
  set("--layers", &spec.train.shape.layers, o.train.shape.layers);
  set("--embedding", &spec.train.shape.embedding, o.train.shape.embedding);
  set("--min-utterances", &spec.min_utterances, o.min_utterances);
  set("--target-age", &spec.target_mean_age, o.target_mean_age);
  set("--age-tolerance", &spec.age_tolerance, o.age_tolerance);
  set("--eval-untrained", &spec.eval_untrained, o.eval_untrained);
  if (sub.count("--seed") || sub.get_parent()->count("--seed")) spec.seed = g.seed;
  if (!a.baseline.empty()) spec.baseline_report = a.baseline.string();
  spec.Validate();
  if (!spec.baseline_report.empty() && !fs::exists(spec.baseline_report)) {
    throw ge2e::ConfigError("baseline report not found: " + spec.baseline_report);
  }

  const ge2e::CohortManifest m = ReadManifest(a.manifest, spec.min_utterances);
  const ge2e::ExperimentReport r =
      ge2e::RunExperiment(spec, m, {.jobs = g.jobs, .out_dir = a.out});
  std::cout << r.name << ": EER " << ge2e::FormatFixed(r.mean_eer, 2);
  if (r.std_eer) std::cout << " ± " << ge2e::FormatFixed(*r.std_eer, 2);
  std::cout << "% over " << r.repetitions.size() << " repetition(s)";
  if (r.baseline_comparison) {
    std::cout << "; vs " << r.baseline_name << " P = "
              << ge2e::FormatG(r.baseline_comparison->p_value, 3);
  }
  std::cout << '\n';
  return 0;
}

int RunReport(const std::vector<fs::path>& inputs, const fs::path& out) {
  std::vector<ge2e::ExperimentReport> reports;
  for (const auto& p : inputs) reports.push_back(ge2e::LoadReport(p));
  fs::create_directories(out);
  ge2e::WriteMergedCsv(out / "merged.csv", reports);
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    os << text;
    if (!os) throw ge2e::IoError(path.string() + ": write failed");
  };
  write(out / "eer_distribution.svg", ge2e::DistributionSvg(reports));
  for (const auto& r : reports) {
    std::cout << r.name << " (" << ge2e::ReportSize(r) << " training speakers): EER "
              << ge2e::FormatFixed(r.mean_eer, 2);
    if (r.std_eer) std::cout << " ± " << ge2e::FormatFixed(*r.std_eer, 2);
    std::cout << "%\n";
  }
  if (const auto fit = ge2e::FitSizeTrend(reports)) {
    write(out / "eer_vs_size.svg", ge2e::TrendSvg(reports, *fit));
    std::cout << "fit: y = a + b ln x, a = " << ge2e::FormatFixed(fit->intercept, 4)
              << ", b = " << ge2e::FormatFixed(fit->slope, 4)
              << ", R^2 = " << ge2e::FormatFixed(fit->r_squared, 2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GE2E d-vector speaker verification toolkit"};
  app.require_subcommand(1);
  Globals g;
  AddGlobals(&app, &g);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  ge2e::SynthConfig synth_cfg;
  std::vector<std::string> groups;
  fs::path synth_out;
  AddGlobals(synth, &g);
  synth->add_option("--speakers", synth_cfg.speakers, "Number of speakers");
  synth->add_option("--utterances", synth_cfg.utterances, "Utterances per speaker");
  synth->add_option("--jitter", synth_cfg.jitter, "Per-utterance voice spread");
  synth->add_option("--snr-db", synth_cfg.snr_db, "Additive noise level (dB SNR)");
  synth->add_option("--snr-spread-db", synth_cfg.snr_spread_db,
                    "Per-utterance SNR varies by up to this much (dB)");
  synth->add_option("--voice-spread", synth_cfg.voice_spread,
                    "Fraction of the voice parameter ranges to sample from");
  synth->add_option("--segments", synth_cfg.segments_per_utterance,
                    "Voiced segments per utterance");
  synth->add_option("--group", groups,
                    "name:weight:age_mean:age_std:wrr_mean:wrr_std:variability "
                    "(repeatable)");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // Shared by prep, train, eval.
  fs::path manifest;
  int min_utterances = ge2e::kMinUtterancesPerSpeaker;
  ge2e::VadConfig vad;

  auto* prep = app.add_subcommand("prep", "Write log-mel dumps of every partial");
  fs::path prep_out;
  AddGlobals(prep, &g);
  prep->add_option("--manifest", manifest, "Cohort manifest (JSONL)")->required();
  prep->add_option("--min-utterances", min_utterances, "Minimum per speaker");
  AddVad(prep, &vad);
  prep->add_option("--out", prep_out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a d-vector network");
  ge2e::TrainConfig train_cfg;
  ge2e::BatchSpec batch;
  fs::path ckpt_dir;
  AddGlobals(train, &g);
  train->add_option("--manifest", manifest, "Cohort manifest (JSONL)")->required();
  train->add_option("--min-utterances", min_utterances, "Minimum per speaker");
  train->add_option("--steps", train_cfg.steps, "Training steps");
  train->add_option("--lr", train_cfg.learning_rate, "Adam learning rate");
  train->add_option("--checkpoint-every", train_cfg.checkpoint_every,
                    "Steps between checkpoints");
  AddBatch(train, &batch);
  AddShape(train, &train_cfg.shape);
  AddVad(train, &vad);
  train->add_option("--checkpoint-dir", ckpt_dir, "Checkpoint directory")->required();

  auto* eval = app.add_subcommand("eval", "Score a cohort with a checkpoint");
  fs::path ckpt, eval_out;
  int eval_m = 2;
  AddGlobals(eval, &g);
  eval->add_option("--manifest", manifest, "Cohort manifest (JSONL)")->required();
  eval->add_option("--min-utterances", min_utterances, "Minimum per speaker");
  eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("--m", eval_m, "Utterances per speaker (M)");
  AddVad(eval, &vad);
  eval->add_option("--out", eval_out, "Directory for scores.csv and eer.csv");

  auto* exp = app.add_subcommand("experiment", "Run a repeated cohort experiment");
  ExperimentArgs ea;
  AddGlobals(exp, &g);
  exp->add_option("--spec", ea.spec_path, "Experiment spec (JSON)");
  exp->add_option("--manifest", ea.manifest, "Cohort manifest (JSONL)")->required();
  exp->add_option("--out", ea.out, "Output directory")->required();
  exp->add_option("--baseline", ea.baseline, "Summary JSON to t-test against");
  exp->add_option("--name", ea.overrides.name, "Experiment name");
  exp->add_option("--speakers", ea.overrides.speakers, "Cohort size n");
  exp->add_option("--reps", ea.overrides.repetitions, "Repetitions");
  exp->add_option("--m", ea.overrides.eval_m, "Evaluation M");
  exp->add_option("--steps", ea.overrides.train.steps, "Training steps");
  exp->add_option("--lr", ea.overrides.train.learning_rate, "Adam learning rate");
  exp->add_option("--min-utterances", ea.overrides.min_utterances,
                  "Minimum per speaker");
  exp->add_option("--target-age", ea.overrides.target_mean_age,
                  "Target mean cohort age");
  exp->add_option("--age-tolerance", ea.overrides.age_tolerance,
                  "Allowed distance from the target age");
  exp->add_flag("--eval-untrained", ea.overrides.eval_untrained,
                "Also score the untrained network");
  AddBatch(exp, &ea.overrides.batch);
  AddShape(exp, &ea.overrides.train.shape);

  auto* report = app.add_subcommand("report", "Merge experiment summaries");
  std::vector<fs::path> inputs;
  fs::path report_out;
  AddGlobals(report, &g);
  report->add_option("reports", inputs, "summary.json files")->required();
  report->add_option("--out", report_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  ge2e::GlobalLogLevel() = g.verbose ? ge2e::LogLevel::kInfo : ge2e::LogLevel::kWarning;

  try {
    if (*synth) return RunSynth(g, synth_cfg, groups, synth_out);
    if (*prep) return RunPrep(g, manifest, min_utterances, vad, prep_out);
    if (*train) {
      return RunTrain(g, manifest, min_utterances, vad, train_cfg, batch, ckpt_dir);
    }
    if (*eval) return RunEval(g, manifest, min_utterances, vad, ckpt, eval_m, eval_out);
    if (*exp) return RunExperimentCmd(g, *exp, ea);
    if (*report) return RunReport(inputs, report_out);
  } catch (const ge2e::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
