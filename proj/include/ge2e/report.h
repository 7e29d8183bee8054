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

// Cross-experiment summaries: a merged CSV, per-experiment EER distribution
// plots and the EER-versus-training-size curve with its logarithmic fit.

#ifndef GE2E_REPORT_H_
#define GE2E_REPORT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ge2e/experiment.h"
#include "ge2e/stats.h"

namespace ge2e {

// Training-set size used as the x coordinate of a report: the train size of
// its first repetition, or the speaker count when that is unknown.
int ReportSize(const ExperimentReport& report);

// Fit of mean EER on ln(size). Absent when fewer than two distinct sizes.
std::optional<stats::RegressionFit> FitSizeTrend(
    const std::vector<ExperimentReport>& reports);

void WriteMergedCsv(const std::filesystem::path& path,
                    const std::vector<ExperimentReport>& reports);

// Box and points per experiment.
std::string DistributionSvg(const std::vector<ExperimentReport>& reports);

// Mean EER (with std bars) against size on a log axis, plus the fitted curve.
std::string TrendSvg(const std::vector<ExperimentReport>& reports,
                     const stats::RegressionFit& fit);

}  // namespace ge2e

#endif  // GE2E_REPORT_H_
