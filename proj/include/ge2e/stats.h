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

#ifndef GE2E_STATS_H_
#define GE2E_STATS_H_

#include <optional>
#include <span>

namespace ge2e::stats {

inline constexpr double kSignificanceLevel = 0.05;

struct Descriptive {
  double mean = 0.0;
  std::optional<double> std;  // sample std (n - 1); absent when n < 2
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Descriptive Describe(std::span<const double> samples);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p_value <= 0.05
};

// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
// approximations, 3 <= n <= 5000.
TestResult ShapiroWilk(std::span<const double> samples);

enum class TTestVariant { kStudent, kWelch };

// Two-tailed unpaired t-test; statistic is t for a - b.
TestResult TTestUnpaired(std::span<const double> a, std::span<const double> b,
                         TTestVariant variant = TTestVariant::kStudent);

double Pearson(std::span<const double> x, std::span<const double> y);

struct RegressionFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

// Least squares fit of y = intercept + slope * ln(x).
RegressionFit LogRegression(std::span<const double> x,
                            std::span<const double> y);

// Special functions behind the tests.
double NormalCdf(double z);
double NormalQuantile(double p);
double RegularizedIncompleteBeta(double a, double b, double x);
// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double StudentTwoSidedP(double t, double df);

}  // namespace ge2e::stats

#endif  // GE2E_STATS_H_
