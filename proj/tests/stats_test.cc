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

#include "ge2e/stats.h"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ge2e/error.h"
#include "stats_reference.h"

namespace ge2e::stats {
namespace {

TEST(DescribeTest, SingleValue) {
  const std::vector<double> x = {5};
  const Descriptive d = Describe(x);
  EXPECT_EQ(d.mean, 5);
  EXPECT_EQ(d.median, 5);
  EXPECT_EQ(d.min, 5);
  EXPECT_EQ(d.max, 5);
  EXPECT_FALSE(d.std.has_value());
}

TEST(DescribeTest, SmallList) {
  const std::vector<double> x = {4, 1, 3, 2};
  const Descriptive d = Describe(x);
  EXPECT_DOUBLE_EQ(d.mean, 2.5);
  EXPECT_NEAR(*d.std, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(*d.std, 1.2910, 1e-4);
  EXPECT_DOUBLE_EQ(d.median, 2.5);
  EXPECT_EQ(d.min, 1);
  EXPECT_EQ(d.max, 4);
}

TEST(DescribeTest, ConstantHasZeroStd) {
  const std::vector<double> x = {3, 3, 3};
  EXPECT_EQ(*Describe(x).std, 0.0);
}

TEST(DescribeTest, EmptyIsAnError) {
  EXPECT_THROW(Describe(std::vector<double>{}), ConfigError);
}

TEST(TTestTest, MatchesReference) {
  for (const auto& c : testing::StatsCases()) {
    const TestResult s = TTestUnpaired(c.a, c.b);
    EXPECT_NEAR(s.statistic, c.student_t, 1e-9);
    EXPECT_NEAR(s.p_value, c.student_p, 1e-9);
    const TestResult w = TTestUnpaired(c.a, c.b, TTestVariant::kWelch);
    EXPECT_NEAR(w.statistic, c.welch_t, 1e-9);
    EXPECT_NEAR(w.p_value, c.welch_p, 1e-9);
  }
}

TEST(TTestTest, IdenticalSamples) {
  const std::vector<double> a = {1.5, 2.5, 4.0, 7.0};
  const TestResult r = TTestUnpaired(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(TTestTest, ShiftedByTen) {
  const std::vector<double> a = {1, 2, 3}, b = {11, 12, 13};
  const TestResult r = TTestUnpaired(a, b);
  EXPECT_LT(r.p_value, 0.01);
  EXPECT_NEAR(r.statistic, -12.24744871391589, 1e-12);
  EXPECT_NEAR(r.p_value, 0.00025521674944192687, 1e-12);
  EXPECT_TRUE(r.significant);
}

TEST(TTestTest, SwapNegatesStatisticKeepsP) {
  for (const auto& c : testing::StatsCases()) {
    const TestResult ab = TTestUnpaired(c.a, c.b);
    const TestResult ba = TTestUnpaired(c.b, c.a);
    EXPECT_EQ(ab.statistic, -ba.statistic);
    EXPECT_EQ(ab.p_value, ba.p_value);
  }
}

TEST(TTestTest, CommonShiftKeepsP) {
  for (const auto& c : testing::StatsCases()) {
    std::vector<double> a = c.a, b = c.b;
    for (auto& v : a) v += 123.25;
    for (auto& v : b) v += 123.25;
    EXPECT_NEAR(TTestUnpaired(a, b).p_value, TTestUnpaired(c.a, c.b).p_value, 1e-9);
  }
}

TEST(TTestTest, ZeroVariance) {
  const std::vector<double> a = {2, 2, 2}, b = {2, 2};
  const TestResult r = TTestUnpaired(a, b);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  const std::vector<double> c = {3, 3};
  EXPECT_THROW(TTestUnpaired(a, c), NumericError);
}

TEST(TTestTest, TooFewSamples) {
  const std::vector<double> a = {1}, b = {1, 2};
  EXPECT_THROW(TTestUnpaired(a, b), ConfigError);
}

TEST(ShapiroWilkTest, MatchesReference) {
  for (const auto& c : testing::StatsCases()) {
    const TestResult a = ShapiroWilk(c.a);
    EXPECT_NEAR(a.statistic, c.sw_a_w, 1e-6);
    EXPECT_NEAR(a.p_value, c.sw_a_p, 1e-4);
    const TestResult b = ShapiroWilk(c.b);
    EXPECT_NEAR(b.statistic, c.sw_b_w, 1e-6);
    EXPECT_NEAR(b.p_value, c.sw_b_p, 1e-4);
  }
}

TEST(ShapiroWilkTest, NormalQuantilesLookNormal) {
  std::vector<double> q;
  for (int i = 0; i < 20; ++i) q.push_back(NormalQuantile((i + 0.5) / 20));
  const TestResult r = ShapiroWilk(q);
  EXPECT_GT(r.statistic, 0.95);
  EXPECT_GT(r.p_value, 0.05);
  EXPECT_NEAR(r.statistic, 0.9984548979891772, 1e-6);
}

TEST(ShapiroWilkTest, ExponentialSampleIsRejected) {
  const std::vector<double> e = {
      0.707529, 1.025203, 0.568549, 0.89511,  0.206533, 3.383637, 0.009754,
      2.809216, 0.575333, 0.300534, 0.541136, 0.312146, 0.89977,  1.073701,
      1.88425,  0.222071, 3.144673, 0.735857, 0.348373, 0.883565, 0.075062,
      0.060046, 1.223566, 0.772906, 2.195965, 0.475154, 0.521318, 1.180755,
      0.526535, 0.022169, 0.293279, 1.014259, 0.63473,  1.396578, 0.008301,
      0.903831, 0.250345, 0.355628, 3.074857, 1.404422, 3.795412, 1.748099,
      2.243039, 0.144947, 0.302554, 0.238774, 1.148245, 1.223253, 0.127217,
      0.383855};
  const TestResult r = ShapiroWilk(e);
  EXPECT_LT(r.p_value, 0.05);
  EXPECT_NEAR(r.statistic, 0.8275831093194038, 1e-6);
  EXPECT_NEAR(r.p_value, 4.032463476331295e-06, 1e-7);
}

TEST(ShapiroWilkTest, ThreePoints) {
  const std::vector<double> x = {1, 2, 4};
  const TestResult r = ShapiroWilk(x);
  EXPECT_NEAR(r.statistic, 0.9642857142857142, 1e-9);
  EXPECT_NEAR(r.p_value, 0.6368868450289689, 1e-6);
}

TEST(ShapiroWilkTest, StatisticInUnitInterval) {
  std::mt19937_64 rng(3);
  std::gamma_distribution<double> gamma(0.5, 1.0);
  for (int n : {3, 4, 7, 11, 12, 25, 120, 600}) {
    std::vector<double> x(n);
    for (auto& v : x) v = gamma(rng);
    const TestResult r = ShapiroWilk(x);
    EXPECT_GT(r.statistic, 0.0) << n;
    EXPECT_LE(r.statistic, 1.0) << n;
    EXPECT_GE(r.p_value, 0.0) << n;
    EXPECT_LE(r.p_value, 1.0) << n;
  }
}

TEST(ShapiroWilkTest, Errors) {
  EXPECT_THROW(ShapiroWilk(std::vector<double>{1, 2}), ConfigError);
  EXPECT_THROW(ShapiroWilk(std::vector<double>(5001, 1.0)), ConfigError);
  EXPECT_THROW(ShapiroWilk(std::vector<double>{4, 4, 4, 4}), NumericError);
}

TEST(PearsonTest, Identities) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_NEAR(Pearson(x, x), 1.0, 1e-15);
  std::vector<double> y;
  for (double v : x) y.push_back(-2 * v + 7);
  EXPECT_NEAR(Pearson(x, y), -1.0, 1e-15);
  const std::vector<double> z = {2, 1, 4, 3};
  EXPECT_NEAR(Pearson(x, z), 0.6, 1e-12);
}

TEST(PearsonTest, AffineInvariance) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(30), y(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = n(rng);
    y[i] = 0.4 * x[i] + n(rng);
  }
  const double r = Pearson(x, y);
  std::vector<double> xs = x, ys = y;
  for (auto& v : xs) v = 3.5 * v - 20;
  for (auto& v : ys) v = 0.01 * v + 4;
  EXPECT_NEAR(Pearson(xs, ys), r, 1e-12);
}

TEST(PearsonTest, Errors) {
  const std::vector<double> x = {1, 2, 3}, c = {5, 5, 5}, shorter = {1, 2};
  EXPECT_THROW(Pearson(x, c), NumericError);
  EXPECT_THROW(Pearson(x, shorter), ConfigError);
}

TEST(LogRegressionTest, ReferenceCurve) {
  const std::vector<double> x = {50, 500, 1500, 3000};
  const std::vector<double> y = {5.19, 1.87, 1.15, 0.90};
  const RegressionFit f = LogRegression(x, y);
  EXPECT_NEAR(f.intercept, 9.1543237903, 1e-6);
  EXPECT_NEAR(f.slope, -1.0809973418, 1e-6);
  EXPECT_NEAR(f.r_squared, 0.95, 0.005);
}

TEST(LogRegressionTest, ExactModelIsRecovered) {
  const std::vector<double> x = {0.5, 2, 7, 40, 1000};
  std::vector<double> y;
  for (double v : x) y.push_back(2 + 3 * std::log(v));
  const RegressionFit f = LogRegression(x, y);
  EXPECT_NEAR(f.intercept, 2, 1e-10);
  EXPECT_NEAR(f.slope, 3, 1e-10);
  EXPECT_NEAR(f.r_squared, 1, 1e-12);
}

TEST(LogRegressionTest, ConstantY) {
  const std::vector<double> x = {1, 2, 3}, y = {4, 4, 4};
  const RegressionFit f = LogRegression(x, y);
  EXPECT_EQ(f.slope, 0.0);
  EXPECT_EQ(f.r_squared, 0.0);
  EXPECT_DOUBLE_EQ(f.intercept, 4.0);
}

TEST(LogRegressionTest, Errors) {
  EXPECT_THROW(LogRegression(std::vector<double>{2, 2}, std::vector<double>{1, 3}),
               NumericError);
  EXPECT_THROW(LogRegression(std::vector<double>{0, 2}, std::vector<double>{1, 3}),
               ConfigError);
  EXPECT_THROW(LogRegression(std::vector<double>{1}, std::vector<double>{1}),
               ConfigError);
}

TEST(SpecialFunctionsTest, NormalQuantileInvertsCdf) {
  for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-7}) {
    EXPECT_NEAR(NormalCdf(NormalQuantile(p)), p, 1e-12 + 1e-9 * p);
  }
  EXPECT_NEAR(NormalQuantile(0.975), 1.959963984540054, 1e-12);
}

TEST(SpecialFunctionsTest, IncompleteBeta) {
  EXPECT_EQ(RegularizedIncompleteBeta(2, 3, 0), 0.0);
  EXPECT_EQ(RegularizedIncompleteBeta(2, 3, 1), 1.0);
  // I_x(1, 1) = x; I_x(a, 1) = x^a.
  EXPECT_NEAR(RegularizedIncompleteBeta(1, 1, 0.37), 0.37, 1e-14);
  EXPECT_NEAR(RegularizedIncompleteBeta(2.5, 1, 0.6), std::pow(0.6, 2.5), 1e-14);
  EXPECT_NEAR(RegularizedIncompleteBeta(3, 4, 0.2) + RegularizedIncompleteBeta(4, 3, 0.8),
              1.0, 1e-14);
}

TEST(SpecialFunctionsTest, StudentTailMatchesCauchy) {
  // One degree of freedom is the Cauchy distribution.
  for (double t : {0.1, 1.0, 4.0, 30.0}) {
    EXPECT_NEAR(StudentTwoSidedP(t, 1), 1 - 2 * std::atan(t) / std::acos(-1.0), 1e-12);
  }
}

}  // namespace
}  // namespace ge2e::stats
