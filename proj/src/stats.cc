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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ge2e/error.h"

namespace ge2e::stats {

namespace {

double Mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sum of squared deviations from the mean.
double SumSquares(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s;
}

double Poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (size_t i = c.size(); i-- > 0;) r = r * x + c[i];
  return r;
}

TestResult MakeResult(double statistic, double p) {
  p = std::clamp(p, 0.0, 1.0);
  return {statistic, p, p <= kSignificanceLevel};
}

}  // namespace

Descriptive Describe(std::span<const double> samples) {
  if (samples.empty()) throw ConfigError("descriptive statistics of no data");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  Descriptive d;
  d.mean = Mean(s);
  if (s.size() >= 2) {
    d.std = std::sqrt(SumSquares(s, d.mean) / static_cast<double>(s.size() - 1));
  }
  const size_t n = s.size();
  d.median = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  d.min = s.front();
  d.max = s.back();
  return d;
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Wichura's AS 241 (PPND16).
double NormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw ConfigError("normal quantile of p outside [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

namespace {

// Continued fraction for the incomplete beta function, modified Lentz.
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw ConfigError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double StudentTwoSidedP(double t, double df) {
  if (!(df > 0)) throw ConfigError("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  return RegularizedIncompleteBeta(0.5 * df, 0.5, df / (df + t * t));
}

TestResult ShapiroWilk(std::span<const double> samples) {
  const size_t n = samples.size();
  if (n < 3 || n > 5000) {
    throw ConfigError("Shapiro-Wilk needs 3 <= n <= 5000, got n=" +
                      std::to_string(n));
  }
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  if (!(x.back() - x.front() > 1e-19 * std::max(1.0, std::abs(x.back())))) {
    throw NumericError("Shapiro-Wilk undefined for a constant sample");
  }

  const size_t half = n / 2;
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    static constexpr double c1[] = {0.0, 0.221157, -0.147981,
                                    -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762,
                                    -1.752461, 5.682633, -3.582633};
    const double an25 = static_cast<double>(n) + 0.25;
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (size_t i = 0; i < half; ++i) {
      m[i] = NormalQuantile((static_cast<double>(i + 1) - 0.375) / an25);
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    const double a1 = Poly(c1, rsn) - m[0] / ssumm2;
    size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + Poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  const double mean = Mean(x);
  const double ss = SumSquares(x, mean);
  double num = 0.0;
  for (size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  double w = std::min(1.0, num * num / ss);

  if (n == 3) {
    constexpr double kPi6 = 6.0 / std::numbers::pi;
    const double stqr = std::asin(std::sqrt(0.75));
    return MakeResult(w, std::max(0.0, kPi6 * (std::asin(std::sqrt(w)) - stqr)));
  }
  double y = std::log1p(-w);
  const double dn = static_cast<double>(n);
  double mu, sigma;
  if (n <= 11) {
    static constexpr double g[] = {-2.273, 0.459};
    static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    const double gamma = Poly(g, dn);
    if (y >= gamma) return MakeResult(w, 1e-99);
    y = -std::log(gamma - y);
    mu = Poly(c3, dn);
    sigma = std::exp(Poly(c4, dn));
  } else {
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    const double ln = std::log(dn);
    mu = Poly(c5, ln);
    sigma = std::exp(Poly(c6, ln));
  }
  return MakeResult(w, 1.0 - NormalCdf((y - mu) / sigma));
}

TestResult TTestUnpaired(std::span<const double> a, std::span<const double> b,
                         TTestVariant variant) {
  if (a.size() < 2 || b.size() < 2) {
    throw ConfigError("t-test needs at least 2 samples per group");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = Mean(a), mb = Mean(b);
  const double va = SumSquares(a, ma) / (na - 1.0);
  const double vb = SumSquares(b, mb) / (nb - 1.0);
  double se, df;
  if (variant == TTestVariant::kStudent) {
    df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  } else {
    const double qa = va / na, qb = vb / nb;
    se = std::sqrt(qa + qb);
    df = (qa + qb) * (qa + qb) /
         (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  }
  if (!(se > 0.0)) {
    if (ma == mb) return MakeResult(0.0, 1.0);
    throw NumericError("t-test with zero variance and unequal means");
  }
  const double t = (ma - mb) / se;
  return MakeResult(t, StudentTwoSidedP(t, df));
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("Pearson correlation needs two equal-length samples of "
                      "size >= 2");
  }
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my);
  const double sxx = SumSquares(x, mx), syy = SumSquares(y, my);
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw NumericError("Pearson correlation undefined for zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RegressionFit LogRegression(std::span<const double> x,
                            std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("log regression needs two equal-length samples of "
                      "size >= 2");
  }
  std::vector<double> lx(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw ConfigError("log regression needs x > 0");
    lx[i] = std::log(x[i]);
  }
  const double mx = Mean(lx), my = Mean(y);
  const double sxx = SumSquares(lx, mx);
  if (!(sxx > 0.0)) throw NumericError("log regression slope undefined: all x equal");
  double sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) sxy += (lx[i] - mx) * (y[i] - my);
  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double tot = SumSquares(y, my);
  double res = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * lx[i]);
    res += e * e;
  }
  fit.r_squared = tot > 0.0 ? 1.0 - res / tot : 0.0;
  return fit;
}

}  // namespace ge2e::stats
