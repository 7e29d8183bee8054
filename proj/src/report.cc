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

#include "ge2e/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ge2e/error.h"
#include "ge2e/format.h"

namespace ge2e {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 56.0;

// Round axis limits so the plot starts at zero and ends on a 1/2/5 step.
double NiceCeil(double v) {
  if (!(v > 0)) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= v) return m * p;
  }
  return 10.0 * p;
}

std::string Num(double v) { return FormatFixed(v, 2); }

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void Header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
     << "font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-size=\"14\">" << Escape(title) << "</text>\n";
}

void YAxis(std::ostringstream& os, double y_max) {
  const double bottom = kHeight - kMargin;
  os << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
     << kMargin << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = y_max * i / 5;
    const double y = bottom - (bottom - kMargin) * i / 5;
    os << "<line x1=\"" << kMargin - 4 << "\" y1=\"" << Num(y) << "\" x2=\""
       << kMargin << "\" y2=\"" << Num(y) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << kMargin - 6 << "\" y=\"" << Num(y + 4)
       << "\" text-anchor=\"end\">" << FormatG(v, 3) << "</text>\n";
  }
  os << "<text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 "
     << kHeight / 2 << ")\" text-anchor=\"middle\">EER (%)</text>\n";
}

}  // namespace

int ReportSize(const ExperimentReport& report) {
  if (!report.repetitions.empty() && report.repetitions.front().train_size > 0) {
    return report.repetitions.front().train_size;
  }
  return report.speakers;
}

std::optional<stats::RegressionFit> FitSizeTrend(
    const std::vector<ExperimentReport>& reports) {
  std::vector<double> x, y;
  std::set<int> sizes;
  for (const auto& r : reports) {
    const int size = ReportSize(r);
    if (size <= 0) continue;
    x.push_back(size);
    y.push_back(r.mean_eer);
    sizes.insert(size);
  }
  if (sizes.size() < 2) return std::nullopt;
  return stats::LogRegression(x, y);
}

void WriteMergedCsv(const std::filesystem::path& path,
                    const std::vector<ExperimentReport>& reports) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "name,speakers,train_size,repetitions,mean_eer,std_eer,"
        "shapiro_p,baseline,baseline_p,eer_wrr_r\n";
  for (const auto& r : reports) {
    os << r.name << ',' << r.speakers << ',' << ReportSize(r) << ','
       << r.repetitions.size() << ',' << FormatG(r.mean_eer) << ','
       << (r.std_eer ? FormatG(*r.std_eer) : "") << ','
       << (r.normality ? FormatG(r.normality->p_value) : "") << ','
       << r.baseline_name << ','
       << (r.baseline_comparison ? FormatG(r.baseline_comparison->p_value) : "")
       << ',' << (r.eer_wrr_r ? FormatG(*r.eer_wrr_r) : "") << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

std::string DistributionSvg(const std::vector<ExperimentReport>& reports) {
  std::ostringstream os;
  Header(os, "EER distribution per experiment");
  double y_max = 0.0;
  for (const auto& r : reports) {
    for (double e : r.Eers()) y_max = std::max(y_max, e);
  }
  y_max = NiceCeil(y_max);
  YAxis(os, y_max);
  const double bottom = kHeight - kMargin;
  const double plot_w = kWidth - 2 * kMargin;
  const double slot = plot_w / std::max<size_t>(1, reports.size());
  auto to_y = [&](double v) { return bottom - (bottom - kMargin) * v / y_max; };
  os << "<line x1=\"" << kMargin << "\" y1=\"" << bottom << "\" x2=\""
     << kWidth - kMargin << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";

  for (size_t i = 0; i < reports.size(); ++i) {
    std::vector<double> e = reports[i].Eers();
    std::sort(e.begin(), e.end());
    const double cx = kMargin + slot * (i + 0.5);
    const double half = std::min(30.0, slot * 0.3);
    auto quantile = [&](double q) {
      const double pos = q * (e.size() - 1);
      const size_t lo = static_cast<size_t>(std::floor(pos));
      const size_t hi = std::min(lo + 1, e.size() - 1);
      return e[lo] + (pos - lo) * (e[hi] - e[lo]);
    };
    const double q1 = quantile(0.25), med = quantile(0.5), q3 = quantile(0.75);
    os << "<line x1=\"" << Num(cx) << "\" y1=\"" << Num(to_y(e.front()))
       << "\" x2=\"" << Num(cx) << "\" y2=\"" << Num(to_y(e.back()))
       << "\" stroke=\"gray\"/>\n"
       << "<rect x=\"" << Num(cx - half) << "\" y=\"" << Num(to_y(q3))
       << "\" width=\"" << Num(2 * half) << "\" height=\""
       << Num(to_y(q1) - to_y(q3)) << "\" fill=\"#cfe0f3\" stroke=\"black\"/>\n"
       << "<line x1=\"" << Num(cx - half) << "\" y1=\"" << Num(to_y(med))
       << "\" x2=\"" << Num(cx + half) << "\" y2=\"" << Num(to_y(med))
       << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double v : e) {
      os << "<circle cx=\"" << Num(cx) << "\" cy=\"" << Num(to_y(v))
         << "\" r=\"2\" fill=\"#1f4e79\"/>\n";
    }
    os << "<text x=\"" << Num(cx) << "\" y=\"" << bottom + 16
       << "\" text-anchor=\"middle\">" << Escape(reports[i].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string TrendSvg(const std::vector<ExperimentReport>& reports,
                     const stats::RegressionFit& fit) {
  std::ostringstream os;
  Header(os, "EER vs training size: y = " + FormatG(fit.intercept, 6) + " + (" +
                 FormatG(fit.slope, 6) + ") ln x, R^2 = " +
                 FormatFixed(fit.r_squared, 3));
  double x_min = 0.0, x_max = 0.0, y_max = 0.0;
  bool first = true;
  for (const auto& r : reports) {
    const double s = ReportSize(r);
    if (s <= 0) continue;
    x_min = first ? s : std::min(x_min, s);
    x_max = first ? s : std::max(x_max, s);
    first = false;
    y_max = std::max(y_max, r.mean_eer + r.std_eer.value_or(0.0));
  }
  y_max = NiceCeil(std::max(y_max, fit.intercept + fit.slope * std::log(x_min)));
  const double lx0 = std::log(x_min) - 0.2, lx1 = std::log(x_max) + 0.2;
  const double bottom = kHeight - kMargin;
  auto to_x = [&](double s) {
    return kMargin + (kWidth - 2 * kMargin) * (std::log(s) - lx0) / (lx1 - lx0);
  };
  auto to_y = [&](double v) {
    return bottom - (bottom - kMargin) * std::clamp(v, 0.0, y_max) / y_max;
  };
  YAxis(os, y_max);
  os << "<line x1=\"" << kMargin << "\" y1=\"" << bottom << "\" x2=\""
     << kWidth - kMargin << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">training speakers (log scale)</text>\n";

  std::set<int> ticks;
  for (const auto& r : reports) {
    if (ReportSize(r) > 0) ticks.insert(ReportSize(r));
  }
  for (int t : ticks) {
    os << "<text x=\"" << Num(to_x(t)) << "\" y=\"" << bottom + 16
       << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }

  os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  for (int i = 0; i <= 100; ++i) {
    const double lx = lx0 + (lx1 - lx0) * i / 100;
    os << Num(to_x(std::exp(lx))) << ',' << Num(to_y(fit.intercept + fit.slope * lx))
       << (i < 100 ? " " : "");
  }
  os << "\"/>\n";

  for (const auto& r : reports) {
    const double s = ReportSize(r);
    if (s <= 0) continue;
    if (r.std_eer) {
      os << "<line x1=\"" << Num(to_x(s)) << "\" y1=\""
         << Num(to_y(r.mean_eer - *r.std_eer)) << "\" x2=\"" << Num(to_x(s))
         << "\" y2=\"" << Num(to_y(r.mean_eer + *r.std_eer))
         << "\" stroke=\"#1f4e79\"/>\n";
    }
    os << "<circle cx=\"" << Num(to_x(s)) << "\" cy=\"" << Num(to_y(r.mean_eer))
       << "\" r=\"3.5\" fill=\"#1f4e79\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace ge2e
