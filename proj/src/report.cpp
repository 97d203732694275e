#include "pinchlab/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "pinchlab/error.hpp"

namespace pinchlab {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string contact_csv(const ContactReport& r) {
  std::string out = "vertex,mu_or_rho,lambda_n,contact_index,z_residual,reflection_defect\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double defect = i < r.reflection_defect.size() ? r.reflection_defect[i] : std::numeric_limits<double>::quiet_NaN();
    out += fmt::format("{},{},{},{},{},{}\n", i, csv_number(r.value[i]), csv_number(r.lambda_n[i]), r.contact[i],
                       csv_number(r.z_residual[i]), csv_number(defect));
  }
  return out;
}

std::string trace_csv(const FlowTrace& trace) {
  std::string out = "t,H_max,H_min,mu_max,rho_max,area\n";
  for (const FlowSample& s : trace.samples) {
    const auto& H = s.geometry.H;
    const double mu_max = s.has_contacts ? *std::max_element(s.mu.value.begin(), s.mu.value.end()) : std::nan("");
    const double rho_max = s.has_contacts ? *std::max_element(s.rho.value.begin(), s.rho.value.end()) : std::nan("");
    out += fmt::format("{},{},{},{},{},{}\n", csv_number(s.t), csv_number(*std::max_element(H.begin(), H.end())),
                       csv_number(*std::min_element(H.begin(), H.end())), csv_number(mu_max), csv_number(rho_max),
                       csv_number(s.geometry.total_measure()));
  }
  return out;
}

std::vector<double> parse_trace_times(const std::string& csv) {
  std::vector<double> times;
  std::size_t start = csv.find('\n');
  if (csv.rfind("t,", 0) != 0 || start == std::string::npos) throw Error(ErrorCode::IoError, "trace.csv: missing header");
  int line = 1;
  for (++start; start < csv.size();) {
    const std::size_t end = std::min(csv.find('\n', start), csv.size());
    ++line;
    const std::size_t comma = std::min(csv.find(',', start), end);
    double t;
    const auto [ptr, ec] = std::from_chars(csv.data() + start, csv.data() + comma, t);
    if (ec != std::errc() || ptr != csv.data() + comma) {
      throw Error(ErrorCode::IoError, fmt::format("trace.csv:{}: malformed time", line));
    }
    times.push_back(t);
    start = end + 1;
  }
  return times;
}

namespace {

/// Round step 1, 2 or 5 times a power of ten giving about `count` intervals.
double nice_step(double span, int count) {
  const double raw = span / count;
  const double base = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * base >= raw) return m * base;
  }
  return 10.0 * base;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kColours = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string svg_chart(const LineChart& chart) {
  constexpr double width = 720, height = 440, left = 80, right = 200, top = 40, bottom = 60;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const ChartSeries& s : chart.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  out += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                     escape(chart.title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top, pw, ph);

  for (const bool vertical : {true, false}) {
    const double lo = vertical ? x0 : y0, hi = vertical ? x1 : y1;
    const double step = nice_step(hi - lo, 6);
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
      const double tick = std::abs(v) < 1e-12 * step ? 0.0 : v;
      if (vertical) {
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", px(tick), top, top + ph);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", px(tick), top + ph + 18, tick);
      } else {
        out += fmt::format("<line x1=\"{1}\" y1=\"{0:.2f}\" x2=\"{2}\" y2=\"{0:.2f}\" stroke=\"#ddd\"/>\n", py(tick), left, left + pw);
        out += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", left - 6, py(tick) + 4, tick);
      }
    }
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, height - 16,
                     escape(chart.x_label));
  out += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                     top + ph / 2, escape(chart.y_label));

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const ChartSeries& s = chart.series[k];
    const char* colour = kColours[k % kColours.size()];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", colour,
                       s.dashed ? " stroke-dasharray=\"6 4\"" : "", points);
    const double ly = top + 14 + 18 * static_cast<double>(k);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"{4}/>\n",
                       left + pw + 12, ly, left + pw + 36, colour, s.dashed ? " stroke-dasharray=\"6 4\"" : "");
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", left + pw + 42, ly + 4, escape(s.name));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace pinchlab
