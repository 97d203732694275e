#pragma once

#include <string>
#include <vector>

#include "pinchlab/flow.hpp"
#include "pinchlab/inradius.hpp"

namespace pinchlab {

/// Decimal with 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string csv_number(double v);

/// Header `vertex,mu_or_rho,lambda_n,contact_index,z_residual,reflection_defect`, one row per vertex.
std::string contact_csv(const ContactReport& report);

/// Header `t,H_max,H_min,mu_max,rho_max,area`, one row per sample (area is the total measure |M_t|).
std::string trace_csv(const FlowTrace& trace);

/// Times in the first column of a trace_csv file; throws IoError on a malformed file.
std::vector<double> parse_trace_times(const std::string& csv);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
};

/// Self-contained SVG line chart with axes, ticks and a legend. Non-finite points are skipped.
std::string svg_chart(const LineChart& chart);

}  // namespace pinchlab
