#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seidm/dynamics.hpp"
#include "seidm/metrics.hpp"

namespace seidm {
namespace report {

/// "%.6g" in the C locale; non-finite values and nullopt give an empty field.
std::string format_number(double value);
std::string format_number(std::optional<double> value);

/// Minimal CSV writer: comma separated, '\n' line endings, fields quoted
/// only when they contain a comma, quote or newline.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {
      "model",           "r",
      "scenario",        "trial",
      "spacing_m",       "period_s",
      "throughput_vph",  "braking_duration_s",
      "peak_decel_mps2", "iso_window_mps2",
      "final_spacing_m", "spacing_reduction_m",
      "response_time_s", "status"};
  return cols;
}

inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols = {
      "t",     "lane",  "vehicle_id", "x_m",
      "v_mps", "a_mps2", "gap_m",     "risk_factor"};
  return cols;
}

struct SummaryRow {
  std::string model;
  std::optional<double> r;  // blank unless the model uses the risk exponent
  std::string scenario;
  std::string trial;        // index, or "mean"
  metrics::MetricsReport metrics;
  std::string status;
};

void write_summary_header(CsvWriter& csv);
void write_summary_row(CsvWriter& csv, const SummaryRow& row);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

/// One line per recorded frame and vehicle.
void write_trajectory(std::ostream& out, const dynamics::Trajectory& traj);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 720.0;
  double height = 440.0;
};

/// Standalone SVG line chart with axes, ticks and a legend. Non-finite
/// points break a series into separate polylines.
void write_line_chart(std::ostream& out, const ChartSpec& spec,
                      const std::vector<Series>& series);

}  // namespace report
}  // namespace seidm
