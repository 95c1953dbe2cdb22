#include "seidm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace seidm {
namespace report {

std::string format_number(double value) {
  if (!std::isfinite(value)) return {};
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string format_number(std::optional<double> value) {
  return value ? format_number(*value) : std::string();
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << '\n';
}

void write_summary_header(CsvWriter& csv) { csv.row(summary_columns()); }

void write_summary_row(CsvWriter& csv, const SummaryRow& row) {
  const auto& m = row.metrics;
  csv.row({row.model, format_number(row.r), row.scenario, row.trial,
           format_number(m.stabilization_spacing),
           format_number(m.stabilization_period), format_number(m.throughput),
           format_number(m.braking_duration), format_number(m.peak_decel),
           format_number(m.iso_window), format_number(m.mean_final_spacing()),
           format_number(m.mean_spacing_reduction()),
           format_number(m.response_time), row.status});
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  CsvWriter csv(out);
  write_summary_header(csv);
  for (const auto& r : rows) write_summary_row(csv, r);
}

void write_trajectory(std::ostream& out, const dynamics::Trajectory& traj) {
  CsvWriter csv(out);
  csv.row(trajectory_columns());
  for (const auto& frame : traj.frames()) {
    const std::string t = format_number(frame.t);
    for (const auto& s : frame.vehicles) {
      csv.row({t, std::to_string(s.lane), std::to_string(s.id),
               format_number(s.x), format_number(s.v), format_number(s.a),
               format_number(s.gap), format_number(s.risk)});
    }
  }
}

namespace {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

double nice_step(double span, int target_ticks) {
  const double raw = span / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double nice = 10.0;
  if (norm <= 1.0) nice = 1.0;
  else if (norm <= 2.0) nice = 2.0;
  else if (norm <= 5.0) nice = 5.0;
  return nice * mag;
}

Range padded(double lo, double hi) {
  if (!(lo < hi)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double step = nice_step(hi - lo, 5);
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step};
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};

}  // namespace

void write_line_chart(std::ostream& out, const ChartSpec& spec,
                      const std::vector<Series>& series) {
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo)) xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
  const Range xr = padded(xlo, xhi);
  const Range yr = padded(ylo, yhi);

  const double left = 70.0, right = 170.0, top = 40.0, bottom = 55.0;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  const auto px = [&](double x) {
    return left + (x - xr.lo) / (xr.hi - xr.lo) * pw;
  };
  const auto py = [&](double y) {
    return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph;
  };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(spec.width)
      << "\" height=\"" << num(spec.height) << "\" viewBox=\"0 0 "
      << num(spec.width) << ' ' << num(spec.height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\""
      << " font-size=\"15\">" << escape_xml(spec.title) << "</text>\n";

  // Grid and ticks.
  const double xstep = nice_step(xr.hi - xr.lo, 5);
  const double ystep = nice_step(yr.hi - yr.lo, 5);
  for (double x = xr.lo; x <= xr.hi + xstep * 1e-6; x += xstep) {
    out << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(top) << "\" x2=\""
        << num(px(x)) << "\" y2=\"" << num(top + ph)
        << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 16)
        << "\" text-anchor=\"middle\">" << format_number(x) << "</text>\n";
  }
  for (double y = yr.lo; y <= yr.hi + ystep * 1e-6; y += ystep) {
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(y)) << "\" x2=\""
        << num(left + pw) << "\" y2=\"" << num(py(y))
        << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4)
        << "\" text-anchor=\"end\">" << format_number(y) << "</text>\n";
  }
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\""
      << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << num(left + pw / 2) << "\" y=\""
      << num(spec.height - 14) << "\" text-anchor=\"middle\">"
      << escape_xml(spec.x_label) << "</text>\n"
      << "<text transform=\"translate(18," << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(spec.y_label)
      << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    const auto flush = [&] {
      if (points.empty()) return;
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.8\" points=\"" << points << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += num(px(s.x[i])) + ',' + num(py(s.y[i]));
    }
    flush();
    const double ly = top + 12 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly)
        << "\" x2=\"" << num(left + pw + 32) << "\" y2=\"" << num(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4)
        << "\">" << escape_xml(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace report
}  // namespace seidm
