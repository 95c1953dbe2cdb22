#include "seidm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "seidm/errors.hpp"

namespace seidm {
namespace metrics {

using dynamics::Trajectory;

namespace {

// Ticks are compared on a grid of dt; absorb rounding in the window length.
constexpr double kTimeSlack = 1e-9;

Stabilization window_stats(const Trajectory& traj, std::size_t begin,
                           std::size_t end) {
  Stabilization s;
  s.period = traj.time(begin);
  s.window_end = traj.time(end);
  s.begin_index = begin;
  s.end_index = end;
  double gap_total = 0.0;
  double speed_total = 0.0;
  std::size_t gap_count = 0;
  std::size_t speed_count = 0;
  for (std::size_t k = begin; k <= end; ++k) {
    for (std::size_t l = 0; l < traj.lane_count(); ++l) {
      const auto& sum = traj.summary(k, l);
      if (std::isfinite(sum.mean_gap)) {
        gap_total += sum.mean_gap;
        ++gap_count;
      }
      speed_total += sum.mean_speed;
      ++speed_count;
    }
  }
  s.spacing = gap_count ? gap_total / static_cast<double>(gap_count)
                        : std::numeric_limits<double>::quiet_NaN();
  s.mean_speed = speed_total / static_cast<double>(speed_count);
  return s;
}

}  // namespace

void StabilizationCriterion::validate() const {
  if (!(accel_tol > 0.0 && speed_tol > 0.0 && hold_window > 0.0)) {
    throw InvalidParameterError(
        "parameter invariant violated: stabilization tolerances and hold "
        "window must be positive");
  }
}

bool is_quiet(const Trajectory& traj, std::size_t tick,
              const StabilizationCriterion& crit) {
  for (std::size_t l = 0; l < traj.lane_count(); ++l) {
    const auto& sum = traj.summary(tick, l);
    if (!(sum.max_abs_accel < crit.accel_tol) ||
        !(sum.max_speed_dev < crit.speed_tol)) {
      return false;
    }
  }
  return true;
}

std::optional<Stabilization> detect_stabilization(
    const Trajectory& traj, const StabilizationCriterion& crit,
    double not_before) {
  std::optional<std::size_t> run_start;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.time(k) < not_before - kTimeSlack) continue;
    if (!is_quiet(traj, k, crit)) {
      run_start.reset();
      continue;
    }
    if (!run_start) run_start = k;
    if (traj.time(k) - traj.time(*run_start) >=
        crit.hold_window - kTimeSlack) {
      return window_stats(traj, *run_start, k);
    }
  }
  return std::nullopt;
}

bool StabilizationTracker::update(const Trajectory& traj) {
  for (; !done_ && next_tick_ < traj.size(); ++next_tick_) {
    const std::size_t k = next_tick_;
    if (traj.time(k) < not_before_ - kTimeSlack) continue;
    if (!is_quiet(traj, k, crit_)) {
      run_start_.reset();
      continue;
    }
    if (!run_start_) run_start_ = k;
    if (traj.time(k) - traj.time(*run_start_) >=
        crit_.hold_window - kTimeSlack) {
      done_ = true;
    }
  }
  return done_;
}

double throughput(double spacing, double speed) {
  return 3600.0 * speed / spacing;
}

BrakingMetrics braking_metrics(const Trajectory& traj,
                               std::optional<double> onset,
                               const StabilizationCriterion& crit,
                               double window) {
  const auto& frames = traj.frames();
  if (frames.empty()) {
    throw std::invalid_argument("braking_metrics needs per-tick frames");
  }
  BrakingMetrics out;

  // Followers are every vehicle with a leader (finite gap).
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>>
      decel_by_vehicle;
  for (const auto& frame : frames) {
    for (const auto& s : frame.vehicles) {
      if (!std::isfinite(s.gap)) continue;
      out.peak_decel = std::min(out.peak_decel, s.a);
      decel_by_vehicle[{s.lane, s.id}].push_back(std::max(0.0, -s.a));
    }
  }

  const double frame_dt =
      frames.size() > 1 ? frames[1].t - frames[0].t : traj.dt();
  const std::size_t width = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(window / frame_dt)));
  for (const auto& [key, series] : decel_by_vehicle) {
    const std::size_t w = std::min(width, series.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      acc += series[i];
      if (i >= w) acc -= series[i - w];
      if (i + 1 >= w) {
        out.iso_window = std::max(out.iso_window, acc / static_cast<double>(w));
      }
    }
  }

  if (!onset) {
    out.duration = 0.0;
  } else if (auto stab = detect_stabilization(traj, crit, *onset)) {
    out.duration = stab->period - *onset;
  }
  return out;
}

bool iso_window_pass(double iso_window, double threshold) {
  return iso_window <= threshold;
}

std::vector<FollowerSpacing> final_spacing_and_reduction(
    const Trajectory& traj, double at_time) {
  const auto& frames = traj.frames();
  if (frames.empty()) {
    throw std::invalid_argument(
        "final_spacing_and_reduction needs recorded frames");
  }
  const auto nearest = std::min_element(
      frames.begin(), frames.end(), [at_time](const auto& a, const auto& b) {
        return std::abs(a.t - at_time) < std::abs(b.t - at_time);
      });

  std::map<std::pair<std::uint32_t, std::uint32_t>, double> final_gap;
  for (const auto& s : nearest->vehicles) {
    if (std::isfinite(s.gap)) final_gap[{s.lane, s.id}] = s.gap;
  }

  std::vector<FollowerSpacing> out;
  for (const auto& s : frames.front().vehicles) {
    if (!std::isfinite(s.gap)) continue;
    FollowerSpacing f;
    f.lane = s.lane;
    f.id = s.id;
    f.initial = s.gap;
    const auto it = final_gap.find({s.lane, s.id});
    f.final = it != final_gap.end() ? it->second : 0.0;
    if (traj.collision && traj.collision->follower_id == s.id &&
        traj.collision->lane == s.lane) {
      f.final = 0.0;
    }
    f.reduction = f.initial - f.final;
    out.push_back(f);
  }
  return out;
}

std::optional<double> response_time(const Trajectory& traj,
                                     double insertion_time, double threshold,
                                     std::size_t lane) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.time(k);
    if (t <= insertion_time + kTimeSlack) continue;
    if (std::abs(traj.summary(k, lane).rear_accel) > threshold) {
      return t - insertion_time;
    }
  }
  return std::nullopt;
}

double mean_rear_half_speed(const Trajectory& traj) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    for (std::size_t l = 0; l < traj.lane_count(); ++l) {
      total += traj.summary(k, l).rear_half_mean_speed;
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

template <typename Getter>
std::optional<double> field_mean(const std::vector<MetricsReport>& reports,
                                 Getter get) {
  std::vector<double> values;
  for (const auto& r : reports) {
    if (const std::optional<double> v = get(r)) values.push_back(*v);
  }
  return mean_of(values);
}

std::vector<double> elementwise_mean(const std::vector<MetricsReport>& reports,
                                     std::vector<double> MetricsReport::*field) {
  std::vector<double> total;
  std::size_t count = 0;
  for (const auto& r : reports) {
    const auto& xs = r.*field;
    if (xs.empty()) continue;
    if (total.empty()) total.assign(xs.size(), 0.0);
    if (xs.size() != total.size()) return {};
    for (std::size_t i = 0; i < xs.size(); ++i) total[i] += xs[i];
    ++count;
  }
  for (double& x : total) x /= static_cast<double>(count);
  return total;
}

}  // namespace

std::optional<double> MetricsReport::mean_final_spacing() const {
  return mean_of(final_spacing);
}

std::optional<double> MetricsReport::mean_spacing_reduction() const {
  return mean_of(spacing_reduction);
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  MetricsReport m;
  m.stabilization_spacing = field_mean(
      reports, [](const MetricsReport& r) { return r.stabilization_spacing; });
  m.stabilization_period = field_mean(
      reports, [](const MetricsReport& r) { return r.stabilization_period; });
  m.stabilization_speed = field_mean(
      reports, [](const MetricsReport& r) { return r.stabilization_speed; });
  // Keep the reciprocity identity on the aggregate row.
  if (m.stabilization_spacing && m.stabilization_speed) {
    m.throughput = throughput(*m.stabilization_spacing, *m.stabilization_speed);
  }
  m.braking_duration = field_mean(
      reports, [](const MetricsReport& r) { return r.braking_duration; });
  m.peak_decel =
      field_mean(reports, [](const MetricsReport& r) { return r.peak_decel; });
  m.iso_window =
      field_mean(reports, [](const MetricsReport& r) { return r.iso_window; });
  m.response_time = field_mean(
      reports, [](const MetricsReport& r) { return r.response_time; });
  m.rear_half_speed = field_mean(
      reports, [](const MetricsReport& r) { return r.rear_half_speed; });
  m.final_spacing = elementwise_mean(reports, &MetricsReport::final_spacing);
  m.spacing_reduction =
      elementwise_mean(reports, &MetricsReport::spacing_reduction);
  return m;
}

}  // namespace metrics
}  // namespace seidm
