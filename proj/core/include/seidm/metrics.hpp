#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "seidm/dynamics.hpp"

namespace seidm {
namespace metrics {

/// Quiescence band that must hold for every vehicle over a whole window.
struct StabilizationCriterion {
  double accel_tol = 0.005;   // [m/s^2]
  double speed_tol = 0.05;    // [m/s], about the lane mean speed
  double hold_window = 30.0;  // [s]

  /// Band used to time the end of an emergency-braking manoeuvre. The
  /// follower settles underdamped under a 1 s reaction delay, and the
  /// default 0.005 m/s^2 band would count a sub-threshold tail lobe.
  static StabilizationCriterion braking() { return {0.02, 0.05, 30.0}; }

  void validate() const;
};

struct Stabilization {
  double period = 0.0;       // start of the first quiet window [s]
  double spacing = 0.0;      // mean bumper gap over the window, lane-averaged
  double mean_speed = 0.0;   // mean speed over the window, lane-averaged
  double window_end = 0.0;   // period + hold_window (on the tick grid)
  std::size_t begin_index = 0;
  std::size_t end_index = 0;
};

bool is_quiet(const dynamics::Trajectory& traj, std::size_t tick,
              const StabilizationCriterion& crit);

/// Earliest t >= not_before such that every tick in [t, t + hold_window] is
/// quiet. nullopt if the trajectory ends first.
std::optional<Stabilization> detect_stabilization(
    const dynamics::Trajectory& traj, const StabilizationCriterion& crit,
    double not_before = 0.0);

/// Incremental form of detect_stabilization for use as a stop condition;
/// each call consumes the ticks appended since the previous call.
class StabilizationTracker {
 public:
  explicit StabilizationTracker(StabilizationCriterion crit,
                                double not_before = 0.0)
      : crit_(crit), not_before_(not_before) {}

  bool update(const dynamics::Trajectory& traj);

 private:
  StabilizationCriterion crit_;
  double not_before_;
  std::size_t next_tick_ = 0;
  std::optional<std::size_t> run_start_;
  bool done_ = false;
};

/// Vehicles per hour for a bumper spacing [m] and speed [m/s].
double throughput(double spacing, double speed);

struct BrakingMetrics {
  std::optional<double> duration;  // onset -> re-stabilized [s]
  double peak_decel = 0.0;         // min follower acceleration [m/s^2]
  double iso_window = 0.0;         // max 2 s mean deceleration magnitude
};

/// Needs per-tick frames. `onset` is the leader's brake onset (nullopt when
/// the leader never brakes, giving duration 0).
BrakingMetrics braking_metrics(const dynamics::Trajectory& traj,
                               std::optional<double> onset,
                               const StabilizationCriterion& crit,
                               double window = 2.0);

bool iso_window_pass(double iso_window, double threshold = 3.5);

struct FollowerSpacing {
  std::uint32_t lane = 0;
  std::uint32_t id = 0;
  double initial = 0.0;
  double final = 0.0;
  double reduction = 0.0;
};

/// Per follower, rear to front: gap in the first frame, gap in the frame
/// nearest `at_time`, and their difference. A follower involved in a
/// collision reports final = 0.
std::vector<FollowerSpacing> final_spacing_and_reduction(
    const dynamics::Trajectory& traj, double at_time);

/// Time after `insertion_time` at which the rearmost vehicle of `lane`
/// first shows |a| > threshold.
std::optional<double> response_time(const dynamics::Trajectory& traj,
                                     double insertion_time, double threshold,
                                     std::size_t lane = 0);

/// Rear-half mean speed averaged over time and lanes.
double mean_rear_half_speed(const dynamics::Trajectory& traj);

struct MetricsReport {
  std::optional<double> stabilization_spacing;
  std::optional<double> stabilization_period;
  std::optional<double> stabilization_speed;  // mean speed over the window
  std::optional<double> throughput;           // 3600 * speed / spacing
  std::optional<double> braking_duration;
  std::optional<double> peak_decel;
  std::optional<double> iso_window;
  std::vector<double> final_spacing;      // per follower, rear to front
  std::vector<double> spacing_reduction;  // per follower, rear to front
  std::optional<double> response_time;
  std::optional<double> rear_half_speed;

  std::optional<double> mean_final_spacing() const;
  std::optional<double> mean_spacing_reduction() const;
};

/// Field-wise mean over the reports that define each field.
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

}  // namespace metrics
}  // namespace seidm
