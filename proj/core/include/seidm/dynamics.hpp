#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "seidm/models.hpp"

namespace seidm {
namespace dynamics {

inline constexpr double kDefaultVehicleLength = 4.5;
// The platoon head without a lead profile follows a far dummy.
inline constexpr double kOpenRoadGap = 1e6;

struct VehicleState {
  double position = 0.0;  // front bumper [m]
  double speed = 0.0;     // [m/s], never negative
  double accel = 0.0;     // realized over the last step [m/s^2]
  double length = kDefaultVehicleLength;
};

/// What a follower saw of its leader at one tick.
struct LeaderObservation {
  double gap = 0.0;
  double leader_speed = 0.0;
};

/// Fixed-depth ring of past leader observations. After `depth` pushes the
/// oldest entry is exactly `depth` ticks old; before that it is the oldest
/// one available.
class DelayBuffer {
 public:
  explicit DelayBuffer(std::size_t depth = 0);

  /// round(reaction_time / dt), never negative.
  static std::size_t depth_for(double reaction_time, double dt);

  void push(const LeaderObservation& obs);
  /// Precondition: at least one push.
  const LeaderObservation& delayed() const { return ring_[head_]; }

  std::size_t depth() const { return ring_.size() - 1; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

 private:
  std::vector<LeaderObservation> ring_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// Piecewise speed schedule for a platoon head.
class LeadProfile {
 public:
  struct Hold {
    double speed = 0.0;     // [m/s]
    double duration = 0.0;  // [s]
  };
  struct Ramp {
    double rate = 0.0;    // magnitude [m/s^2]; direction follows the target
    double target = 0.0;  // [m/s]
  };
  using Segment = std::variant<Hold, Ramp>;

  /// `initial_speed` is used until the first Hold sets a speed, so a profile
  /// may begin with a Ramp. Throws InvalidParameterError on negative speeds,
  /// durations, or a zero ramp rate.
  LeadProfile(double initial_speed, std::vector<Segment> segments);

  /// Hold `cruise` for `hold`, ramp down at `decel` to `target`, then hold.
  static LeadProfile emergency_brake(double cruise, double hold = 5.0,
                                     double decel = 6.0,
                                     double target = 9.9);

  double speed_at(double t) const;
  /// Start time of the first speed-reducing ramp, if any.
  std::optional<double> brake_onset() const;
  /// Time after which the speed stays constant.
  double settle_time() const;

  const std::vector<Segment>& segments() const { return segments_; }
  double initial_speed() const { return initial_speed_; }

 private:
  struct Piece {
    double t0, t1, v0, v1;
  };
  double initial_speed_;
  std::vector<Segment> segments_;
  std::vector<Piece> pieces_;
};

struct Vehicle {
  std::uint32_t id = 0;
  models::ModelKind model = models::ModelKind::kIdm;
  VehicleState state;
  DelayBuffer buffer;
  // Risk factor of the last evaluation; NaN for laws that have none.
  double risk = std::numeric_limits<double>::quiet_NaN();
};

/// Vehicles ordered rear to front: index 0 is the rearmost, the last entry
/// is the platoon head.
struct LaneState {
  std::vector<Vehicle> vehicles;
  std::optional<LeadProfile> lead_profile;

  /// Bumper-to-bumper gap between vehicle i and vehicle i + 1.
  double gap(std::size_t i) const {
    const VehicleState& leader = vehicles[i + 1].state;
    return leader.position - leader.length - vehicles[i].state.position;
  }
};

struct StepConfig {
  double dt = 0.1;
  double t_max = 300.0;
  double reaction_time = 1.0;                       // T' [s]
  double speed_cap = kmh_to_mps(95.0);              // v_max [m/s]
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct Collision {
  double time = 0.0;
  std::size_t lane = 0;
  std::uint32_t follower_id = 0;
  std::uint32_t leader_id = 0;
};

/// Builds a lane from rear-to-front kinematic states; every vehicle gets the
/// same law and a delay buffer sized for `cfg`.
LaneState make_lane(std::span<const VehicleState> states,
                    models::ModelKind model, const StepConfig& cfg,
                    std::uint32_t first_id = 0);

/// Advances one lane from t to t + dt. Each follower evaluates its law on the
/// T'-delayed leader observation and its own current speed, then integrates
/// v' = clamp(v + a dt, 0, v_max), x' = x + v' dt. Returns the first pair
/// whose gap is <= 0 afterwards, if any.
std::optional<Collision> step_lane(LaneState& lane,
                                   const models::ParamSet& params,
                                   const StepConfig& cfg, double t,
                                   std::size_t lane_index = 0);

/// A vehicle appears at the midpoint of the gap between vehicles `slot` and
/// `slot + 1` of `lane`.
struct InsertionEvent {
  double time = 0.0;
  std::size_t lane = 0;
  std::size_t slot = 0;
  double speed = 0.0;
};

/// Several independent lanes sharing a clock.
class Simulation {
 public:
  Simulation(std::vector<LaneState> lanes, models::ParamSet params,
             StepConfig cfg);

  void schedule(InsertionEvent event);

  /// Applies due insertions, then steps every lane. Throws
  /// InsertionInfeasibleError if a scheduled slot cannot host a vehicle.
  std::optional<Collision> step();

  double time() const { return static_cast<double>(steps_) * cfg_.dt; }
  std::size_t steps() const { return steps_; }
  const std::vector<LaneState>& lanes() const { return lanes_; }
  const StepConfig& config() const { return cfg_; }
  const models::ParamSet& params() const { return params_; }

 private:
  void insert(const InsertionEvent& event);

  std::vector<LaneState> lanes_;
  models::ParamSet params_;
  StepConfig cfg_;
  std::vector<InsertionEvent> pending_;
  std::size_t steps_ = 0;
  std::uint32_t next_id_ = 0;
};

struct VehicleSample {
  std::uint32_t lane = 0;
  std::uint32_t id = 0;
  double x = 0.0;
  double v = 0.0;
  double a = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();   // NaN for the head
  double risk = std::numeric_limits<double>::quiet_NaN();  // NaN unless SEIDM
};

struct Frame {
  double t = 0.0;
  std::vector<VehicleSample> vehicles;  // lane-major, rear to front
};

/// Per-lane aggregates kept for every tick; enough to evaluate any
/// stabilization criterion after the fact.
struct LaneSummary {
  double max_abs_accel = 0.0;
  double max_speed_dev = 0.0;  // max |v - lane mean speed|
  double mean_gap = std::numeric_limits<double>::quiet_NaN();
  double mean_speed = 0.0;
  double rear_half_mean_speed = 0.0;
  double rear_accel = 0.0;
  double min_speed = 0.0;
  double max_speed = 0.0;
  std::uint32_t rear_id = 0;
};

enum class RunStatus { kConditionMet, kTimeout, kCollision };

class Trajectory {
 public:
  Trajectory(double dt, std::size_t lanes) : dt_(dt), lanes_(lanes) {}

  void record(const Simulation& sim, bool with_frame);

  double dt() const { return dt_; }
  std::size_t lane_count() const { return lanes_; }
  /// Number of ticks recorded including the initial state.
  std::size_t size() const { return times_.size(); }
  /// Steps taken (size() - 1).
  std::size_t step_count() const { return times_.empty() ? 0 : size() - 1; }
  double time(std::size_t k) const { return times_[k]; }
  const std::vector<double>& times() const { return times_; }
  const LaneSummary& summary(std::size_t k, std::size_t lane) const {
    return summaries_[k * lanes_ + lane];
  }
  const std::vector<Frame>& frames() const { return frames_; }

  RunStatus status = RunStatus::kTimeout;
  std::optional<Collision> collision;

 private:
  double dt_;
  std::size_t lanes_;
  std::vector<double> times_;
  std::vector<LaneSummary> summaries_;
  std::vector<Frame> frames_;
};

using StopCondition = std::function<bool(const Trajectory&)>;

/// True once the simulated time reaches `t` (within half a tick).
StopCondition stop_at_time(double t);

struct RunOptions {
  // Full per-vehicle frames every N ticks (0 = summaries only). The initial
  // state is always framed when N > 0.
  std::size_t frame_stride = 0;
};

/// Steps `sim` until `until` holds (checked after every tick), t_max is
/// reached, or a collision occurs.
Trajectory run(Simulation& sim, const StopCondition& until,
               const RunOptions& options = {});

}  // namespace dynamics
}  // namespace seidm
