#include "seidm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seidm/errors.hpp"

namespace seidm {
namespace dynamics {

using models::ModelKind;
using models::Observation;

DelayBuffer::DelayBuffer(std::size_t depth) : ring_(depth + 1) {}

std::size_t DelayBuffer::depth_for(double reaction_time, double dt) {
  const double ticks = std::round(reaction_time / dt);
  return ticks > 0.0 ? static_cast<std::size_t>(ticks) : 0;
}

void DelayBuffer::push(const LeaderObservation& obs) {
  const std::size_t capacity = ring_.size();
  if (size_ < capacity) {
    ring_[(head_ + size_) % capacity] = obs;
    ++size_;
  } else {
    ring_[head_] = obs;
    head_ = (head_ + 1) % capacity;
  }
}

LeadProfile::LeadProfile(double initial_speed, std::vector<Segment> segments)
    : initial_speed_(initial_speed), segments_(std::move(segments)) {
  if (!(initial_speed_ >= 0.0)) {
    throw InvalidParameterError("lead profile speeds must be >= 0");
  }
  double t = 0.0;
  double v = initial_speed_;
  for (const Segment& seg : segments_) {
    if (const auto* hold = std::get_if<Hold>(&seg)) {
      if (!(hold->speed >= 0.0) || !(hold->duration >= 0.0)) {
        throw InvalidParameterError(
            "lead profile hold needs speed >= 0 and duration >= 0");
      }
      pieces_.push_back({t, t + hold->duration, hold->speed, hold->speed});
      t += hold->duration;
      v = hold->speed;
    } else {
      const Ramp& ramp = std::get<Ramp>(seg);
      if (!(ramp.target >= 0.0) || !(std::abs(ramp.rate) > 0.0)) {
        throw InvalidParameterError(
            "lead profile ramp needs target >= 0 and a nonzero rate");
      }
      const double duration = std::abs(ramp.target - v) / std::abs(ramp.rate);
      pieces_.push_back({t, t + duration, v, ramp.target});
      t += duration;
      v = ramp.target;
    }
  }
}

LeadProfile LeadProfile::emergency_brake(double cruise, double hold,
                                         double decel, double target) {
  return LeadProfile(cruise, {Hold{cruise, hold}, Ramp{decel, target}});
}

double LeadProfile::speed_at(double t) const {
  if (pieces_.empty()) return initial_speed_;
  if (t <= pieces_.front().t0) return pieces_.front().v0;
  for (const Piece& p : pieces_) {
    if (t <= p.t1) {
      if (p.t1 <= p.t0) return p.v1;
      return p.v0 + (p.v1 - p.v0) * (t - p.t0) / (p.t1 - p.t0);
    }
  }
  return pieces_.back().v1;
}

std::optional<double> LeadProfile::brake_onset() const {
  for (const Piece& p : pieces_) {
    if (p.v1 < p.v0) return p.t0;
  }
  return std::nullopt;
}

double LeadProfile::settle_time() const {
  return pieces_.empty() ? 0.0 : pieces_.back().t1;
}

void StepConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidParameterError("parameter invariant violated: dt > 0");
  if (!(t_max > dt)) {
    throw InvalidParameterError("parameter invariant violated: t_max > dt");
  }
  if (!(reaction_time >= 0.0)) {
    throw InvalidParameterError("parameter invariant violated: T' >= 0");
  }
  if (!(speed_cap > 0.0)) {
    throw InvalidParameterError("parameter invariant violated: v_max > 0");
  }
}

LaneState make_lane(std::span<const VehicleState> states, ModelKind model,
                    const StepConfig& cfg, std::uint32_t first_id) {
  LaneState lane;
  lane.vehicles.reserve(states.size());
  const std::size_t depth = DelayBuffer::depth_for(cfg.reaction_time, cfg.dt);
  std::uint32_t id = first_id;
  for (const VehicleState& s : states) {
    Vehicle v;
    v.id = id++;
    v.model = model;
    v.state = s;
    v.buffer = DelayBuffer(depth);
    lane.vehicles.push_back(std::move(v));
  }
  return lane;
}

std::optional<Collision> step_lane(LaneState& lane,
                                   const models::ParamSet& params,
                                   const StepConfig& cfg, double t,
                                   std::size_t lane_index) {
  auto& vehicles = lane.vehicles;
  const std::size_t n = vehicles.size();
  const double dt = cfg.dt;

  // Updating rear to front in place is equivalent to a synchronous update:
  // vehicle i only reads vehicle i + 1, which has not moved yet.
  for (std::size_t i = 0; i < n; ++i) {
    Vehicle& veh = vehicles[i];
    VehicleState& s = veh.state;
    const bool is_head = i + 1 == n;

    double accel = 0.0;
    if (is_head && lane.lead_profile) {
      const double target =
          std::clamp(lane.lead_profile->speed_at(t + dt), 0.0, cfg.speed_cap);
      accel = (target - s.speed) / dt;
    } else {
      const LeaderObservation now =
          is_head ? LeaderObservation{kOpenRoadGap, s.speed}
                  : LeaderObservation{lane.gap(i),
                                      vehicles[i + 1].state.speed};
      veh.buffer.push(now);
      const LeaderObservation& seen = veh.buffer.delayed();
      const Observation o =
          Observation::make(seen.gap, s.speed, seen.leader_speed);
      accel = models::model_acceleration(veh.model, o, params, dt);
      if (veh.model == ModelKind::kSeidm) {
        veh.risk = models::risk_factor(o, params.idm, params.risk);
      }
    }

    const double next_speed =
        std::max(0.0, std::min(s.speed + accel * dt, cfg.speed_cap));
    s.accel = (next_speed - s.speed) / dt;
    s.speed = next_speed;
    s.position += next_speed * dt;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (lane.gap(i) <= 0.0) {
      return Collision{t + dt, lane_index, vehicles[i].id,
                       vehicles[i + 1].id};
    }
  }
  return std::nullopt;
}

Simulation::Simulation(std::vector<LaneState> lanes, models::ParamSet params,
                       StepConfig cfg)
    : lanes_(std::move(lanes)), params_(params), cfg_(cfg) {
  params_.validate();
  cfg_.validate();
  for (const LaneState& lane : lanes_) {
    for (const Vehicle& v : lane.vehicles) {
      next_id_ = std::max(next_id_, v.id + 1);
    }
  }
}

void Simulation::schedule(InsertionEvent event) {
  if (event.lane >= lanes_.size()) {
    throw InvalidParameterError("insertion lane out of range");
  }
  pending_.push_back(event);
  std::stable_sort(pending_.begin(), pending_.end(),
                   [](const InsertionEvent& a, const InsertionEvent& b) {
                     return a.time < b.time;
                   });
}

void Simulation::insert(const InsertionEvent& event) {
  LaneState& lane = lanes_[event.lane];
  if (event.slot + 1 >= lane.vehicles.size()) {
    throw InsertionInfeasibleError("insertion slot " +
                                   std::to_string(event.slot) +
                                   " has no leader");
  }
  const Vehicle& follower = lane.vehicles[event.slot];
  VehicleState state;
  state.length = follower.state.length;
  const double half_gap = (lane.gap(event.slot) - state.length) / 2.0;
  if (half_gap <= state.length) {
    throw InsertionInfeasibleError("gap behind slot " +
                                   std::to_string(event.slot) +
                                   " is too short for an insertion");
  }
  state.position = follower.state.position + half_gap + state.length;
  state.speed = std::min(event.speed, cfg_.speed_cap);

  Vehicle v;
  v.id = next_id_++;
  v.model = follower.model;
  v.state = state;
  v.buffer = DelayBuffer(DelayBuffer::depth_for(cfg_.reaction_time, cfg_.dt));
  lane.vehicles.insert(
      lane.vehicles.begin() + static_cast<std::ptrdiff_t>(event.slot + 1),
      std::move(v));
}

std::optional<Collision> Simulation::step() {
  const double t = time();
  while (!pending_.empty() && pending_.front().time <= t + 0.5 * cfg_.dt) {
    insert(pending_.front());
    pending_.erase(pending_.begin());
  }
  std::optional<Collision> first;
  for (std::size_t l = 0; l < lanes_.size(); ++l) {
    auto hit = step_lane(lanes_[l], params_, cfg_, t, l);
    if (hit && !first) first = hit;
  }
  ++steps_;
  return first;
}

void Trajectory::record(const Simulation& sim, bool with_frame) {
  times_.push_back(sim.time());
  const auto& lanes = sim.lanes();
  Frame frame;
  if (with_frame) frame.t = sim.time();
  for (std::size_t l = 0; l < lanes.size(); ++l) {
    const auto& vehicles = lanes[l].vehicles;
    LaneSummary sum;
    const std::size_t n = vehicles.size();
    if (n > 0) {
      double speed_total = 0.0;
      double rear_total = 0.0;
      const std::size_t rear_half = std::max<std::size_t>(1, n / 2);
      for (std::size_t i = 0; i < n; ++i) {
        speed_total += vehicles[i].state.speed;
        if (i < rear_half) rear_total += vehicles[i].state.speed;
      }
      sum.mean_speed = speed_total / static_cast<double>(n);
      sum.rear_half_mean_speed = rear_total / static_cast<double>(rear_half);
      double gap_total = 0.0;
      sum.min_speed = vehicles.front().state.speed;
      sum.max_speed = sum.min_speed;
      for (std::size_t i = 0; i < n; ++i) {
        const VehicleState& s = vehicles[i].state;
        sum.min_speed = std::min(sum.min_speed, s.speed);
        sum.max_speed = std::max(sum.max_speed, s.speed);
        sum.max_abs_accel = std::max(sum.max_abs_accel, std::abs(s.accel));
        sum.max_speed_dev =
            std::max(sum.max_speed_dev, std::abs(s.speed - sum.mean_speed));
        if (i + 1 < n) gap_total += lanes[l].gap(i);
      }
      if (n > 1) sum.mean_gap = gap_total / static_cast<double>(n - 1);
      sum.rear_accel = vehicles.front().state.accel;
      sum.rear_id = vehicles.front().id;
    }
    summaries_.push_back(sum);

    if (with_frame) {
      for (std::size_t i = 0; i < n; ++i) {
        const Vehicle& v = vehicles[i];
        VehicleSample s;
        s.lane = static_cast<std::uint32_t>(l);
        s.id = v.id;
        s.x = v.state.position;
        s.v = v.state.speed;
        s.a = v.state.accel;
        if (i + 1 < n) s.gap = lanes[l].gap(i);
        if (v.model == ModelKind::kSeidm) s.risk = v.risk;
        frame.vehicles.push_back(s);
      }
    }
  }
  if (with_frame) frames_.push_back(std::move(frame));
}

StopCondition stop_at_time(double t) {
  return [t](const Trajectory& traj) {
    return traj.size() > 0 &&
           traj.time(traj.size() - 1) >= t - 0.5 * traj.dt();
  };
}

Trajectory run(Simulation& sim, const StopCondition& until,
               const RunOptions& options) {
  Trajectory traj(sim.config().dt, sim.lanes().size());
  const std::size_t stride = options.frame_stride;
  traj.record(sim, stride > 0);
  const double t_max = sim.config().t_max;
  while (true) {
    if (sim.time() >= t_max - 0.5 * sim.config().dt) {
      traj.status = RunStatus::kTimeout;
      break;
    }
    const auto hit = sim.step();
    traj.record(sim, stride > 0 && (sim.steps() % stride == 0 || hit));
    if (hit) {
      traj.status = RunStatus::kCollision;
      traj.collision = hit;
      break;
    }
    if (until && until(traj)) {
      traj.status = RunStatus::kConditionMet;
      break;
    }
  }
  return traj;
}

}  // namespace dynamics
}  // namespace seidm
