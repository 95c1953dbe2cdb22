#include "seidm/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "seidm/errors.hpp"

namespace seidm {
namespace scenarios {

using dynamics::LaneState;
using dynamics::Simulation;
using dynamics::Trajectory;
using dynamics::VehicleState;
using models::ModelKind;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

LaneState uniform_platoon(const ScenarioConfig& cfg, double gap,
                          std::uint32_t first_id) {
  std::vector<VehicleState> states(cfg.vehicles_per_lane);
  for (std::size_t i = 0; i < states.size(); ++i) {
    states[i].position =
        static_cast<double>(i) * (gap + cfg.vehicle_length) +
        cfg.vehicle_length;
    states[i].speed = cfg.step.speed_cap;
    states[i].length = cfg.vehicle_length;
  }
  return dynamics::make_lane(states, cfg.model, cfg.step, first_id);
}

LaneState braking_platoon(const ScenarioConfig& cfg) {
  LaneState lane = uniform_platoon(cfg, platoon_gap(cfg), 0);
  lane.lead_profile = cfg.resolved_lead_profile();
  return lane;
}

TrialStatus status_of(const Trajectory& traj) {
  switch (traj.status) {
    case dynamics::RunStatus::kConditionMet:
      return TrialStatus::kStabilized;
    case dynamics::RunStatus::kCollision:
      return TrialStatus::kCollision;
    case dynamics::RunStatus::kTimeout:
      return TrialStatus::kTimeout;
  }
  return TrialStatus::kFailed;
}

dynamics::StopCondition stop_when_stable(
    const metrics::StabilizationCriterion& crit, double not_before) {
  return [tracker = metrics::StabilizationTracker(crit, not_before)](
             const Trajectory& traj) mutable { return tracker.update(traj); };
}

void fill_stabilization(metrics::MetricsReport& report,
                        const std::optional<metrics::Stabilization>& stab) {
  if (!stab) return;
  report.stabilization_period = stab->period;
  report.stabilization_spacing = stab->spacing;
  report.stabilization_speed = stab->mean_speed;
  report.throughput = metrics::throughput(stab->spacing, stab->mean_speed);
}

void run_flow_trial(const ScenarioConfig& cfg, std::size_t trial,
                    TrialResult& out) {
  const bool keep = trial < cfg.trajectory_trials;
  std::vector<LaneState> lanes;
  std::vector<dynamics::InsertionEvent> insertions;
  double not_before = 0.0;
  if (cfg.kind == ScenarioKind::kI) {
    lanes = build_scenario_I(cfg, trial);
  } else {
    InsertionSetup setup = build_scenario_IV(cfg, trial);
    lanes = std::move(setup.lanes);
    insertions = std::move(setup.insertions);
    not_before = cfg.insert_time;
  }
  Simulation sim(std::move(lanes), cfg.params, cfg.step);
  for (const auto& e : insertions) sim.schedule(e);

  dynamics::RunOptions options;
  options.frame_stride = keep ? std::max<std::size_t>(1, cfg.frame_stride) : 0;
  Trajectory traj = dynamics::run(
      sim, stop_when_stable(cfg.stabilization, not_before), options);

  out.status = status_of(traj);
  out.collision = traj.collision;
  fill_stabilization(out.metrics, metrics::detect_stabilization(
                                      traj, cfg.stabilization, not_before));
  out.metrics.rear_half_speed = metrics::mean_rear_half_speed(traj);

  if (cfg.kind == ScenarioKind::kIV) {
    std::vector<double> responses;
    for (std::size_t l = 0; l < traj.lane_count(); ++l) {
      if (auto r = metrics::response_time(traj, cfg.insert_time,
                                          cfg.response_threshold, l)) {
        responses.push_back(*r);
      }
    }
    if (!responses.empty()) {
      double total = 0.0;
      for (double r : responses) total += r;
      out.metrics.response_time = total / static_cast<double>(responses.size());
    }
    if (responses.size() < traj.lane_count()) {
      out.note = "no rear response in " +
                 std::to_string(traj.lane_count() - responses.size()) +
                 " lane(s)";
    }
  }
  if (keep) out.trajectory = std::move(traj);
}

void run_braking_trial(const ScenarioConfig& cfg, std::size_t trial,
                       TrialResult& out) {
  LaneState lane = cfg.kind == ScenarioKind::kII ? build_scenario_II(cfg)
                                                 : build_scenario_III(cfg);
  const std::optional<double> onset = lane.lead_profile->brake_onset();
  Simulation sim({std::move(lane)}, cfg.params, cfg.step);

  dynamics::RunOptions options;
  options.frame_stride = 1;
  Trajectory traj = dynamics::run(
      sim, stop_when_stable(cfg.braking, onset.value_or(0.0)), options);

  out.status = status_of(traj);
  out.collision = traj.collision;
  const metrics::BrakingMetrics braking =
      metrics::braking_metrics(traj, onset, cfg.braking);
  out.metrics.braking_duration = braking.duration;
  out.metrics.peak_decel = braking.peak_decel;
  out.metrics.iso_window = braking.iso_window;

  std::optional<double> final_time;
  if (traj.collision) {
    final_time = traj.time(traj.size() - 1);
  } else if (auto stab = metrics::detect_stabilization(traj, cfg.braking,
                                                       onset.value_or(0.0))) {
    final_time = stab->window_end;
  }
  if (final_time) {
    out.followers = metrics::final_spacing_and_reduction(traj, *final_time);
    for (const auto& f : out.followers) {
      out.metrics.final_spacing.push_back(f.final);
      out.metrics.spacing_reduction.push_back(f.initial - f.final);
    }
  }
  if (trial < cfg.trajectory_trials) out.trajectory = std::move(traj);
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kI:
      return "I";
    case ScenarioKind::kII:
      return "II";
    case ScenarioKind::kIII:
      return "III";
    case ScenarioKind::kIV:
      return "IV";
  }
  return "?";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
  for (ScenarioKind k : {ScenarioKind::kI, ScenarioKind::kII,
                         ScenarioKind::kIII, ScenarioKind::kIV}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::kStabilized:
      return "stabilized";
    case TrialStatus::kTimeout:
      return "timeout";
    case TrialStatus::kCollision:
      return "collision";
    case TrialStatus::kFailed:
      return "failed";
  }
  return "failed";
}

ScenarioConfig ScenarioConfig::defaults(ScenarioKind kind) {
  ScenarioConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ScenarioKind::kI:
    case ScenarioKind::kIV:
      cfg.vehicles_per_lane = 40;
      cfg.lanes = 2;
      cfg.step.t_max = 5000.0;
      cfg.trials = 20;
      break;
    case ScenarioKind::kII:
      cfg.vehicles_per_lane = 2;
      cfg.lanes = 1;
      cfg.step.t_max = 300.0;
      cfg.trials = 1;
      break;
    case ScenarioKind::kIII:
      cfg.vehicles_per_lane = 10;
      cfg.lanes = 1;
      cfg.step.t_max = 300.0;
      cfg.trials = 1;
      break;
  }
  return cfg;
}

dynamics::LeadProfile ScenarioConfig::resolved_lead_profile() const {
  if (lead_profile) return *lead_profile;
  return dynamics::LeadProfile::emergency_brake(
      step.speed_cap, brake_hold, brake_decel, brake_target);
}

void ScenarioConfig::validate() const {
  params.validate();
  step.validate();
  stabilization.validate();
  braking.validate();
  const auto fail = [](const std::string& what) {
    throw InvalidParameterError("scenario invariant violated: " + what);
  };
  if (vehicles_per_lane < 2) fail("at least 2 vehicles per lane");
  if (lanes < 1) fail("at least 1 lane");
  if (trials < 1) fail("trials >= 1");
  if (!(vehicle_length > 0.0)) fail("vehicle length > 0");
  if (kind == ScenarioKind::kII && (vehicles_per_lane != 2 || lanes != 1)) {
    fail("scenario II has exactly 2 vehicles in 1 lane");
  }
  if (kind == ScenarioKind::kIII && lanes != 1) {
    fail("scenario III has exactly 1 lane");
  }
  if (!(response_threshold > 0.0)) fail("response threshold > 0");
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t trial,
                          std::size_t lane) {
  return splitmix64(splitmix64(splitmix64(base) ^ trial) ^ lane);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

LaneState lane_from_speeds(std::span<const double> speeds,
                           const models::ModelParams& gap_params,
                           ModelKind model, const dynamics::StepConfig& step,
                           double vehicle_length, std::uint32_t first_id) {
  std::vector<VehicleState> states(speeds.size());
  double front = vehicle_length;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    if (i > 0) {
      front += models::desired_gap(speeds[i - 1], 0.0, gap_params) +
               vehicle_length;
    }
    states[i].position = front;
    states[i].speed = speeds[i];
    states[i].length = vehicle_length;
  }
  return dynamics::make_lane(states, model, step, first_id);
}

std::vector<LaneState> build_scenario_I(const ScenarioConfig& cfg,
                                        std::size_t trial) {
  const double v_max = cfg.step.speed_cap;
  std::vector<LaneState> lanes;
  std::uint32_t next_id = 0;
  for (std::size_t l = 0; l < cfg.lanes; ++l) {
    std::mt19937_64 rng(derive_seed(cfg.seed, trial, l));
    std::vector<double> speeds(cfg.vehicles_per_lane);
    for (double& v : speeds) v = v_max * (0.8 + 0.2 * uniform01(rng));
    // Same geometry for every law under test: IDM desired gaps.
    lanes.push_back(lane_from_speeds(speeds, cfg.params.idm, cfg.model,
                                     cfg.step, cfg.vehicle_length, next_id));
    next_id += static_cast<std::uint32_t>(cfg.vehicles_per_lane);
  }
  return lanes;
}

double platoon_gap(const ScenarioConfig& cfg) {
  const double v_max = cfg.step.speed_cap;
  switch (cfg.model) {
    case ModelKind::kIdm:
    case ModelKind::kClampedIdm:
      return models::equilibrium_gap(ModelKind::kIdm, v_max, cfg.params);
    case ModelKind::kSeidm:
    case ModelKind::kDerbelIdm:
      return models::equilibrium_gap(cfg.model, v_max, cfg.params);
    case ModelKind::kKrauss: {
      ScenarioConfig probe = ScenarioConfig::defaults(ScenarioKind::kI);
      probe.model = cfg.model;
      probe.params = cfg.params;
      probe.step.dt = cfg.step.dt;
      probe.step.reaction_time = cfg.step.reaction_time;
      probe.step.speed_cap = cfg.step.speed_cap;
      probe.vehicle_length = cfg.vehicle_length;
      probe.stabilization = cfg.stabilization;
      probe.seed = cfg.seed;
      probe.trials = 1;
      const TrialResult r = run_trial(probe, 0);
      if (!r.metrics.stabilization_spacing) {
        throw NoRootError("Krauss scenario I run did not stabilize");
      }
      return *r.metrics.stabilization_spacing;
    }
  }
  throw NoRootError("unsupported model");
}

LaneState build_scenario_II(const ScenarioConfig& cfg) {
  return braking_platoon(cfg);
}

LaneState build_scenario_III(const ScenarioConfig& cfg) {
  return braking_platoon(cfg);
}

InsertionSetup build_scenario_IV(const ScenarioConfig& cfg,
                                 std::size_t trial) {
  const double gap = platoon_gap(cfg);
  InsertionSetup setup;
  std::uint32_t next_id = 0;
  for (std::size_t l = 0; l < cfg.lanes; ++l) {
    LaneState lane = uniform_platoon(cfg, gap, next_id);
    next_id += static_cast<std::uint32_t>(cfg.vehicles_per_lane);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i + 1 < lane.vehicles.size(); ++i) {
      if ((lane.gap(i) - cfg.vehicle_length) / 2.0 > cfg.vehicle_length) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) {
      throw InsertionInfeasibleError(
          "no gap is long enough for an insertion");
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, trial, l));
    const auto pick = static_cast<std::size_t>(
        uniform01(rng) * static_cast<double>(candidates.size()));
    setup.insertions.push_back(
        {cfg.insert_time, l, candidates[std::min(pick, candidates.size() - 1)],
         cfg.step.speed_cap});
    setup.lanes.push_back(std::move(lane));
  }
  return setup;
}

TrialResult run_trial(const ScenarioConfig& cfg, std::size_t trial) {
  TrialResult out;
  out.trial = trial;
  try {
    cfg.validate();
    switch (cfg.kind) {
      case ScenarioKind::kI:
      case ScenarioKind::kIV:
        run_flow_trial(cfg, trial, out);
        break;
      case ScenarioKind::kII:
      case ScenarioKind::kIII:
        run_braking_trial(cfg, trial, out);
        break;
    }
  } catch (const std::exception& e) {
    out.status = TrialStatus::kFailed;
    out.note = e.what();
  }
  return out;
}

std::vector<TrialResult> run_trials(const ScenarioConfig& cfg) {
  std::vector<TrialResult> results(cfg.trials);
  std::size_t workers = cfg.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.trials);

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k = next++; k < cfg.trials; k = next++) {
      results[k] = run_trial(cfg, k);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return results;
}

metrics::MetricsReport mean_metrics(const std::vector<TrialResult>& results) {
  std::vector<metrics::MetricsReport> reports;
  reports.reserve(results.size());
  for (const auto& r : results) reports.push_back(r.metrics);
  return metrics::mean_report(reports);
}

}  // namespace scenarios
}  // namespace seidm
