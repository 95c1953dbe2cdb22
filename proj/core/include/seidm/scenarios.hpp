#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seidm/dynamics.hpp"
#include "seidm/metrics.hpp"
#include "seidm/models.hpp"

namespace seidm {
namespace scenarios {

/// I: chaotic start, II: two-vehicle emergency braking, III: platoon
/// emergency braking, IV: insertion into a stable flow.
enum class ScenarioKind { kI, kII, kIII, kIV };

std::string_view to_string(ScenarioKind kind);
/// Accepts the roman numerals "I".."IV".
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kI;
  std::size_t vehicles_per_lane = 40;
  std::size_t lanes = 2;
  models::ModelKind model = models::ModelKind::kSeidm;
  models::ParamSet params;
  dynamics::StepConfig step;
  double vehicle_length = dynamics::kDefaultVehicleLength;

  // II/III: head speed schedule; unset means LeadProfile::emergency_brake at
  // v_max with the defaults below.
  std::optional<dynamics::LeadProfile> lead_profile;
  double brake_hold = 5.0;     // [s]
  double brake_decel = 6.0;    // [m/s^2]
  double brake_target = 9.9;   // [m/s]

  // IV
  double insert_time = 10.0;  // [s]

  std::uint64_t seed = 1;
  std::size_t trials = 20;
  std::size_t workers = 0;  // 0 = hardware concurrency

  metrics::StabilizationCriterion stabilization;
  metrics::StabilizationCriterion braking =
      metrics::StabilizationCriterion::braking();
  double response_threshold = 1e-4;  // [m/s^2]

  // Trials with index < trajectory_trials keep their trajectory. Scenarios
  // I/IV frame every `frame_stride` ticks; II/III always frame every tick.
  std::size_t trajectory_trials = 0;
  std::size_t frame_stride = 10;

  /// Defaults for a kind: vehicle/lane counts, horizon and trial count.
  static ScenarioConfig defaults(ScenarioKind kind);

  dynamics::LeadProfile resolved_lead_profile() const;
  void validate() const;
};

/// Stateless per-(trial, lane) seed: splitmix64 chained over the base seed,
/// the trial index and the lane index.
std::uint64_t derive_seed(std::uint64_t base, std::size_t trial,
                          std::size_t lane);

/// Uniform double in [0, 1) from the top 53 bits of one draw; identical on
/// every platform for a given engine state.
double uniform01(std::mt19937_64& rng);

/// Rear-to-front lane whose vehicle i drives at speeds[i] with the gap to
/// vehicle i + 1 equal to desired_gap(speeds[i], 0) under `gap_params`.
dynamics::LaneState lane_from_speeds(std::span<const double> speeds,
                                     const models::ModelParams& gap_params,
                                     models::ModelKind model,
                                     const dynamics::StepConfig& step,
                                     double vehicle_length,
                                     std::uint32_t first_id = 0);

std::vector<dynamics::LaneState> build_scenario_I(const ScenarioConfig& cfg,
                                                  std::size_t trial);

/// Initial gap of a platoon at v_max: the analytic equilibrium, or for
/// Krauss (no unique equilibrium) the stabilized Scenario I spacing.
double platoon_gap(const ScenarioConfig& cfg);

dynamics::LaneState build_scenario_II(const ScenarioConfig& cfg);
dynamics::LaneState build_scenario_III(const ScenarioConfig& cfg);

struct InsertionSetup {
  std::vector<dynamics::LaneState> lanes;
  std::vector<dynamics::InsertionEvent> insertions;
};
InsertionSetup build_scenario_IV(const ScenarioConfig& cfg, std::size_t trial);

enum class TrialStatus { kStabilized, kTimeout, kCollision, kFailed };
std::string_view to_string(TrialStatus status);

struct TrialResult {
  std::size_t trial = 0;
  TrialStatus status = TrialStatus::kFailed;
  metrics::MetricsReport metrics;
  std::vector<metrics::FollowerSpacing> followers;  // II/III
  std::optional<dynamics::Collision> collision;
  std::optional<dynamics::Trajectory> trajectory;
  std::string note;
};

TrialResult run_trial(const ScenarioConfig& cfg, std::size_t trial);

/// Runs cfg.trials independent trials (possibly on several threads) and
/// returns them ordered by trial index. A failing trial is reported in its
/// status and never aborts the batch.
std::vector<TrialResult> run_trials(const ScenarioConfig& cfg);

metrics::MetricsReport mean_metrics(const std::vector<TrialResult>& results);

}  // namespace scenarios
}  // namespace seidm
