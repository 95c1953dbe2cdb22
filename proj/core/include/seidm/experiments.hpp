#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seidm/config.hpp"
#include "seidm/metrics.hpp"
#include "seidm/models.hpp"
#include "seidm/report.hpp"
#include "seidm/scenarios.hpp"

namespace seidm {
namespace experiments {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCollision = 3;
inline constexpr int kExitNoConvergence = 4;

struct RunConfig {
  std::string subcommand;
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir = "out";
  Settings settings;
  std::vector<models::ModelKind> models;  // empty: command default
  std::vector<double> r_values;           // empty: command default
  std::optional<std::string> profile;     // leader speed schedule (II/III)
  std::string target;                     // scenario kind or curve name
};

/// 3 if any trial collided, else 4 if any hit t_max, else 1 if any failed,
/// else 0.
int exit_code_for(std::span<const scenarios::TrialResult> results);

/// Worst status over a batch, in the precedence of exit_code_for.
std::string aggregate_status(std::span<const scenarios::TrialResult> results);

/// Summary rows for one (model, scenario) group: one per trial, then "mean".
std::vector<report::SummaryRow> summary_rows(
    std::span<const scenarios::TrialResult> results, models::ModelKind model,
    std::optional<double> r, scenarios::ScenarioKind kind);

// sweep-r ------------------------------------------------------------------

/// {0, 0.05, 0.1, 0.2, ..., 1.0}
std::vector<double> default_r_grid();

/// "idm" at r = 0, "smoothness" up to 0.4, "balanced" up to 0.8, else
/// "efficiency".
std::string_view regime_of(double r);

struct SweepRow {
  double r = 0.0;
  std::string_view regime;
  std::optional<double> spacing;     // analytic equilibrium at v_max [m]
  std::optional<double> throughput;  // 3600 v_max / spacing [veh/h]
  scenarios::TrialResult braking;    // Scenario II
  std::string status;
};

std::vector<SweepRow> sweep_r(const RunConfig& rc, std::span<const double> grid);

// compare-models -------------------------------------------------------------

struct ModelComparison {
  models::ModelKind model = models::ModelKind::kIdm;
  std::vector<scenarios::TrialResult> trials;
  metrics::MetricsReport mean;
  std::optional<double> analytic_spacing;
  bool stalled = false;
  std::string status;
};

/// Mean rear-half speed below 10% of v_max.
bool is_stalled(const metrics::MetricsReport& mean, double v_max);

std::vector<ModelComparison> compare_models(
    const RunConfig& rc, std::span<const models::ModelKind> models);

// curves ---------------------------------------------------------------------

struct Fig7Row {
  double v_ratio = 0.0;
  double speed = 0.0;            // [m/s]
  double equilibrium_gap = 0.0;  // [m]
  double desired_gap = 0.0;      // s*(v, 0) [m]
  double ratio = 0.0;            // equilibrium / desired
};

/// IDM over v/v0 in {0.05, 0.10, ..., 0.95, 0.99}.
std::vector<Fig7Row> fig7_rows(const models::ParamSet& params);

struct Fig8Row {
  double leader_ratio = 0.0;
  double follower_speed = 0.0;  // [m/s]
  double leader_speed = 0.0;    // [m/s]
  double distance = 0.0;        // [m]
  double accel = 0.0;           // IDM [m/s^2]
  double ttc = 0.0;             // [s], +inf when not closing
};

/// IDM follower at 90 km/h, leader at 85/90/95/100% of it, distances
/// 5..100 m in 1 m steps.
std::vector<Fig8Row> fig8_rows(const models::ParamSet& params);

// commands -------------------------------------------------------------------

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::string text;  // human-readable summary
};

CommandResult cmd_sweep_r(const RunConfig& rc);
CommandResult cmd_compare_models(const RunConfig& rc);
CommandResult cmd_scenario(const RunConfig& rc);
CommandResult cmd_curves(const RunConfig& rc);

/// Dispatches on rc.subcommand. Throws ConfigError for an unknown command
/// or target.
CommandResult run_command(const RunConfig& rc);

}  // namespace experiments
}  // namespace seidm
