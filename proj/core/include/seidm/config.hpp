#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seidm/dynamics.hpp"
#include "seidm/metrics.hpp"
#include "seidm/models.hpp"
#include "seidm/scenarios.hpp"

namespace seidm {
namespace experiments {

/// Malformed configuration. `line()` is 0 when the problem is not tied to a
/// line (command-line overrides).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Everything the configuration file and overrides can set. Defaults are
/// the reference parameter table.
struct Settings {
  models::ParamSet params;
  dynamics::StepConfig step;          // t_max here is only used if set below
  std::optional<double> t_max;        // unset: per-scenario default
  double vehicle_length = dynamics::kDefaultVehicleLength;

  std::uint64_t seed = 1;
  std::optional<std::size_t> trials;  // unset: per-command default
  std::optional<std::size_t> vehicles_per_lane;
  std::optional<std::size_t> lanes;
  double insert_time = 10.0;
  double brake_hold = 5.0;
  double brake_decel = 6.0;
  double brake_target = 9.9;

  metrics::StabilizationCriterion stabilization;
  metrics::StabilizationCriterion braking =
      metrics::StabilizationCriterion::braking();
  double response_threshold = 1e-4;
  double iso_threshold = 3.5;

  std::size_t trajectory_trials = 1;
  std::size_t frame_stride = 10;
  std::size_t workers = 0;

  /// Scenario config for `kind` and `model` with these settings applied on
  /// top of the scenario defaults.
  scenarios::ScenarioConfig scenario(scenarios::ScenarioKind kind,
                                     models::ModelKind model) const;
};

/// Names of every accepted "section.key".
std::vector<std::string> config_keys();

/// Sets one "section.key" from its textual value, converting km/h keys to
/// SI. Throws ConfigError (line 0) for unknown keys, unparsable values or
/// violated invariants.
void apply_setting(Settings& settings, std::string_view qualified_key,
                   std::string_view value);

/// Line-oriented "key = value" format with [section] headers and '#'
/// comments. Unknown keys and duplicates are rejected; errors carry the
/// line number.
Settings parse_config(std::istream& in, std::string_view source = "<config>",
                      Settings base = {});
Settings parse_config_file(const std::filesystem::path& path,
                           Settings base = {});

/// Comma-separated segments: "hold:<s>" holds the current speed,
/// "hold:<s>:<m/s>" holds a given speed, "ramp:<m/s^2>:<m/s>" ramps to a
/// target. The profile starts at `initial_speed`.
dynamics::LeadProfile parse_lead_profile(std::string_view text,
                                         double initial_speed);

std::vector<double> parse_number_list(std::string_view text);
std::vector<models::ModelKind> parse_model_list(std::string_view text);

}  // namespace experiments
}  // namespace seidm
