#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "seidm/experiments.hpp"

namespace {

using namespace seidm::experiments;

struct Flags {
  std::optional<std::string> config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> dt;
  std::optional<std::string> model;
  std::optional<std::string> r;
  std::optional<std::string> profile;
  std::optional<std::string> t_max;
  std::optional<std::uint64_t> workers;
  std::vector<std::string> sets;
  std::string target;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "configuration file (key = value)");
  cmd->add_option("--out-dir", f.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--trials", f.trials, "trials per model");
  cmd->add_option("--dt", f.dt, "integration step [s]");
  cmd->add_option("--model", f.model,
                  "comma-separated models: idm, seidm, krauss, derbel, clamped");
  cmd->add_option("--r", f.r, "risk exponent (sweep-r: comma-separated grid)");
  cmd->add_option("--profile", f.profile,
                  "leader schedule, e.g. hold:5,ramp:6:9.9");
  cmd->add_option("--t-max", f.t_max, "simulation horizon [s]");
  cmd->add_option("--workers", f.workers, "trial threads (0 = all cores)");
  cmd->add_option("--set", f.sets, "override section.key=value (repeatable)");
}

RunConfig build_run_config(const std::string& subcommand, const Flags& f) {
  RunConfig rc;
  rc.subcommand = subcommand;
  rc.target = f.target;
  rc.out_dir = f.out_dir;
  if (f.config) {
    rc.config_path = *f.config;
    rc.settings = parse_config_file(*f.config);
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set", 0, "expected section.key=value, got '" + s + "'");
    }
    apply_setting(rc.settings, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) apply_setting(rc.settings, "scenario.seed", std::to_string(*f.seed));
  if (f.trials) {
    apply_setting(rc.settings, "scenario.trials", std::to_string(*f.trials));
  }
  if (f.dt) apply_setting(rc.settings, "dynamics.dt", *f.dt);
  if (f.t_max) apply_setting(rc.settings, "dynamics.t_max", *f.t_max);
  if (f.workers) {
    apply_setting(rc.settings, "output.workers", std::to_string(*f.workers));
  }
  if (f.model) rc.models = parse_model_list(*f.model);
  if (f.r) rc.r_values = parse_number_list(*f.r);
  if (f.profile) {
    parse_lead_profile(*f.profile, rc.settings.step.speed_cap);
    rc.profile = *f.profile;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Car-following experiments: IDM, SEIDM and baselines"};
  app.require_subcommand(1);

  Flags flags;
  auto* sweep = app.add_subcommand("sweep-r", "equilibrium and braking metrics over r");
  auto* compare = app.add_subcommand("compare-models", "scenario I across models");
  auto* scenario = app.add_subcommand("scenario", "run scenario I, II, III or IV");
  auto* curves = app.add_subcommand("curves", "fig7 or fig8 data");
  for (auto* cmd : {sweep, compare, scenario, curves}) add_common_flags(cmd, flags);
  scenario->add_option("kind", flags.target, "I, II, III or IV")->required();
  curves->add_option("which", flags.target, "fig7 or fig8")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig rc = build_run_config(name, flags);
    const CommandResult result = run_command(rc);
    std::cout << result.text;
    for (const auto& path : result.files) std::cout << "wrote " << path.string() << "\n";
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
