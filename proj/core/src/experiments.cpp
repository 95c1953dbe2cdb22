#include "seidm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "seidm/errors.hpp"

namespace seidm {
namespace experiments {

using models::ModelKind;
using scenarios::ScenarioKind;
using scenarios::TrialResult;
using scenarios::TrialStatus;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<double> risk_exponent_for(ModelKind model,
                                        const models::ParamSet& params) {
  if (model == ModelKind::kSeidm) return params.risk.risk_exponent;
  return std::nullopt;
}

// Applies --r to every command except sweep-r, which takes a grid.
RunConfig resolved(const RunConfig& rc) {
  RunConfig out = rc;
  if (rc.subcommand != "sweep-r" && !rc.r_values.empty()) {
    if (rc.r_values.size() > 1) {
      throw ConfigError("--r", 0,
                        "expects a single value for '" + rc.subcommand + "'");
    }
    std::ostringstream v;
    v.precision(17);
    v << rc.r_values.front();
    apply_setting(out.settings, "risk.r", v.str());
  }
  return out;
}

scenarios::ScenarioConfig make_config(const RunConfig& rc, ScenarioKind kind,
                                      ModelKind model) {
  auto cfg = rc.settings.scenario(kind, model);
  if (rc.profile &&
      (kind == ScenarioKind::kII || kind == ScenarioKind::kIII)) {
    cfg.lead_profile = parse_lead_profile(*rc.profile, cfg.step.speed_cap);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<config>", 0, e.what());
  }
  return cfg;
}

void write_file(CommandResult& result, const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
  result.files.push_back(path);
}

std::string fmt(std::optional<double> v, const char* unit = "") {
  if (!v || !std::isfinite(*v)) return "-";
  return report::format_number(*v) + unit;
}

int worst_exit(int a, int b) {
  const auto rank = [](int code) {
    switch (code) {
      case kExitCollision: return 3;
      case kExitNoConvergence: return 2;
      case kExitFailure: return 1;
      default: return 0;
    }
  };
  return rank(a) >= rank(b) ? a : b;
}

std::string file_stem(ScenarioKind kind, ModelKind model) {
  return "scenario_" + std::string(scenarios::to_string(kind)) + "_" +
         std::string(models::to_string(model));
}

report::Series follower_gap_series(const dynamics::Trajectory& traj,
                                   std::uint32_t lane, std::uint32_t id) {
  report::Series s;
  s.name = "vehicle " + std::to_string(id);
  for (const auto& frame : traj.frames()) {
    for (const auto& v : frame.vehicles) {
      if (v.lane == lane && v.id == id) {
        s.x.push_back(frame.t);
        s.y.push_back(v.gap);
      }
    }
  }
  return s;
}

}  // namespace

int exit_code_for(std::span<const TrialResult> results) {
  int code = kExitOk;
  for (const auto& r : results) {
    switch (r.status) {
      case TrialStatus::kCollision:
        code = worst_exit(code, kExitCollision);
        break;
      case TrialStatus::kTimeout:
        code = worst_exit(code, kExitNoConvergence);
        break;
      case TrialStatus::kFailed:
        code = worst_exit(code, kExitFailure);
        break;
      case TrialStatus::kStabilized:
        break;
    }
  }
  return code;
}

std::string aggregate_status(std::span<const TrialResult> results) {
  switch (exit_code_for(results)) {
    case kExitCollision: return "collision";
    case kExitNoConvergence: return "timeout";
    case kExitFailure: return "failed";
    default: return "stabilized";
  }
}

std::vector<report::SummaryRow> summary_rows(
    std::span<const TrialResult> results, ModelKind model,
    std::optional<double> r, ScenarioKind kind) {
  std::vector<report::SummaryRow> rows;
  const std::string name(models::to_string(model));
  const std::string scenario(scenarios::to_string(kind));
  std::vector<metrics::MetricsReport> reports;
  for (const auto& t : results) {
    rows.push_back({name, r, scenario, std::to_string(t.trial), t.metrics,
                    std::string(scenarios::to_string(t.status))});
    reports.push_back(t.metrics);
  }
  rows.push_back({name, r, scenario, "mean", metrics::mean_report(reports),
                  aggregate_status(results)});
  return rows;
}

// sweep-r ------------------------------------------------------------------

std::vector<double> default_r_grid() {
  return {0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

std::string_view regime_of(double r) {
  if (r == 0.0) return "idm";
  if (r <= 0.4) return "smoothness";
  if (r <= 0.8) return "balanced";
  return "efficiency";
}

std::vector<SweepRow> sweep_r(const RunConfig& rc,
                              std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("--r", 0, "r grid is empty");
  std::vector<SweepRow> rows;
  for (double r : grid) {
    RunConfig local = rc;
    std::ostringstream v;
    v.precision(17);
    v << r;
    apply_setting(local.settings, "risk.r", v.str());

    SweepRow row;
    row.r = r;
    row.regime = regime_of(r);
    const double vmax = local.settings.params.variant.speed_cap;
    try {
      row.spacing =
          models::equilibrium_gap(ModelKind::kSeidm, vmax, local.settings.params);
      row.throughput = metrics::throughput(*row.spacing, vmax);
    } catch (const NoRootError&) {
      row.status = "no-root";
    }
    row.braking = scenarios::run_trial(
        make_config(local, ScenarioKind::kII, ModelKind::kSeidm), 0);
    if (row.status.empty()) {
      row.status = std::string(scenarios::to_string(row.braking.status));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CommandResult cmd_sweep_r(const RunConfig& rc_in) {
  const RunConfig rc = resolved(rc_in);
  const std::vector<double> grid =
      rc.r_values.empty() ? default_r_grid() : rc.r_values;
  const auto rows = sweep_r(rc, grid);
  const double vmax = rc.settings.params.variant.speed_cap;

  CommandResult result;
  std::vector<report::SummaryRow> summary;
  for (const auto& row : rows) {
    metrics::MetricsReport m = row.braking.metrics;
    m.stabilization_spacing = row.spacing;
    m.stabilization_speed = row.spacing ? std::optional<double>(vmax)
                                        : std::nullopt;
    m.throughput = row.throughput;
    const std::string status = row.status;
    summary.push_back({"seidm", row.r, "II", "0", m, status});
    summary.push_back({"seidm", row.r, "II", "mean", m, status});
    result.exit_code = worst_exit(
        result.exit_code,
        exit_code_for(std::span<const TrialResult>(&row.braking, 1)));
    if (row.status == "no-root") {
      result.exit_code = worst_exit(result.exit_code, kExitFailure);
    }
  }

  write_file(result, rc.out_dir / "sweep_r_summary.csv",
             [&](std::ostream& out) { report::write_summary(out, summary); });

  write_file(result, rc.out_dir / "sweep_r_table.csv", [&](std::ostream& out) {
    report::CsvWriter csv(out);
    csv.row({"r", "regime", "spacing_m", "throughput_vph",
             "braking_duration_s", "peak_decel_mps2", "iso_window_mps2",
             "iso_pass", "final_spacing_m", "spacing_reduction_m", "status"});
    for (const auto& row : rows) {
      const auto& m = row.braking.metrics;
      const std::string iso =
          m.iso_window ? (metrics::iso_window_pass(*m.iso_window,
                                                   rc.settings.iso_threshold)
                              ? "pass"
                              : "fail")
                       : "";
      csv.row({report::format_number(row.r), std::string(row.regime),
               report::format_number(row.spacing),
               report::format_number(row.throughput),
               report::format_number(m.braking_duration),
               report::format_number(m.peak_decel),
               report::format_number(m.iso_window), iso,
               report::format_number(m.mean_final_spacing()),
               report::format_number(m.mean_spacing_reduction()), row.status});
    }
  });

  report::Series spacing{"equilibrium spacing", {}, {}};
  for (const auto& row : rows) {
    spacing.x.push_back(row.r);
    spacing.y.push_back(row.spacing.value_or(kInf));
  }
  write_file(result, rc.out_dir / "sweep_r_spacing.svg",
             [&](std::ostream& out) {
               report::write_line_chart(
                   out,
                   {"Equilibrium spacing at v_max vs r", "r",
                    "spacing [m]"},
                   {spacing});
             });

  std::ostringstream text;
  text << "sweep-r: " << rows.size() << " values of r at v_max = "
       << report::format_number(mps_to_kmh(vmax)) << " km/h\n";
  text << "regimes: smoothness 0 < r <= 0.4, balanced 0.4 < r <= 0.8, "
          "efficiency r > 0.8 (boundaries 0.4 and 0.8)\n";
  for (const auto& row : rows) {
    const auto& m = row.braking.metrics;
    text << "  r=" << report::format_number(row.r) << " [" << row.regime
         << "] spacing=" << fmt(row.spacing, " m")
         << " throughput=" << fmt(row.throughput, " veh/h")
         << " braking=" << fmt(m.braking_duration, " s")
         << " peak=" << fmt(m.peak_decel, " m/s^2")
         << " iso2s=" << fmt(m.iso_window, " m/s^2")
         << " status=" << row.status << "\n";
  }
  result.text = text.str();
  write_file(result, rc.out_dir / "sweep_r.txt",
             [&](std::ostream& out) { out << result.text; });
  return result;
}

// compare-models -------------------------------------------------------------

bool is_stalled(const metrics::MetricsReport& mean, double v_max) {
  return mean.rear_half_speed && *mean.rear_half_speed < 0.1 * v_max;
}

std::vector<ModelComparison> compare_models(
    const RunConfig& rc, std::span<const ModelKind> kinds) {
  std::vector<ModelComparison> out;
  for (ModelKind model : kinds) {
    ModelComparison c;
    c.model = model;
    const auto cfg = make_config(rc, ScenarioKind::kI, model);
    c.trials = scenarios::run_trials(cfg);
    c.mean = scenarios::mean_metrics(c.trials);
    if (model != ModelKind::kKrauss) {
      try {
        c.analytic_spacing =
            models::equilibrium_gap(model, cfg.step.speed_cap, cfg.params);
      } catch (const NoRootError&) {
      }
    }
    c.stalled = is_stalled(c.mean, cfg.step.speed_cap);
    c.status = aggregate_status(c.trials);
    if (c.stalled) c.status += ";stalled";
    out.push_back(std::move(c));
  }
  return out;
}

CommandResult cmd_compare_models(const RunConfig& rc_in) {
  const RunConfig rc = resolved(rc_in);
  const std::vector<ModelKind> kinds =
      rc.models.empty()
          ? std::vector<ModelKind>{ModelKind::kIdm, ModelKind::kSeidm,
                                   ModelKind::kKrauss, ModelKind::kDerbelIdm,
                                   ModelKind::kClampedIdm}
          : rc.models;
  const auto comparisons = compare_models(rc, kinds);

  CommandResult result;
  std::vector<report::SummaryRow> summary;
  for (const auto& c : comparisons) {
    auto rows = summary_rows(c.trials, c.model,
                             risk_exponent_for(c.model, rc.settings.params),
                             ScenarioKind::kI);
    rows.back().status = c.status;
    summary.insert(summary.end(), rows.begin(), rows.end());
    result.exit_code = worst_exit(result.exit_code, exit_code_for(c.trials));
  }
  write_file(result, rc.out_dir / "compare_models_summary.csv",
             [&](std::ostream& out) { report::write_summary(out, summary); });

  std::ostringstream text;
  const double vmax = rc.settings.params.variant.speed_cap;
  text << "compare-models: scenario I, "
       << (comparisons.empty() ? 0 : comparisons.front().trials.size())
       << " trials per model, shared seeds\n";
  std::optional<double> idm_period, seidm_period;
  for (const auto& c : comparisons) {
    text << "  " << models::to_string(c.model)
         << ": spacing=" << fmt(c.mean.stabilization_spacing, " m")
         << " (analytic " << fmt(c.analytic_spacing, " m") << ")"
         << " period=" << fmt(c.mean.stabilization_period, " s")
         << " throughput=" << fmt(c.mean.throughput, " veh/h")
         << " rear-half speed=" << fmt(c.mean.rear_half_speed, " m/s")
         << " status=" << c.status << "\n";
    if (c.stalled) {
      text << "    stalled: rear-half mean speed below 10% of v_max ("
           << report::format_number(0.1 * vmax) << " m/s)\n";
    }
    if (c.model == ModelKind::kIdm) idm_period = c.mean.stabilization_period;
    if (c.model == ModelKind::kSeidm) {
      seidm_period = c.mean.stabilization_period;
    }
  }
  if (idm_period && seidm_period) {
    text << "  seidm/idm period ratio = "
         << report::format_number(*seidm_period / *idm_period) << "\n";
  }
  result.text = text.str();
  write_file(result, rc.out_dir / "compare_models.txt",
             [&](std::ostream& out) { out << result.text; });
  return result;
}

// scenario -------------------------------------------------------------------

CommandResult cmd_scenario(const RunConfig& rc_in) {
  const RunConfig rc = resolved(rc_in);
  const auto kind = scenarios::parse_scenario_kind(rc.target);
  if (!kind) {
    throw ConfigError("scenario", 0,
                      "unknown scenario '" + rc.target +
                          "' (expected I, II, III or IV)");
  }
  const std::vector<ModelKind> kinds =
      rc.models.empty() ? std::vector<ModelKind>{ModelKind::kSeidm}
                        : rc.models;

  CommandResult result;
  std::vector<report::SummaryRow> summary;
  std::vector<std::pair<ModelKind, TrialResult>> table_v;
  std::map<ModelKind, metrics::MetricsReport> means;
  std::ostringstream text;
  text << "scenario " << scenarios::to_string(*kind) << "\n";

  for (ModelKind model : kinds) {
    auto cfg = make_config(rc, *kind, model);
    cfg.trajectory_trials = rc.settings.trajectory_trials;
    auto results = scenarios::run_trials(cfg);
    auto rows = summary_rows(results, model,
                             risk_exponent_for(model, cfg.params), *kind);
    means[model] = rows.back().metrics;
    summary.insert(summary.end(), rows.begin(), rows.end());
    result.exit_code = worst_exit(result.exit_code, exit_code_for(results));

    const std::string stem = file_stem(*kind, model);
    for (const auto& t : results) {
      if (!t.trajectory) continue;
      write_file(result,
                 rc.out_dir / (stem + "_trial" + std::to_string(t.trial) +
                               "_trajectory.csv"),
                 [&](std::ostream& out) {
                   report::write_trajectory(out, *t.trajectory);
                 });
    }

    const auto& first = results.front();
    if ((*kind == ScenarioKind::kII || *kind == ScenarioKind::kIII) &&
        first.trajectory) {
      std::vector<report::Series> series;
      for (const auto& f : first.followers) {
        series.push_back(follower_gap_series(*first.trajectory, f.lane, f.id));
      }
      write_file(result, rc.out_dir / (stem + "_gaps.svg"),
                 [&](std::ostream& out) {
                   report::write_line_chart(
                       out,
                       {"Scenario " + std::string(scenarios::to_string(*kind)) +
                            " follower gaps (" +
                            std::string(models::to_string(model)) + ")",
                        "t [s]", "gap [m]"},
                       series);
                 });
    }
    if (*kind == ScenarioKind::kIII) table_v.emplace_back(model, first);

    const auto& m = rows.back().metrics;
    text << "  " << models::to_string(model) << ": status=" << rows.back().status;
    if (*kind == ScenarioKind::kI || *kind == ScenarioKind::kIV) {
      text << " period=" << fmt(m.stabilization_period, " s")
           << " spacing=" << fmt(m.stabilization_spacing, " m")
           << " throughput=" << fmt(m.throughput, " veh/h");
    }
    if (*kind == ScenarioKind::kIV) {
      text << " response=" << fmt(m.response_time, " s");
    }
    if (*kind == ScenarioKind::kII || *kind == ScenarioKind::kIII) {
      text << " final=" << fmt(m.mean_final_spacing(), " m")
           << " reduction=" << fmt(m.mean_spacing_reduction(), " m")
           << " braking=" << fmt(m.braking_duration, " s")
           << " peak=" << fmt(m.peak_decel, " m/s^2")
           << " iso2s=" << fmt(m.iso_window, " m/s^2");
    }
    text << "\n";
    for (const auto& t : results) {
      if (!t.note.empty()) {
        text << "    trial " << t.trial << ": " << t.note << "\n";
      }
    }
  }

  const std::string kind_name(scenarios::to_string(*kind));
  write_file(result, rc.out_dir / ("scenario_" + kind_name + "_summary.csv"),
             [&](std::ostream& out) { report::write_summary(out, summary); });

  if (*kind == ScenarioKind::kIII) {
    write_file(result, rc.out_dir / "scenario_III_table.csv",
               [&](std::ostream& out) {
                 report::CsvWriter csv(out);
                 csv.row({"model", "follower_index", "vehicle_id",
                          "initial_spacing_m", "final_spacing_m",
                          "spacing_reduction_m"});
                 for (const auto& [model, trial] : table_v) {
                   for (std::size_t i = 0; i < trial.followers.size(); ++i) {
                     const auto& f = trial.followers[i];
                     csv.row({std::string(models::to_string(model)),
                              std::to_string(i), std::to_string(f.id),
                              report::format_number(f.initial),
                              report::format_number(f.final),
                              report::format_number(f.reduction)});
                   }
                 }
               });
  }

  if (means.count(ModelKind::kIdm) && means.count(ModelKind::kSeidm)) {
    const auto& idm = means[ModelKind::kIdm];
    const auto& se = means[ModelKind::kSeidm];
    if (idm.stabilization_period && se.stabilization_period) {
      text << "  seidm/idm period ratio = "
           << report::format_number(*se.stabilization_period /
                                    *idm.stabilization_period)
           << "\n";
    }
    if (idm.response_time && se.response_time) {
      text << "  seidm/idm response ratio = "
           << report::format_number(*se.response_time / *idm.response_time)
           << "\n";
    }
  }
  result.text = text.str();
  write_file(result, rc.out_dir / ("scenario_" + kind_name + ".txt"),
             [&](std::ostream& out) { out << result.text; });
  return result;
}

// curves ---------------------------------------------------------------------

std::vector<Fig7Row> fig7_rows(const models::ParamSet& params) {
  std::vector<double> ratios;
  for (int k = 1; k <= 19; ++k) ratios.push_back(0.05 * k);
  ratios.push_back(0.99);
  std::vector<Fig7Row> rows;
  for (double q : ratios) {
    Fig7Row row;
    row.v_ratio = q;
    row.speed = q * params.idm.desired_speed;
    row.equilibrium_gap =
        models::equilibrium_gap(ModelKind::kIdm, row.speed, params);
    row.desired_gap = models::desired_gap(row.speed, 0.0, params.idm);
    row.ratio = row.equilibrium_gap / row.desired_gap;
    rows.push_back(row);
  }
  return rows;
}

std::vector<Fig8Row> fig8_rows(const models::ParamSet& params) {
  const double follower = kmh_to_mps(90.0);
  std::vector<Fig8Row> rows;
  for (double q : {0.85, 0.90, 0.95, 1.00}) {
    const double leader = q * follower;
    for (int d = 5; d <= 100; ++d) {
      Fig8Row row;
      row.leader_ratio = q;
      row.follower_speed = follower;
      row.leader_speed = leader;
      row.distance = d;
      const auto obs = models::Observation::make(row.distance, follower, leader);
      row.accel = models::idm_acceleration(obs, params.idm);
      row.ttc = obs.approach_rate > 0.0 ? row.distance / obs.approach_rate
                                        : kInf;
      rows.push_back(row);
    }
  }
  return rows;
}

CommandResult cmd_curves(const RunConfig& rc_in) {
  const RunConfig rc = resolved(rc_in);
  const auto& params = rc.settings.params;
  CommandResult result;
  std::ostringstream text;

  if (rc.target == "fig7") {
    const auto rows = fig7_rows(params);
    write_file(result, rc.out_dir / "fig7.csv", [&](std::ostream& out) {
      report::CsvWriter csv(out);
      csv.row({"v_ratio", "speed_mps", "speed_kmh", "equilibrium_gap_m",
               "desired_gap_m", "ratio"});
      for (const auto& r : rows) {
        csv.row({report::format_number(r.v_ratio),
                 report::format_number(r.speed),
                 report::format_number(mps_to_kmh(r.speed)),
                 report::format_number(r.equilibrium_gap),
                 report::format_number(r.desired_gap),
                 report::format_number(r.ratio)});
      }
    });
    report::Series eq{"equilibrium gap", {}, {}};
    report::Series des{"desired gap s*(v,0)", {}, {}};
    for (const auto& r : rows) {
      eq.x.push_back(r.v_ratio);
      eq.y.push_back(r.equilibrium_gap);
      des.x.push_back(r.v_ratio);
      des.y.push_back(r.desired_gap);
    }
    write_file(result, rc.out_dir / "fig7.svg", [&](std::ostream& out) {
      report::write_line_chart(
          out, {"IDM stabilized vs desired distance", "v / v0", "gap [m]"},
          {eq, des});
    });
    text << "fig7: " << rows.size() << " speeds, ratio "
         << report::format_number(rows.front().ratio) << " -> "
         << report::format_number(rows.back().ratio) << "\n";
  } else if (rc.target == "fig8") {
    const auto rows = fig8_rows(params);
    write_file(result, rc.out_dir / "fig8.csv", [&](std::ostream& out) {
      report::CsvWriter csv(out);
      csv.row({"leader_ratio", "follower_speed_mps", "follower_speed_kmh",
               "leader_speed_mps", "leader_speed_kmh", "distance_m",
               "accel_mps2", "ttc_s"});
      for (const auto& r : rows) {
        csv.row({report::format_number(r.leader_ratio),
                 report::format_number(r.follower_speed),
                 report::format_number(mps_to_kmh(r.follower_speed)),
                 report::format_number(r.leader_speed),
                 report::format_number(mps_to_kmh(r.leader_speed)),
                 report::format_number(r.distance),
                 report::format_number(r.accel), report::format_number(r.ttc)});
      }
    });
    std::map<double, std::pair<report::Series, report::Series>> by_ratio;
    for (const auto& r : rows) {
      auto& [acc, ttc] = by_ratio[r.leader_ratio];
      const std::string name =
          "leader " + report::format_number(100.0 * r.leader_ratio) + "%";
      acc.name = ttc.name = name;
      acc.x.push_back(r.distance);
      acc.y.push_back(r.accel);
      ttc.x.push_back(r.distance);
      ttc.y.push_back(r.ttc);
    }
    std::vector<report::Series> acc_series, ttc_series;
    for (const auto& [q, pair] : by_ratio) {
      acc_series.push_back(pair.first);
      ttc_series.push_back(pair.second);
    }
    write_file(result, rc.out_dir / "fig8.svg", [&](std::ostream& out) {
      report::write_line_chart(
          out,
          {"IDM follower acceleration at 90 km/h", "distance [m]",
           "acceleration [m/s^2]"},
          acc_series);
    });
    write_file(result, rc.out_dir / "fig8_ttc.svg", [&](std::ostream& out) {
      report::write_line_chart(
          out, {"TTC vs distance", "distance [m]", "TTC [s]"}, ttc_series);
    });
    double max_safe = -kInf;
    for (const auto& r : rows) {
      if (r.ttc > 10.0) max_safe = std::max(max_safe, r.accel);
    }
    text << "fig8: " << rows.size()
         << " points, max acceleration where TTC > 10 s = "
         << report::format_number(max_safe) << " m/s^2\n";
  } else {
    throw ConfigError("curves", 0,
                      "unknown curve '" + rc.target +
                          "' (expected fig7 or fig8)");
  }
  result.text = text.str();
  return result;
}

CommandResult run_command(const RunConfig& rc) {
  if (rc.subcommand == "sweep-r") return cmd_sweep_r(rc);
  if (rc.subcommand == "compare-models") return cmd_compare_models(rc);
  if (rc.subcommand == "scenario") return cmd_scenario(rc);
  if (rc.subcommand == "curves") return cmd_curves(rc);
  throw ConfigError("<command>", 0,
                    "unknown subcommand '" + rc.subcommand + "'");
}

}  // namespace experiments
}  // namespace seidm
