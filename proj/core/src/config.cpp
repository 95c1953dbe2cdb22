#include "seidm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "seidm/errors.hpp"

namespace seidm {
namespace experiments {

namespace {

std::string format_error(const std::string& source, std::size_t line,
                         const std::string& what) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  os << ": " << what;
  return os.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> to_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

std::optional<std::uint64_t> to_unsigned(std::string_view text) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

enum class ValueKind { kReal, kCount };

struct KeySpec {
  ValueKind kind;
  std::function<void(Settings&, double)> set_real;
  std::function<void(Settings&, std::uint64_t)> set_count;
};

KeySpec real(std::function<void(Settings&, double)> f) {
  return {ValueKind::kReal, std::move(f), {}};
}

KeySpec count(std::function<void(Settings&, std::uint64_t)> f) {
  return {ValueKind::kCount, {}, std::move(f)};
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw InvalidParameterError(std::string("parameter invariant violated: ") +
                                name + " > 0");
  }
}

const std::map<std::string, KeySpec, std::less<>>& key_table() {
  static const std::map<std::string, KeySpec, std::less<>> table = {
      {"model.a0", real([](Settings& s, double v) { s.params.idm.max_accel = v; })},
      {"model.b0",
       real([](Settings& s, double v) { s.params.idm.comfortable_decel = v; })},
      {"model.v0", real([](Settings& s, double v) {
         s.params.idm.desired_speed = kmh_to_mps(v);
       })},
      {"model.delta",
       real([](Settings& s, double v) { s.params.idm.accel_exponent = v; })},
      {"model.T",
       real([](Settings& s, double v) { s.params.idm.safe_time_headway = v; })},
      {"model.s0", real([](Settings& s, double v) { s.params.idm.static_gap = v; })},

      {"risk.TTC0", real([](Settings& s, double v) { s.params.risk.ttc0 = v; })},
      {"risk.r",
       real([](Settings& s, double v) { s.params.risk.risk_exponent = v; })},
      {"risk.smoothing",
       real([](Settings& s, double v) { s.params.risk.smoothing_coeff = v; })},

      {"variants.c",
       real([](Settings& s, double v) { s.params.variant.derbel_c = v; })},

      {"dynamics.dt", real([](Settings& s, double v) { s.step.dt = v; })},
      {"dynamics.T_prime", real([](Settings& s, double v) {
         s.step.reaction_time = v;
         s.params.variant.krauss_reaction = v;
       })},
      {"dynamics.v_max", real([](Settings& s, double v) {
         s.step.speed_cap = kmh_to_mps(v);
         s.params.variant.speed_cap = kmh_to_mps(v);
       })},
      {"dynamics.t_max", real([](Settings& s, double v) {
         require_positive(v, "t_max");
         s.t_max = v;
       })},
      {"dynamics.vehicle_length", real([](Settings& s, double v) {
         require_positive(v, "vehicle_length");
         s.vehicle_length = v;
       })},

      {"scenario.seed", count([](Settings& s, std::uint64_t v) { s.seed = v; })},
      {"scenario.trials", count([](Settings& s, std::uint64_t v) {
         if (v == 0) {
           throw InvalidParameterError(
               "parameter invariant violated: trials > 0");
         }
         s.trials = v;
       })},
      {"scenario.n_vehicles", count([](Settings& s, std::uint64_t v) {
         if (v < 2) {
           throw InvalidParameterError(
               "parameter invariant violated: n_vehicles >= 2");
         }
         s.vehicles_per_lane = v;
       })},
      {"scenario.n_lanes", count([](Settings& s, std::uint64_t v) {
         if (v == 0) {
           throw InvalidParameterError(
               "parameter invariant violated: n_lanes > 0");
         }
         s.lanes = v;
       })},
      {"scenario.insert_time", real([](Settings& s, double v) {
         if (!(v >= 0.0)) {
           throw InvalidParameterError(
               "parameter invariant violated: insert_time >= 0");
         }
         s.insert_time = v;
       })},
      {"scenario.brake_hold", real([](Settings& s, double v) {
         if (!(v >= 0.0)) {
           throw InvalidParameterError(
               "parameter invariant violated: brake_hold >= 0");
         }
         s.brake_hold = v;
       })},
      {"scenario.brake_decel", real([](Settings& s, double v) {
         require_positive(v, "brake_decel");
         s.brake_decel = v;
       })},
      {"scenario.brake_target", real([](Settings& s, double v) {
         if (!(v >= 0.0)) {
           throw InvalidParameterError(
               "parameter invariant violated: brake_target >= 0");
         }
         s.brake_target = v;
       })},

      {"metrics.accel_tol",
       real([](Settings& s, double v) { s.stabilization.accel_tol = v; })},
      {"metrics.speed_tol", real([](Settings& s, double v) {
         s.stabilization.speed_tol = v;
         s.braking.speed_tol = v;
       })},
      {"metrics.hold_window", real([](Settings& s, double v) {
         s.stabilization.hold_window = v;
         s.braking.hold_window = v;
       })},
      {"metrics.braking_accel_tol",
       real([](Settings& s, double v) { s.braking.accel_tol = v; })},
      {"metrics.response_threshold", real([](Settings& s, double v) {
         require_positive(v, "response_threshold");
         s.response_threshold = v;
       })},
      {"metrics.iso_threshold", real([](Settings& s, double v) {
         require_positive(v, "iso_threshold");
         s.iso_threshold = v;
       })},

      {"output.trajectory_trials",
       count([](Settings& s, std::uint64_t v) { s.trajectory_trials = v; })},
      {"output.trajectory_stride", count([](Settings& s, std::uint64_t v) {
         if (v == 0) {
           throw InvalidParameterError(
               "parameter invariant violated: trajectory_stride > 0");
         }
         s.frame_stride = v;
       })},
      {"output.workers",
       count([](Settings& s, std::uint64_t v) { s.workers = v; })},
  };
  return table;
}

void validate_settings(const Settings& s) {
  s.params.validate();
  s.step.validate();
  s.stabilization.validate();
  s.braking.validate();
}

}  // namespace

ConfigError::ConfigError(std::string source, std::size_t line,
                         const std::string& what)
    : std::runtime_error(format_error(source, line, what)), line_(line) {}

scenarios::ScenarioConfig Settings::scenario(scenarios::ScenarioKind kind,
                                             models::ModelKind model) const {
  auto cfg = scenarios::ScenarioConfig::defaults(kind);
  const double default_t_max = cfg.step.t_max;
  cfg.model = model;
  cfg.params = params;
  cfg.step = step;
  cfg.step.t_max = t_max.value_or(default_t_max);
  cfg.step.rng_seed = seed;
  cfg.vehicle_length = vehicle_length;
  // II is a fixed pair and III a single lane.
  const bool flow = kind == scenarios::ScenarioKind::kI ||
                    kind == scenarios::ScenarioKind::kIV;
  if (vehicles_per_lane && kind != scenarios::ScenarioKind::kII) {
    cfg.vehicles_per_lane = *vehicles_per_lane;
  }
  if (lanes && flow) cfg.lanes = *lanes;
  if (trials) cfg.trials = *trials;
  cfg.brake_hold = brake_hold;
  cfg.brake_decel = brake_decel;
  cfg.brake_target = brake_target;
  cfg.insert_time = insert_time;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.stabilization = stabilization;
  cfg.braking = braking;
  cfg.response_threshold = response_threshold;
  cfg.trajectory_trials = 0;
  cfg.frame_stride = frame_stride;
  return cfg;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, spec] : key_table()) keys.push_back(k);
  return keys;
}

void apply_setting(Settings& settings, std::string_view qualified_key,
                   std::string_view value) {
  const auto it = key_table().find(qualified_key);
  if (it == key_table().end()) {
    throw ConfigError("<override>", 0,
                      "unknown key '" + std::string(qualified_key) + "'");
  }
  const KeySpec& spec = it->second;
  Settings next = settings;
  try {
    if (spec.kind == ValueKind::kReal) {
      const auto v = to_double(value);
      if (!v) {
        throw ConfigError("<override>", 0,
                          "key '" + std::string(qualified_key) +
                              "' expects a number, got '" +
                              std::string(trim(value)) + "'");
      }
      spec.set_real(next, *v);
    } else {
      const auto v = to_unsigned(value);
      if (!v) {
        throw ConfigError("<override>", 0,
                          "key '" + std::string(qualified_key) +
                              "' expects a non-negative integer, got '" +
                              std::string(trim(value)) + "'");
      }
      spec.set_count(next, *v);
    }
    validate_settings(next);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<override>", 0, e.what());
  }
  settings = std::move(next);
}

Settings parse_config(std::istream& in, std::string_view source,
                      Settings base) {
  const std::string src(source);
  std::string section;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(src, line_no, "malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string, std::less<>> kSections = {
          "model", "risk", "variants", "dynamics", "scenario", "metrics",
          "output"};
      if (!kSections.count(section)) {
        throw ConfigError(src, line_no, "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(src, line_no, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(src, line_no, "missing key");
    if (section.empty()) {
      throw ConfigError(src, line_no,
                        "key '" + key + "' appears before any section");
    }
    const std::string qualified = section + "." + key;
    if (!key_table().count(qualified)) {
      throw ConfigError(src, line_no,
                        "unknown key '" + key + "' in [" + section + "]");
    }
    if (!seen.insert(qualified).second) {
      throw ConfigError(src, line_no,
                        "duplicate key '" + key + "' in [" + section + "]");
    }
    try {
      apply_setting(base, qualified, value);
    } catch (const ConfigError& e) {
      // Re-anchor to the file position; drop the "<override>: " prefix.
      std::string what = e.what();
      const std::string prefix = "<override>: ";
      if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
      throw ConfigError(src, line_no, what);
    }
  }
  return base;
}

Settings parse_config_file(const std::filesystem::path& path, Settings base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  return parse_config(in, path.string(), std::move(base));
}

dynamics::LeadProfile parse_lead_profile(std::string_view text,
                                         double initial_speed) {
  const auto fail = [&](const std::string& what) {
    return ConfigError("--profile", 0, what);
  };
  std::vector<dynamics::LeadProfile::Segment> segments;
  double current = initial_speed;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start));
    start = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
    if (piece.empty()) throw fail("empty profile segment");

    std::vector<std::string_view> fields;
    std::size_t f = 0;
    while (true) {
      const auto colon = piece.find(':', f);
      fields.push_back(piece.substr(
          f, colon == std::string_view::npos ? std::string_view::npos
                                             : colon - f));
      if (colon == std::string_view::npos) break;
      f = colon + 1;
    }
    std::vector<double> nums;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto v = to_double(fields[i]);
      if (!v) {
        throw fail("bad number '" + std::string(fields[i]) + "' in segment '" +
                   std::string(piece) + "'");
      }
      nums.push_back(*v);
    }
    if (fields[0] == "hold" && (nums.size() == 1 || nums.size() == 2)) {
      if (nums.size() == 2) current = nums[1];
      segments.push_back(dynamics::LeadProfile::Hold{current, nums[0]});
    } else if (fields[0] == "ramp" && nums.size() == 2) {
      segments.push_back(dynamics::LeadProfile::Ramp{nums[0], nums[1]});
      current = nums[1];
    } else {
      throw fail("unrecognized segment '" + std::string(piece) +
                 "' (expected hold:<s>[:<m/s>] or ramp:<m/s^2>:<m/s>)");
    }
  }
  try {
    return dynamics::LeadProfile(initial_speed, std::move(segments));
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start);
    const auto v = to_double(piece);
    if (!v) {
      throw ConfigError("<override>", 0,
                        "bad number '" + std::string(trim(piece)) + "'");
    }
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<models::ModelKind> parse_model_list(std::string_view text) {
  std::vector<models::ModelKind> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start));
    const auto kind = models::parse_model_kind(piece);
    if (!kind) {
      throw ConfigError("--model", 0,
                        "unknown model '" + std::string(piece) +
                            "' (expected idm, seidm, krauss, derbel, clamped)");
    }
    out.push_back(*kind);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace experiments
}  // namespace seidm
