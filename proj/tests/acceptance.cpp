// Acceptance suite: one PASS/FAIL line per criterion.
//
//   seidm_acceptance            run every criterion
//   seidm_acceptance --only N   run criterion N (exit 1 if it fails)

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "seidm/dynamics.hpp"
#include "seidm/experiments.hpp"
#include "seidm/metrics.hpp"
#include "seidm/models.hpp"
#include "seidm/scenarios.hpp"

namespace {

using namespace seidm;
using models::ModelKind;
using models::Observation;
using scenarios::ScenarioConfig;
using scenarios::ScenarioKind;
using scenarios::TrialResult;
using scenarios::TrialStatus;
using Clock = std::chrono::steady_clock;

const double kVmax = kmh_to_mps(95.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool within_rel(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

// Safety record over every simulated trial ---------------------------------

struct SafetyLog {
  std::size_t trials = 0;
  std::size_t collisions = 0;
  std::size_t failures = 0;
  double min_speed = std::numeric_limits<double>::infinity();
  double max_speed = -std::numeric_limits<double>::infinity();
};

SafetyLog g_safety;

void observe(TrialResult& r) {
  ++g_safety.trials;
  if (r.status == TrialStatus::kCollision || r.collision) ++g_safety.collisions;
  if (r.status == TrialStatus::kFailed) ++g_safety.failures;
  if (r.trajectory) {
    const auto& t = *r.trajectory;
    for (std::size_t k = 0; k < t.size(); ++k) {
      for (std::size_t l = 0; l < t.lane_count(); ++l) {
        const auto& s = t.summary(k, l);
        g_safety.min_speed = std::min(g_safety.min_speed, s.min_speed);
        g_safety.max_speed = std::max(g_safety.max_speed, s.max_speed);
      }
    }
    r.trajectory.reset();
  }
}

std::vector<TrialResult> run_checked(ScenarioConfig cfg) {
  cfg.trajectory_trials = cfg.trials;
  // Per-tick summaries carry the speed bounds; frames are not needed.
  cfg.frame_stride = std::numeric_limits<std::size_t>::max() / 2;
  auto results = scenarios::run_trials(cfg);
  for (auto& r : results) observe(r);
  return results;
}

// Shared runs ----------------------------------------------------------------

const std::vector<TrialResult>& flow_runs(ScenarioKind kind, ModelKind model) {
  static std::map<std::pair<int, int>, std::vector<TrialResult>> cache;
  const auto key = std::make_pair(static_cast<int>(kind), static_cast<int>(model));
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto cfg = ScenarioConfig::defaults(kind);
    cfg.model = model;
    it = cache.emplace(key, run_checked(cfg)).first;
  }
  return it->second;
}

bool all_stabilized(const std::vector<TrialResult>& runs) {
  return std::all_of(runs.begin(), runs.end(), [](const TrialResult& r) {
    return r.status == TrialStatus::kStabilized;
  });
}

// Leader target speed at which the IDM equilibrium gap equals `gap`.
double idm_speed_for_gap(double gap) {
  const models::ModelParams p;
  double lo = 0.0, hi = kVmax;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (models::idm_equilibrium_gap_closed_form(mid, p) < gap ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

const double kCalibratedGap = 17.96;

TrialResult braking_run(ScenarioKind kind, ModelKind model) {
  static std::map<std::pair<int, int>, TrialResult> cache;
  const auto key = std::make_pair(static_cast<int>(kind), static_cast<int>(model));
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto cfg = ScenarioConfig::defaults(kind);
    cfg.model = model;
    cfg.brake_target = idm_speed_for_gap(kCalibratedGap);
    cfg.trials = 1;
    it = cache.emplace(key, run_checked(cfg).front()).first;
  }
  return it->second;
}

struct SweepPoint {
  double r = 0.0;
  double spacing = 0.0;
  double throughput = 0.0;
  TrialResult braking;
};

const std::vector<SweepPoint>& sweep() {
  static std::vector<SweepPoint> points;
  if (!points.empty()) return points;
  for (double r : experiments::default_r_grid()) {
    auto cfg = ScenarioConfig::defaults(ScenarioKind::kII);
    cfg.model = ModelKind::kSeidm;
    cfg.params.risk.risk_exponent = r;
    cfg.trials = 1;
    SweepPoint p;
    p.r = r;
    p.spacing = models::equilibrium_gap(ModelKind::kSeidm, kVmax, cfg.params);
    p.throughput = metrics::throughput(p.spacing, kVmax);
    p.braking = run_checked(cfg).front();
    points.push_back(std::move(p));
  }
  return points;
}

// Criteria -------------------------------------------------------------------

const std::vector<double> kReferenceSpacing{102.67, 100.47, 98.41, 94.70,
                                         91.43,  88.53,  85.95, 83.64,
                                         81.54,  79.64,  77.92, 76.34};
const std::vector<double> kReferenceThroughput{925.3,  945.5,  965.3,  1003.1,
                                            1039.0, 1073.1, 1105.3, 1135.8,
                                            1165.1, 1192.9, 1219.2, 1244.4};

Outcome ac1() {
  const auto start = Clock::now();
  const auto grid = experiments::default_r_grid();
  models::ParamSet params;
  double worst = 0.0;
  bool ok = grid.size() == kReferenceSpacing.size();
  for (std::size_t i = 0; ok && i < grid.size(); ++i) {
    params.risk.risk_exponent = grid[i];
    const double s = models::equilibrium_gap(ModelKind::kSeidm, kVmax, params);
    const double rel = std::abs(s - kReferenceSpacing[i]) / kReferenceSpacing[i];
    worst = std::max(worst, rel);
    ok = ok && rel <= 0.005;
  }
  const double idm = models::equilibrium_gap(ModelKind::kIdm, kVmax, params);
  ok = ok && within_rel(idm, 102.67, 0.005);
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 1.0;
  return {ok, fmt("max rel err %.3g%% over %zu r values, IDM %.3f m, %.3f s",
                  100.0 * worst, grid.size(), idm, elapsed)};
}

Outcome ac2() {
  models::ParamSet params;
  const auto grid = experiments::default_r_grid();
  double worst = 0.0;
  bool ok = true;
  const auto check = [&](double spacing, double target) {
    const double q = metrics::throughput(spacing, kVmax);
    const double rel = std::abs(q - target) / target;
    worst = std::max(worst, rel);
    ok = ok && rel <= 0.005;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    params.risk.risk_exponent = grid[i];
    check(models::equilibrium_gap(ModelKind::kSeidm, kVmax, params),
          kReferenceThroughput[i]);
  }
  params.risk.risk_exponent = 0.6;
  check(models::equilibrium_gap(ModelKind::kIdm, kVmax, params), 925.29);
  check(models::equilibrium_gap(ModelKind::kSeidm, kVmax, params), 1135.8);
  check(44.28, 2145.44);
  check(196.06, 484.55);
  return {ok, fmt("max rel err %.3g%% over 16 entries", 100.0 * worst)};
}

Outcome ac3() {
  models::ModelParams p;
  models::RiskParams q;
  q.risk_exponent = 0.0;
  oracle::ObservationGen gen(3);
  double worst = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const auto o = Observation::make(gen.gap(), gen.speed(), gen.speed());
    const double a = models::seidm_acceleration(o, p, q);
    const double b = models::idm_acceleration(o, p);
    if (a != b) worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  return {worst < 1e-12, fmt("max rel err %.3g over 1e6 observations", worst)};
}

Outcome ac4() {
  models::ModelParams p;
  models::RiskParams q;
  const double gap = 60.0, speed = 20.0;
  const double y = p.safe_time_headway * speed / gap;
  const double eps = q.smoothing_coeff * y;
  const auto risk_at = [&](double x) {
    // x = TTC0 * dv / s
    const double dv = x * gap / q.ttc0;
    return models::risk_factor(Observation::make(gap, speed, speed - dv), p, q);
  };

  // A continuous sweep changes by at most L |dx| between samples, with
  // L = 3/2 the largest branch slope (the blend has df/dx = 1/2 + (x - y)/eps).
  // Anything beyond that is a jump.
  const int n = 100'000;
  const double lo = y - 2.0 * eps, hi = y + 2.0 * eps;
  double worst_jump = 0.0;
  double prev_x = lo, prev = risk_at(lo);
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double f = risk_at(x);
    worst_jump =
        std::max(worst_jump, std::abs(f - prev) - 1.5 * std::abs(x - prev_x));
    prev = f;
    prev_x = x;
  }

  // Endpoints: alpha = 0 gives the TH branch, alpha = 1 the TTC branch.
  const auto blend = [](double alpha, double x, double yy) {
    return alpha * x + (1.0 - alpha) * yy;
  };
  const bool exact = blend(0.0, y + eps, y) == y && blend(1.0, y + eps, y) == y + eps &&
                     blend(0.0, y - eps, y) == y && blend(1.0, y - eps, y) == y - eps;
  const double left = std::abs(risk_at(std::nextafter(y - eps, lo)) - y);
  const double right = std::abs(risk_at(std::nextafter(y + eps, hi)) -
                                std::nextafter(y + eps, hi));
  const double edge = std::max(left, right);
  const bool ok = worst_jump <= 1e-9 && exact && edge <= 1e-12;
  return {ok, fmt("max jump %.3g over %d points, boundary mismatch %.3g", worst_jump,
                  n, edge)};
}

Outcome ac5() {
  models::ModelParams p;
  models::RiskParams q;
  oracle::ObservationGen gen(5);
  double worst_idm = -1e300, worst_seidm = -1e300;
  for (int i = 0; i < 100'000; ++i) {
    const double v = gen.uniform(p.desired_speed, 2.0 * p.desired_speed);
    const auto o = Observation::make(gen.gap(), v, gen.speed());
    worst_idm = std::max(worst_idm, models::idm_acceleration(o, p));
    worst_seidm = std::max(worst_seidm, models::seidm_acceleration(o, p, q));
  }
  return {worst_idm <= 0.0 && worst_seidm <= 0.0,
          fmt("max accel IDM %.3g, SEIDM %.3g over 1e5 observations", worst_idm,
              worst_seidm)};
}

Outcome ac6() {
  const auto& idm = flow_runs(ScenarioKind::kI, ModelKind::kIdm);
  const auto& seidm = flow_runs(ScenarioKind::kI, ModelKind::kSeidm);
  const auto mi = scenarios::mean_metrics(idm);
  const auto ms = scenarios::mean_metrics(seidm);
  if (!all_stabilized(idm) || !all_stabilized(seidm) || !mi.stabilization_period ||
      !ms.stabilization_period) {
    return {false, "not every trial stabilized"};
  }
  const double ratio = *ms.stabilization_period / *mi.stabilization_period;
  return {ratio < 0.75, fmt("SEIDM %.1f s / IDM %.1f s = %.3f (< 0.75), %zu trials",
                            *ms.stabilization_period, *mi.stabilization_period,
                            ratio, idm.size())};
}

Outcome ac7() {
  const auto idm = braking_run(ScenarioKind::kII, ModelKind::kIdm);
  const auto seidm = braking_run(ScenarioKind::kII, ModelKind::kSeidm);
  if (idm.followers.size() != 1 || seidm.followers.size() != 1) {
    return {false, "missing follower spacing"};
  }
  const auto& fi = idm.followers[0];
  const auto& fs = seidm.followers[0];
  const bool ok = std::abs(fi.final - 17.96) <= 0.3 &&
                  std::abs(fs.final - 17.45) <= 0.5 && fs.reduction < fi.reduction;
  return {ok, fmt("target %.3f m/s; IDM final %.3f m, SEIDM final %.3f m; "
                  "reduction SEIDM %.2f < IDM %.2f",
                  idm_speed_for_gap(kCalibratedGap), fi.final, fs.final,
                  fs.reduction, fi.reduction)};
}

Outcome ac8() {
  std::string detail;
  bool ok = true;
  for (ModelKind model : {ModelKind::kIdm, ModelKind::kSeidm}) {
    const auto r = braking_run(ScenarioKind::kIII, model);
    if (r.followers.size() != 9) return {false, "expected 9 followers"};
    double lo = 1e300, hi = -1e300;
    for (const auto& f : r.followers) {
      lo = std::min(lo, f.final);
      hi = std::max(hi, f.final);
    }
    ok = ok && hi - lo < 0.1;
    detail += fmt("%s %.3f-%.3f m (spread %.4f) ",
                  std::string(models::to_string(model)).c_str(), lo, hi, hi - lo);
  }
  return {ok, detail};
}

Outcome ac9() {
  const auto& idm = flow_runs(ScenarioKind::kIV, ModelKind::kIdm);
  const auto& seidm = flow_runs(ScenarioKind::kIV, ModelKind::kSeidm);
  const auto mi = scenarios::mean_metrics(idm);
  const auto ms = scenarios::mean_metrics(seidm);
  if (!all_stabilized(idm) || !all_stabilized(seidm) || !mi.stabilization_period ||
      !ms.stabilization_period || !mi.response_time || !ms.response_time) {
    return {false, "not every trial stabilized and responded"};
  }
  const double period = *ms.stabilization_period / *mi.stabilization_period;
  const double response = *ms.response_time / *mi.response_time;
  return {period < 0.8 && response < 0.7,
          fmt("period %.1f/%.1f = %.3f (< 0.8), response %.1f/%.1f = %.3f (< 0.7)",
              *ms.stabilization_period, *mi.stabilization_period, period,
              *ms.response_time, *mi.response_time, response)};
}

Outcome ac10() {
  const auto& pts = sweep();
  bool ok = true;
  std::string why;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& m = pts[i].braking.metrics;
    if (pts[i].braking.status != TrialStatus::kStabilized || !m.braking_duration ||
        !m.peak_decel) {
      return {false, fmt("r=%g did not re-stabilize", pts[i].r)};
    }
    if (i == 0) continue;
    const auto& prev = pts[i - 1];
    const auto& pm = prev.braking.metrics;
    if (*m.braking_duration > *pm.braking_duration) {
      ok = false;
      why += fmt(" duration rises at r=%g;", pts[i].r);
    }
    if (std::abs(*m.peak_decel) < std::abs(*pm.peak_decel)) {
      ok = false;
      why += fmt(" |peak| falls at r=%g;", pts[i].r);
    }
    if (!(pts[i].spacing < prev.spacing)) {
      ok = false;
      why += fmt(" spacing not decreasing at r=%g;", pts[i].r);
    }
    if (!(pts[i].throughput > prev.throughput)) {
      ok = false;
      why += fmt(" throughput not increasing at r=%g;", pts[i].r);
    }
  }
  const auto& first = pts.front().braking.metrics;
  const auto& last = pts.back().braking.metrics;
  return {ok, fmt("duration %.1f -> %.1f s, peak %.3f -> %.3f m/s^2, spacing "
                  "%.2f -> %.2f m",
                  *first.braking_duration, *last.braking_duration,
                  *first.peak_decel, *last.peak_decel, pts.front().spacing,
                  pts.back().spacing) +
                  why};
}

Outcome ac14();

Outcome ac11() {
  for (auto kind : {ScenarioKind::kI, ScenarioKind::kIV}) {
    flow_runs(kind, ModelKind::kIdm);
    flow_runs(kind, ModelKind::kSeidm);
  }
  for (auto kind : {ScenarioKind::kII, ScenarioKind::kIII}) {
    braking_run(kind, ModelKind::kIdm);
    braking_run(kind, ModelKind::kSeidm);
  }
  sweep();
  flow_runs(ScenarioKind::kI, ModelKind::kKrauss);
  flow_runs(ScenarioKind::kI, ModelKind::kDerbelIdm);
  const double cap = kVmax + models::ModelParams{}.max_accel * 0.1;
  const bool ok = g_safety.collisions == 0 && g_safety.failures == 0 &&
                  g_safety.min_speed >= 0.0 && g_safety.max_speed <= cap;
  return {ok, fmt("%zu trials, %zu collisions, %zu failed, speeds in [%.4f, %.4f] "
                  "(cap %.4f m/s)",
                  g_safety.trials, g_safety.collisions, g_safety.failures,
                  g_safety.min_speed, g_safety.max_speed, cap)};
}

Outcome ac12() {
  const auto rows = experiments::fig8_rows(models::ParamSet{});
  double worst = -1e300;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.ttc > 10.0) {
      worst = std::max(worst, r.accel);
      ++n;
    }
  }
  return {n > 0 && worst < 0.25,
          fmt("max accel %.4f m/s^2 over %zu points with TTC > 10 s", worst, n)};
}

// Vehicle-steps per second of one SEIDM lane of n vehicles, best of 3.
double step_rate(std::size_t n) {
  const models::ParamSet params;
  dynamics::StepConfig cfg;
  cfg.t_max = 1e9;
  const double gap = models::equilibrium_gap(ModelKind::kSeidm, kVmax, params);
  std::vector<dynamics::VehicleState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    states[i].position = (gap + dynamics::kDefaultVehicleLength) * static_cast<double>(i);
    states[i].speed = kVmax;
  }
  const std::size_t steps = std::max<std::size_t>(200, 4'000'000 / n);
  double best = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    dynamics::Simulation sim({dynamics::make_lane(states, ModelKind::kSeidm, cfg)},
                             params, cfg);
    const auto start = Clock::now();
    for (std::size_t k = 0; k < steps; ++k) {
      if (sim.step()) return 0.0;
    }
    best = std::max(best, static_cast<double>(n * steps) / seconds_since(start));
  }
  return best;
}

Outcome ac13() {
  std::vector<double> rates;
  for (std::size_t n : {10u, 100u, 1000u}) rates.push_back(step_rate(n));
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  const double spread = *hi / *lo;
  const bool ok = *lo >= 1e6 && spread <= 2.0;
  return {ok, fmt("vehicle-steps/s n=10: %.3g, n=100: %.3g, n=1000: %.3g; "
                  "per-step cost spread %.2fx (<= 2x)",
                  rates[0], rates[1], rates[2], spread)};
}

Outcome ac14() {
  const auto& krauss = flow_runs(ScenarioKind::kI, ModelKind::kKrauss);
  const auto& derbel = flow_runs(ScenarioKind::kI, ModelKind::kDerbelIdm);
  const auto mk = scenarios::mean_metrics(krauss);
  const auto md = scenarios::mean_metrics(derbel);
  const bool krauss_ok = all_stabilized(krauss) && mk.stabilization_spacing &&
                         within_rel(*mk.stabilization_spacing, 44.0, 0.10) &&
                         mk.stabilization_period && *mk.stabilization_period < 60.0;
  const double rear = md.rear_half_speed.value_or(
      std::numeric_limits<double>::quiet_NaN());
  const bool stalled = experiments::is_stalled(md, kVmax);
  std::string krauss_text =
      mk.stabilization_spacing && mk.stabilization_period
          ? fmt("Krauss %.2f m in %.2f s", *mk.stabilization_spacing,
                *mk.stabilization_period)
          : std::string("Krauss did not stabilize");
  return {krauss_ok && stalled,
          krauss_text + fmt(" (%s); Derbel rear-half speed %.2f m/s vs stall "
                            "threshold %.2f m/s (%s)",
                            krauss_ok ? "ok" : "off", rear, 0.1 * kVmax,
                            stalled ? "stalled" : "not stalled")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "equilibrium reproduction", ac1},
      {2, "throughput reproduction", ac2},
      {3, "r = 0 reduces to IDM", ac3},
      {4, "risk-factor continuity", ac4},
      {5, "no acceleration above v0", ac5},
      {6, "scenario I relative speedup", ac6},
      {7, "scenario II cross-check", ac7},
      {8, "scenario III uniformity", ac8},
      {9, "scenario IV relative", ac9},
      {10, "monotone r-trends", ac10},
      {11, "safety", ac11},
      {12, "low-risk acceleration bound", ac12},
      {13, "performance", ac13},
      {14, "anomaly reproduction", ac14},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc == 3 && std::string(argv[1]) == "--only") {
    only = std::atoi(argv[2]);
  } else if (argc != 1) {
    std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
    return 2;
  }
  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("AC%-2d %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL",
                c.name, o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
