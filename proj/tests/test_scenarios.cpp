#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "seidm/models.hpp"
#include "seidm/scenarios.hpp"

namespace {

using namespace seidm;
using namespace seidm::scenarios;
using models::ModelKind;

const double kVmax = kmh_to_mps(95.0);

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, 0, 0), derive_seed(1, 0, 0));
  std::set<std::uint64_t> seen;
  for (std::size_t t = 0; t < 20; ++t) {
    for (std::size_t l = 0; l < 2; ++l) seen.insert(derive_seed(1, t, l));
  }
  EXPECT_EQ(seen.size(), 40u);
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
}

TEST(Seeds, Uniform01InUnitInterval) {
  std::mt19937_64 rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_LT(lo, 1e-3);
  EXPECT_GT(hi, 1.0 - 1e-3);
}

TEST(ScenarioI, InitialSpeedsAndGaps) {
  const auto cfg = ScenarioConfig::defaults(ScenarioKind::kI);
  const auto lanes = build_scenario_I(cfg, 3);
  ASSERT_EQ(lanes.size(), 2u);
  for (const auto& lane : lanes) {
    ASSERT_EQ(lane.vehicles.size(), 40u);
    for (std::size_t i = 0; i < lane.vehicles.size(); ++i) {
      const double v = lane.vehicles[i].state.speed;
      EXPECT_GE(v, 0.8 * kVmax);
      EXPECT_LE(v, kVmax);
      if (i + 1 < lane.vehicles.size()) {
        EXPECT_NEAR(lane.gap(i), models::desired_gap(v, 0.0, cfg.params.idm),
                    1e-9);
      }
    }
  }
  // Reproducible per trial, different across trials.
  const auto again = build_scenario_I(cfg, 3);
  EXPECT_EQ(again[1].vehicles[5].state.speed, lanes[1].vehicles[5].state.speed);
  const auto other = build_scenario_I(cfg, 4);
  EXPECT_NE(other[1].vehicles[5].state.speed, lanes[1].vehicles[5].state.speed);
}

TEST(ScenarioI, SharedSeedsAcrossModels) {
  auto a = ScenarioConfig::defaults(ScenarioKind::kI);
  auto b = a;
  b.model = ModelKind::kIdm;
  const auto la = build_scenario_I(a, 0);
  const auto lb = build_scenario_I(b, 0);
  for (std::size_t i = 0; i < la[0].vehicles.size(); ++i) {
    EXPECT_EQ(la[0].vehicles[i].state.speed, lb[0].vehicles[i].state.speed);
  }
}

TEST(ScenarioII, PlatoonAtEquilibrium) {
  auto cfg = ScenarioConfig::defaults(ScenarioKind::kII);
  cfg.model = ModelKind::kIdm;
  const auto lane = build_scenario_II(cfg);
  ASSERT_EQ(lane.vehicles.size(), 2u);
  EXPECT_NEAR(lane.gap(0),
              models::idm_equilibrium_gap_closed_form(kVmax, cfg.params.idm),
              1e-9);
  ASSERT_TRUE(lane.lead_profile);
}

TEST(ScenarioII, SeidmKeepsMoreMarginThanIdm) {
  auto cfg = ScenarioConfig::defaults(ScenarioKind::kII);
  cfg.model = ModelKind::kIdm;
  const auto idm = run_trial(cfg, 0);
  cfg.model = ModelKind::kSeidm;
  const auto seidm = run_trial(cfg, 0);
  ASSERT_EQ(idm.status, TrialStatus::kStabilized);
  ASSERT_EQ(seidm.status, TrialStatus::kStabilized);
  ASSERT_EQ(idm.followers.size(), 1u);
  EXPECT_LT(seidm.followers[0].reduction, idm.followers[0].reduction);
  EXPECT_LT(*seidm.metrics.peak_decel, *idm.metrics.peak_decel);
}

TEST(ScenarioIII, FollowersOrderedRearFirst) {
  auto cfg = ScenarioConfig::defaults(ScenarioKind::kIII);
  const auto r = run_trial(cfg, 0);
  ASSERT_EQ(r.status, TrialStatus::kStabilized);
  ASSERT_EQ(r.followers.size(), 9u);
  for (std::size_t i = 0; i < r.followers.size(); ++i) {
    EXPECT_EQ(r.followers[i].id, i);
  }
}

TEST(ScenarioIV, OneInsertionPerLane) {
  const auto cfg = ScenarioConfig::defaults(ScenarioKind::kIV);
  const auto setup = build_scenario_IV(cfg, 0);
  ASSERT_EQ(setup.insertions.size(), cfg.lanes);
  for (std::size_t l = 0; l < cfg.lanes; ++l) {
    const auto& e = setup.insertions[l];
    EXPECT_EQ(e.lane, l);
    EXPECT_DOUBLE_EQ(e.time, cfg.insert_time);
    EXPECT_LT(e.slot + 1, setup.lanes[l].vehicles.size());
  }
}

TEST(Validation, ShapesEnforced) {
  auto cfg = ScenarioConfig::defaults(ScenarioKind::kII);
  cfg.vehicles_per_lane = 3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ScenarioConfig::defaults(ScenarioKind::kIII);
  cfg.lanes = 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_scenario_kind("III"), ScenarioKind::kIII);
  EXPECT_FALSE(parse_scenario_kind("V"));
}

TEST(RunTrials, FailuresAreReportedNotThrown) {
  auto cfg = ScenarioConfig::defaults(ScenarioKind::kII);
  cfg.model = ModelKind::kKrauss;
  cfg.params.variant.krauss_reaction = -1.0;
  const auto results = run_trials(cfg);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].status, TrialStatus::kFailed);
  EXPECT_FALSE(results[0].note.empty());
}

TEST(RunTrials, IndependentOfWorkerCount) {
  auto cfg = ScenarioConfig::defaults(ScenarioKind::kI);
  cfg.vehicles_per_lane = 6;
  cfg.trials = 4;
  cfg.step.t_max = 200.0;
  cfg.workers = 1;
  const auto serial = run_trials(cfg);
  cfg.workers = 3;
  const auto parallel = run_trials(cfg);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].trial, i);
    EXPECT_EQ(serial[i].status, parallel[i].status);
    EXPECT_EQ(serial[i].metrics.stabilization_period,
              parallel[i].metrics.stabilization_period);
    EXPECT_EQ(serial[i].metrics.rear_half_speed,
              parallel[i].metrics.rear_half_speed);
  }
}

}  // namespace
