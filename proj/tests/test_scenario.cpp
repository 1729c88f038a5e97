#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "saint/scenario.hpp"

using namespace saint;

namespace {

std::string with(const std::string& section, const std::string& line) {
  return "[" + section + "]\n" + line + "\n";
}

}  // namespace

TEST(Scenario, OnRampDefaultsFromShippedConfig) {
  const Scenario s = load_scenario(std::string(SAINT_CONFIG_DIR) + "/onramp.cfg");
  EXPECT_EQ(s.geometry.mainline_length, 1500.0);
  EXPECT_EQ(s.geometry.lane_count, 3);
  EXPECT_EQ(s.geometry.ramp_kind, RampKind::kOnRamp);
  EXPECT_EQ(s.geometry.ramp_length, 360.0);
  EXPECT_EQ(s.geometry.accel_lane_length, 180.0);
  EXPECT_EQ(s.demand.mainline_flow, 1800.0);
  EXPECT_EQ(s.run.episode_duration, 420.0);
  EXPECT_EQ(s.run.min_gap_for_near_collision, 2.5);
  EXPECT_EQ(s.run.control_interval, 1.0);
}

TEST(Scenario, AllShippedConfigsLoad) {
  for (const char* name : {"onramp", "offramp", "straight"}) {
    const Scenario s = load_scenario(std::string(SAINT_CONFIG_DIR) + "/" + name + ".cfg");
    EXPECT_EQ(s.name, name);
  }
  const Scenario straight = load_scenario(std::string(SAINT_CONFIG_DIR) + "/straight.cfg");
  EXPECT_FALSE(straight.geometry.has_ramp());
  EXPECT_EQ(straight.demand.ramp_flow, 0.0);
}

TEST(Scenario, PenetrationOutOfRangeIsValidationError) {
  EXPECT_THROW(parse_scenario(with("demand", "penetration_rate = 1.3")), ValidationError);
}

TEST(Scenario, StraightHighwayIsValid) {
  const Scenario s =
      parse_scenario(with("geometry", "ramp_kind = none") + with("demand", "ramp_flow = 0"));
  EXPECT_EQ(s.geometry.total_lanes(), 3);
}

TEST(Scenario, UnknownKeyNamesLine) {
  try {
    parse_scenario("[run]\nseed = 3\nbogus = 1\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("run.bogus"), std::string::npos);
  }
}

TEST(Scenario, BadValueAndSectionErrors) {
  EXPECT_THROW(parse_scenario(with("run", "episode_duration = abc")), ConfigError);
  EXPECT_THROW(parse_scenario(with("nope", "x = 1")), ConfigError);
  EXPECT_THROW(parse_scenario("seed = 1\n"), ConfigError);
  EXPECT_THROW(parse_scenario(with("geometry", "ramp_kind = roundabout")), ConfigError);
}

TEST(Scenario, InvariantViolations) {
  EXPECT_THROW(parse_scenario(with("run", "control_interval = 0.25\nphysics_timestep = 0.1")),
               ValidationError);
  EXPECT_THROW(parse_scenario(with("geometry", "accel_lane_length = 400")), ValidationError);
  EXPECT_THROW(parse_scenario(with("geometry", "ramp_junction_position = 1600")), ValidationError);
  EXPECT_THROW(parse_scenario(with("geometry", "lane_count = 0")), ValidationError);
  EXPECT_THROW(parse_scenario(with("demand", "mainline_flow = -1")), ValidationError);
}

TEST(Scenario, ConfigTextRoundTrip) {
  Scenario s;
  s.demand.ramp_flow = 1234.5;
  s.run.seed = 99;
  s.agents.hidden_layers = 2;
  s.run.physics_timestep = 0.05;
  const Scenario back = parse_scenario(to_config_text(s));
  EXPECT_EQ(to_config_text(back), to_config_text(s));
  EXPECT_EQ(config_hash(back), config_hash(s));
  s.demand.ramp_flow = 1234.0;
  EXPECT_NE(config_hash(back), config_hash(s));
}

TEST(SpawnSchedule, SortedAndDeterministic) {
  Scenario s;
  Rng a(5), b(5);
  const auto x = spawn_schedule(s.geometry, s.demand, s.run, 420.0, a);
  const auto y = spawn_schedule(s.geometry, s.demand, s.run, 420.0, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].arrival_time, y[i].arrival_time);
    EXPECT_EQ(x[i].lane, y[i].lane);
    EXPECT_EQ(x[i].is_acc_equipped, y[i].is_acc_equipped);
    EXPECT_EQ(x[i].body_length, y[i].body_length);
    EXPECT_EQ(x[i].sigma, y[i].sigma);
    if (i > 0) {
      EXPECT_LE(x[i - 1].arrival_time, x[i].arrival_time);
    }
    EXPECT_GE(x[i].body_length, 4.0);
    EXPECT_LE(x[i].body_length, 5.0);
  }
}

TEST(SpawnSchedule, ZeroFlowIsEmpty) {
  Scenario s;
  s.demand.mainline_flow = 0;
  s.demand.ramp_flow = 0;
  Rng r(1);
  EXPECT_TRUE(spawn_schedule(s.geometry, s.demand, s.run, 420.0, r).empty());
}

TEST(SpawnSchedule, FullPenetrationEquipsEveryone) {
  Scenario s;
  s.demand.penetration_rate = 1.0;
  Rng r(2);
  const auto sched = spawn_schedule(s.geometry, s.demand, s.run, 420.0, r);
  ASSERT_FALSE(sched.empty());
  for (const auto& e : sched) EXPECT_TRUE(e.is_acc_equipped);
}

TEST(SpawnSchedule, MonteCarloCountsAndPenetration) {
  // 1800 veh/h/lane over 420 s on 3 lanes: E[count] = 630, Poisson variance = mean
  Scenario s;
  s.geometry.ramp_kind = RampKind::kNone;
  s.demand.ramp_flow = 0;
  s.demand.penetration_rate = 0.3;
  const int seeds = 1000;
  double total = 0.0, per_lane0 = 0.0, equipped = 0.0;
  for (int k = 0; k < seeds; ++k) {
    Rng r(derive_seed(77, k));
    const auto sched = spawn_schedule(s.geometry, s.demand, s.run, 420.0, r);
    total += sched.size();
    for (const auto& e : sched) {
      per_lane0 += e.lane == 0;
      equipped += e.is_acc_equipped;
    }
  }
  const double expected = 1800.0 * 420.0 / 3600.0 * 3;
  const double mean = total / seeds;
  EXPECT_NEAR(mean, expected, 3.0 * std::sqrt(expected / seeds));
  EXPECT_NEAR(per_lane0 / seeds, expected / 3, 3.0 * std::sqrt(expected / 3 / seeds));
  const double p = equipped / total;
  EXPECT_NEAR(p, 0.3, 3.0 * std::sqrt(0.3 * 0.7 / total));
}

TEST(SpawnSchedule, OffRampFlagsExitsOnAllLanes) {
  Scenario s;
  s.geometry.ramp_kind = RampKind::kOffRamp;
  s.geometry.ramp_junction_position = 1000;
  s.demand.ramp_flow = 900;
  Rng r(3);
  const auto sched = spawn_schedule(s.geometry, s.demand, s.run, 420.0, r);
  int exits[3] = {0, 0, 0};
  for (const auto& e : sched) {
    EXPECT_LT(e.lane, 3);
    if (e.route == Route::kExitAtRamp) ++exits[e.lane];
  }
  for (int n : exits) EXPECT_GT(n, 0);
}
