#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "saint/agents.hpp"
#include "saint/episode.hpp"

using namespace saint;

namespace {

Scenario short_scenario() {
  Scenario s;
  s.run.episode_duration = 150.0;
  s.run.warmup = 30.0;
  return s;
}

VehicleState car(int id, double x, double v, int lane) {
  VehicleState c;
  c.id = id;
  c.x = x;
  c.v = v;
  c.lane = lane;
  return c;
}

void expect_same_traffic(const EpisodeMetrics& a, const EpisodeMetrics& b) {
  EXPECT_EQ(a.near_collisions, b.near_collisions);
  EXPECT_EQ(a.safety.ac, b.safety.ac);
  EXPECT_EQ(a.mean_speed, b.mean_speed);
  EXPECT_EQ(a.mean_delay, b.mean_delay);
  EXPECT_EQ(a.mean_abs_accel, b.mean_abs_accel);
  EXPECT_EQ(a.mean_sq_jerk, b.mean_sq_jerk);
  EXPECT_EQ(a.completed_trips, b.completed_trips);
}

}  // namespace

TEST(Rewards, Ttc) {
  SafetyTally t;
  t.fp = 3;
  t.fn = 2;
  t.ac = 1;
  EXPECT_EQ(reward_ttc(t), -17.0);
  EXPECT_EQ(reward_ttc(SafetyTally{}), 0.0);
  SafetyTally crash;
  crash.ac = 2;
  EXPECT_EQ(reward_ttc(crash), -20.0);
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    SafetyTally x;
    x.fp = r.uniform_index(20);
    x.fn = r.uniform_index(20);
    x.ac = r.uniform_index(3);
    const double v = reward_ttc(x);
    EXPECT_LE(v, 0.0);
    EXPECT_EQ(v == 0.0, x.fp == 0 && x.fn == 0 && x.ac == 0);
  }
}

TEST(Rewards, AccSafety) {
  EXPECT_NEAR(reward_acc_safety(std::vector<double>{2.0}, 4.0), std::log(0.5), 1e-12);
  EXPECT_EQ(reward_acc_safety(std::vector<double>{kInfinity, kInfinity}, 4.0), 0.0);
  EXPECT_NEAR(reward_acc_safety(std::vector<double>{1.0, 3.0}, 4.0), std::log(0.25) + std::log(0.75), 1e-12);
  EXPECT_NEAR(reward_acc_safety(std::vector<double>{1.0, 3.0}, 4.0), -1.674, 5e-4);
  EXPECT_NEAR(reward_acc_safety(std::vector<double>{0.0}, 4.0), std::log(0.01 / 4.0), 1e-12);
  EXPECT_EQ(reward_acc_safety(std::vector<double>{4.5, 9.0}, 4.0), 0.0);
}

TEST(Rewards, AccSafetyMonotoneInThreshold) {
  Rng r(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> t(10);
    for (auto& x : t) x = r.uniform(0, 3);
    double prev = -1e300;
    for (double star = 10.0; star >= 3.0; star -= 0.5) {
      const double v = reward_acc_safety(t, star);
      EXPECT_GE(v, prev);
      for (double x : t) EXPECT_LE(std::log(std::max(x, 0.01) / star), 0.0);
      prev = v;
    }
  }
}

TEST(Rewards, AccEfficiency) {
  EXPECT_EQ(reward_acc_efficiency(150.0, 1500.0, 8.0), 1.0);
  EXPECT_EQ(reward_acc_efficiency(187.5, 1500.0, 8.0), 1.0);
  EXPECT_EQ(reward_acc_efficiency(200.0, 1500.0, 8.0), -1.0);
  EXPECT_EQ(reward_acc_efficiency(std::nullopt, 1500.0, 8.0), 0.0);
}

TEST(Rewards, AccComfort) {
  EXPECT_EQ(reward_acc_comfort(5.2), -1.0);
  EXPECT_EQ(reward_acc_comfort(-5.2), -1.0);
  EXPECT_EQ(reward_acc_comfort(0.0), 0.0);
  EXPECT_NEAR(reward_acc_comfort(2.6), -0.25, 1e-12);
  EXPECT_NEAR(reward_acc_comfort(3.0), -9.0 / 27.04, 1e-12);
  EXPECT_DOUBLE_EQ(kMaxJerk * kMaxJerk, 27.04);
}

TEST(Rewards, AccTotal) {
  EXPECT_NEAR(reward_acc_total(1.0, -0.693, -0.25), 0.057, 1e-12);
  EXPECT_EQ(reward_acc_total(0, 0, 0), 0.0);
  RewardWeights w;
  w.beta_safety = 0.0;
  EXPECT_EQ(reward_acc_total(1.0, -50.0, -0.25, w), 0.75);
  AgentConfig c;
  c.beta_comfort = 2.0;
  c.alpha_fn = 3.0;
  const RewardWeights from = weights_from(c);
  EXPECT_EQ(from.beta_comfort, 2.0);
  EXPECT_EQ(from.alpha_fn, 3.0);
}

TEST(Actions, DecodersAreBijections) {
  for (int i = 0; i < kTtcActions; ++i) {
    EXPECT_EQ(ttc_star_from_action(i), 0.5 * i);
    EXPECT_EQ(action_from_ttc_star(ttc_star_from_action(i)), i);
  }
  EXPECT_EQ(ttc_star_from_action(20), 10.0);
  for (int i = 0; i < kAccActions; ++i) {
    EXPECT_EQ(gap_from_action(i), i + 1.0);
    EXPECT_EQ(action_from_gap(gap_from_action(i)), i);
  }
}

TEST(Actions, ScriptedGapRule) {
  EXPECT_EQ(scripted_gap(4.0, 2.6, 1.0), 11.0);
  EXPECT_EQ(scripted_gap(1.0, 2.6, 1.0), 3.0);
  EXPECT_EQ(scripted_gap(0.0, 2.6, 1.0), 1.0);
  EXPECT_EQ(scripted_gap(10.0, 2.6, 1.0), 25.0);
  // the chosen gap keeps TTC >= TTC* after one interval of leader braking at b
  for (int k = 1; k <= 9; ++k) {
    const double star = k, g = scripted_gap(star, 2.6, 1.0);
    const double closing = 2.6 * 1.0;
    EXPECT_GE(g / closing, star - 1e-9);
    EXPECT_LT((g - 1.0) / closing, star);
  }
}

TEST(State, EmptyWorld) {
  const Scenario s;
  const WorldState w = make_world(s, std::vector<SpawnEntry>{});
  const AgentState x = encode_state(w, s.geometry, 3.5);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(x[k], 0.0) << k;
  EXPECT_EQ(x[10], 360.0);
  EXPECT_EQ(x[11], 3.5);
  EXPECT_EQ(x[12], kMeanTtcCap);
}

TEST(State, DensityPerKilometer) {
  Scenario s;
  s.geometry.ramp_kind = RampKind::kNone;
  s.geometry.lane_count = 1;
  s.geometry.mainline_length = 1000.0;
  s.demand.ramp_flow = 0;
  WorldState w = make_world(s, std::vector<SpawnEntry>{});
  for (int i = 0; i < 10; ++i) w.lanes[0].push_back(car(i, 900.0 - 50.0 * i, 20.0, 0));
  EXPECT_EQ(encode_state(w, s.geometry, 4.0)[6], 10.0);
}

TEST(State, SyntheticWorldMatchesHandComputation) {
  const Scenario s;
  WorldState w = make_world(s, std::vector<SpawnEntry>{});
  // lane 0: a (front) and b closing on it at 5 m/s with 20 m bumper gap
  VehicleState a = car(1, 800.0, 20.0, 0), b = car(2, 775.0, 25.0, 0);
  a.length = 5.0;
  b.length = 4.0;
  b.is_acc_equipped = b.acc_active = true;
  b.commanded_gap = 12.0;
  b.tau = 0.5;
  b.sigma = 0.0;
  a.sigma = 0.4;
  // lane 1: c ahead of d, d slower (not closing)
  VehicleState c = car(3, 600.0, 30.0, 1), d = car(4, 580.0, 10.0, 1);
  c.sigma = 0.2;
  d.sigma = 0.3;
  // ramp lane: e
  VehicleState e = car(5, 650.0, 15.0, 3);
  e.sigma = 0.5;
  e.max_accel = 2.0;
  w.lanes[0] = {a, b};
  w.lanes[1] = {c, d};
  w.lanes[3] = {e};
  const AgentState x = encode_state(w, s.geometry, 6.0);
  EXPECT_NEAR(x[0], (2.6 * 4 + 2.0) / 5, 1e-12);
  EXPECT_NEAR(x[1], 2.6, 1e-12);
  EXPECT_NEAR(x[2], (1.0 * 4 + 0.5) / 5, 1e-12);
  EXPECT_NEAR(x[3], (0.4 + 0.0 + 0.2 + 0.3 + 0.5) / 5, 1e-12);
  EXPECT_NEAR(x[4], 12.0 / 5, 1e-12);
  EXPECT_NEAR(x[5], (5.0 + 4.0 + 4.5 * 3) / 5, 1e-12);
  EXPECT_NEAR(x[6], 4.0 / (1.5 * 3), 1e-12);
  EXPECT_NEAR(x[7], (20.0 + 25.0 + 30.0 + 10.0) / 4, 1e-12);
  EXPECT_NEAR(x[8], 1.0 / 0.36, 1e-12);
  EXPECT_NEAR(x[9], 15.0, 1e-12);
  EXPECT_EQ(x[10], 360.0);
  EXPECT_EQ(x[11], 6.0);
  EXPECT_NEAR(x[12], 20.0 / 5.0, 1e-12);  // only b is closing
  for (double v : x) EXPECT_TRUE(std::isfinite(v));
}

TEST(Episode, ZeroPenetrationMatchesBaseline) {
  Scenario s = short_scenario();
  s.demand.penetration_rate = 0.0;
  Agents agents = make_agents(s.agents, 4);
  for (System sys : {System::kSaint, System::kFixedTtc, System::kScripted}) {
    EpisodeOptions o;
    o.system = sys;
    o.seed = 11;
    const EpisodeResult r = run_episode(s, &agents, o);
    EpisodeOptions b = o;
    b.system = System::kBase;
    expect_same_traffic(r.metrics, run_episode(s, nullptr, b).metrics);
  }
}

TEST(Episode, EvalIsDeterministicAndLeavesWeightsAlone) {
  const Scenario s = short_scenario();
  Agents agents = make_agents(s.agents, 5);
  const QNetwork ttc = agents.ttc.online(), acc = agents.acc.online();
  const EpsilonSchedule e1 = agents.ttc.schedule(), e2 = agents.acc.schedule();
  EpisodeOptions o;
  o.seed = 12;
  const EpisodeResult a = run_episode(s, &agents, o);
  const EpisodeResult b = run_episode(s, &agents, o);
  expect_same_traffic(a.metrics, b.metrics);
  EXPECT_EQ(a.metrics.safety, b.metrics.safety);
  EXPECT_EQ(a.acc_reward, b.acc_reward);
  EXPECT_EQ(a.ttc_reward, b.ttc_reward);
  EXPECT_EQ(agents.ttc.online(), ttc);
  EXPECT_EQ(agents.acc.online(), acc);
  EXPECT_EQ(agents.ttc.schedule(), e1);
  EXPECT_EQ(agents.acc.schedule(), e2);
  EXPECT_EQ(agents.acc.replay().size(), 0u);
  EXPECT_GT(a.acc_decisions, 100);
  EXPECT_EQ(a.ttc_decisions, 12);  // 30..150 s at 10 s
}

TEST(Episode, PinnedTtcAgentReducesToAblation) {
  const Scenario s = short_scenario();
  Agents agents = make_agents(s.agents, 6);
  // a TTC agent that always answers TTC* = 4 s
  QNetwork& q = agents.ttc.online();
  std::fill(q.params().begin(), q.params().end(), 0.0);
  q.params()[q.bias_offset(q.layers() - 1) + action_from_ttc_star(4.0)] = 1.0;
  EpisodeOptions o;
  o.seed = 13;
  const EpisodeResult saint = run_episode(s, &agents, o);
  o.system = System::kFixedTtc;
  o.fixed_ttc_star = 4.0;
  const EpisodeResult fixed = run_episode(s, &agents, o);
  EXPECT_EQ(saint.acc_reward, fixed.acc_reward);
  EXPECT_EQ(saint.mean_gap, fixed.mean_gap);
  EXPECT_EQ(saint.mean_ttc_star, 4.0);
  expect_same_traffic(saint.metrics, fixed.metrics);
  EXPECT_EQ(saint.metrics.safety, fixed.metrics.safety);
}

TEST(Episode, TrainingFillsReplayAndDecaysEpsilon) {
  const Scenario s = short_scenario();
  Agents agents = make_agents(s.agents, 7);
  EpisodeOptions o;
  o.mode = Mode::kTrain;
  o.seed = 14;
  const EpisodeResult r = run_episode(s, &agents, o);
  EXPECT_EQ(agents.acc.replay().size(), static_cast<std::size_t>(r.acc_decisions));
  EXPECT_EQ(agents.ttc.replay().size(), static_cast<std::size_t>(r.ttc_decisions));
  EXPECT_TRUE(agents.acc.replay().done(agents.acc.replay().size() - 1));
  EXPECT_LT(agents.acc.schedule().value(), 1.0);
  EXPECT_EQ(agents.acc.episodes(), 1);
  EXPECT_EQ(agents.ttc.episodes(), 1);
}

TEST(Episode, AblationNeverTrainsTheTtcAgent) {
  const Scenario s = short_scenario();
  Agents agents = make_agents(s.agents, 8);
  EpisodeOptions o;
  o.mode = Mode::kTrain;
  o.system = System::kFixedTtc;
  o.seed = 15;
  const EpisodeResult r = run_episode(s, &agents, o);
  EXPECT_EQ(r.ttc_decisions, 0);
  EXPECT_EQ(agents.ttc.replay().size(), 0u);
  EXPECT_GT(agents.acc.replay().size(), 0u);
  EXPECT_EQ(r.mean_ttc_star, 4.0);
}

TEST(Episode, BaseNeedsNoAgentsAndLearnedSystemsDo) {
  const Scenario s = short_scenario();
  EpisodeOptions o;
  o.system = System::kBase;
  EXPECT_NO_THROW(run_episode(s, nullptr, o));
  o.system = System::kSaint;
  EXPECT_THROW(run_episode(s, nullptr, o), std::invalid_argument);
  EXPECT_EQ(system_from_string("fixed-ttc"), System::kFixedTtc);
  EXPECT_THROW(system_from_string("zhu"), ConfigError);
}

TEST(Episode, SmokeTrainingImprovesTtcReward) {
  Scenario s = short_scenario();
  s.agents.train_start = 64;
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Agents agents = make_agents(s.agents, seed);
    std::vector<double> rewards;
    for (int ep = 0; ep < 40; ++ep) {
      EpisodeOptions o;
      o.mode = Mode::kTrain;
      o.seed = derive_seed(seed, 1000 + ep);
      rewards.push_back(run_episode(s, &agents, o).ttc_reward);
    }
    double first = 0, last = 0;
    for (int i = 0; i < 10; ++i) {
      first += rewards[i];
      last += rewards[30 + i];
    }
    improved += last > first;
  }
  EXPECT_GE(improved, 7);
}
