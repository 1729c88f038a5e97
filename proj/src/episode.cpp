#include "saint/episode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <unordered_map>

#include "saint/world.hpp"

namespace saint {

std::string to_string(System system) {
  switch (system) {
    case System::kSaint:
      return "saint";
    case System::kFixedTtc:
      return "fixed-ttc";
    case System::kBase:
      return "base";
    case System::kScripted:
      return "scripted";
  }
  return "?";
}

System system_from_string(const std::string& name) {
  if (name == "saint") return System::kSaint;
  if (name == "fixed-ttc") return System::kFixedTtc;
  if (name == "base") return System::kBase;
  if (name == "scripted") return System::kScripted;
  throw ConfigError("unknown system '" + name + "' (expected saint, fixed-ttc, base or scripted)");
}

namespace {

DqnConfig common_config(const AgentConfig& c) {
  DqnConfig d;
  d.state_dim = kStateDim;
  d.hidden_dim = c.hidden_dim;
  d.hidden_layers = c.hidden_layers;
  d.gamma = c.gamma;
  d.learning_rate = c.learning_rate;
  d.batch_size = c.batch_size;
  d.replay_capacity = c.replay_capacity;
  d.train_start = c.train_start;
  d.target_sync_episodes = c.target_sync_episodes;
  d.epsilon_start = c.epsilon_start;
  d.epsilon_min = c.epsilon_min;
  return d;
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// One agent's pending (state, action) awaiting its reward.
struct Pending {
  std::optional<AgentState> state;
  int action = 0;
};

}  // namespace

DqnConfig ttc_agent_config(const AgentConfig& c) {
  DqnConfig d = common_config(c);
  d.action_count = kTtcActions;
  d.epsilon_decay = c.ttc_lambda_decay;
  return d;
}

DqnConfig acc_agent_config(const AgentConfig& c) {
  DqnConfig d = common_config(c);
  d.action_count = kAccActions;
  d.epsilon_decay = c.acc_lambda_decay;
  return d;
}

Agents make_agents(const AgentConfig& config, std::uint64_t seed) {
  return {DqnAgent(ttc_agent_config(config), seed, stream::kTtcExplore),
          DqnAgent(acc_agent_config(config), seed, stream::kAccExplore)};
}

EpisodeResult run_episode(const Scenario& s, Agents* agents, const EpisodeOptions& opt) {
  const bool uses_acc_agent = opt.system == System::kSaint || opt.system == System::kFixedTtc;
  const bool uses_ttc_agent = opt.system == System::kSaint;
  if (uses_acc_agent && !agents) throw std::invalid_argument("system needs agents");
  const bool train = opt.mode == Mode::kTrain;
  const bool train_acc = train && opt.train_acc && uses_acc_agent;
  const bool train_ttc = train && opt.train_ttc && uses_ttc_agent;
  const AgentConfig& ac = s.agents;
  const RewardWeights weights = weights_from(ac);
  const RunConfig& run = s.run;
  const RoadGeometry& g = s.geometry;

  WorldState w = make_world(s, opt.seed);
  Rng dawdle(derive_seed(opt.seed, stream::kDawdle));
  EpisodeResult result;
  if (opt.record_trajectory) w.trajectory = &result.trajectory;
  w.acc_enabled = opt.system != System::kBase;
  w.danger_response = ac.danger_response;

  double ttc_star = uses_ttc_agent ? ac.initial_ttc_star : opt.fixed_ttc_star;
  w.ttc_star = ttc_star;
  double gap = opt.system == System::kScripted
                   ? scripted_gap(ttc_star, run.max_decel, run.control_interval)
                   : gap_from_action(action_from_gap(ac.scripted_gap));
  broadcast_gap(w, gap);

  MetricsAccumulator metrics(run.warmup, run.steps_per_control(), run.control_interval);
  WindowTally window;
  SafetyTally tally;
  const int per_control = run.steps_per_control();
  const auto per_ttc = std::max<std::int64_t>(
      1, std::llround(ac.ttc_decision_interval / run.physics_timestep));
  const double max_jerk = (run.max_accel + run.max_decel) / run.control_interval;
  const auto steps = static_cast<std::int64_t>(std::llround(run.episode_duration / run.physics_timestep));

  std::unordered_map<int, double> control_accel;  // accelerations at the previous control tick
  double delay_sum = 0.0;
  int delay_n = 0;
  std::size_t event_cursor = 0, trip_cursor = 0;
  Pending acc_pending, ttc_pending;
  double ttc_star_sum = 0.0, gap_sum = 0.0;
  int ticks = 0;

  auto acc_interval_reward = [&] {
    const std::optional<double> delay =
        delay_n > 0 ? std::optional<double>(delay_sum / delay_n) : std::nullopt;
    const double re = reward_acc_efficiency(delay, g.mainline_length, run.congestion_speed);
    const double rs = reward_acc_safety(segment_ttcs(w), ttc_star);
    double rc = 0.0;
    int nc = 0;
    for (const auto& lane : w.lanes)
      for (const auto& v : lane) {
        const auto it = control_accel.find(v.id);
        if (it == control_accel.end()) continue;
        const double jerk = std::clamp((v.a - it->second) / run.control_interval, -max_jerk, max_jerk);
        rc += reward_acc_comfort(jerk, max_jerk);
        ++nc;
      }
    if (nc > 0) rc /= nc;
    return reward_acc_total(re, rs, rc, weights);
  };

  auto acc_decide = [&](bool done) {
    const auto t0 = Clock::now();
    const AgentState state = encode_state(w, g, ttc_star);
    const double encode_ms = ms_since(t0);
    if (acc_pending.state) {
      const double r = acc_interval_reward();
      result.acc_reward += r;
      if (train_acc) {
        agents->acc.remember(*acc_pending.state, acc_pending.action, ac.acc_reward_scale * r, state, done);
        for (int i = 0; i < ac.acc_train_steps; ++i) agents->acc.learn();
      }
    }
    if (done) return;
    const auto t1 = Clock::now();
    const int a = agents->acc.act(state, train_acc);
    gap = gap_from_action(a);
    broadcast_gap(w, gap);
    metrics.add_latency(encode_ms + ms_since(t1));
    acc_pending = {state, a};
    ++result.acc_decisions;
  };

  auto ttc_decide = [&](bool done) {
    const SafetyTally window_tally = window.close();
    tally += window_tally;
    if (!uses_ttc_agent) return;
    const auto t0 = Clock::now();
    const AgentState state = encode_state(w, g, ttc_star);
    const double encode_ms = ms_since(t0);
    if (ttc_pending.state) {
      const double r = reward_ttc(window_tally, weights);
      result.ttc_reward += r;
      if (train_ttc) {
        agents->ttc.remember(*ttc_pending.state, ttc_pending.action, ac.ttc_reward_scale * r, state, done);
        for (int i = 0; i < ac.ttc_train_steps; ++i) agents->ttc.learn();
      }
    }
    if (done) return;
    const auto t1 = Clock::now();
    const int a = agents->ttc.act(state, train_ttc);
    ttc_star = ttc_star_from_action(a);
    w.ttc_star = ttc_star;
    metrics.add_latency(encode_ms + ms_since(t1));
    ttc_pending = {state, a};
    ++result.ttc_decisions;
  };

  bool closed_ttc = false, closed_acc = false;
  for (std::int64_t k = 0; k < steps; ++k) {
    step(w, s, dawdle);
    const bool last = k + 1 == steps;
    const bool active = w.time >= run.warmup - 1e-9;

    for (const auto& lane : w.lanes)
      for (const auto& v : lane) metrics.observe_vehicle(w.step_index, w.time, v.id, v.v, v.a);
    metrics.end_step(w.step_index, w.time);

    for (; event_cursor < w.events.size(); ++event_cursor) {
      const TimedEvent& e = w.events[event_cursor];
      metrics.observe_event(e, g.lane_count);
      if (!active) continue;
      if (e.kind == EventKind::kNearCollision) {
        window.add_near_collision(e.subject);
        window.add_near_collision_onset();
      } else if (e.kind == EventKind::kActualCollision) {
        window.add_actual_collision();
      }
    }
    for (; trip_cursor < w.trips.size(); ++trip_cursor) {
      const CompletedTrip& t = w.trips[trip_cursor];
      if (!t.mainline_origin) continue;
      delay_sum += t.exit_time - t.spawn_time;
      ++delay_n;
    }
    if (!active) continue;

    for (const auto& lane : w.lanes)
      for (std::size_t i = 1; i < lane.size(); ++i)
        window.add_sample(lane[i].id, compute_ttc(lane[i], lane[i - 1]), ttc_star);

    if (w.step_index % per_ttc == 0) {
      ttc_decide(last);
      closed_ttc = last;
    }
    if (w.step_index % per_control == 0) {
      if (uses_acc_agent) acc_decide(last);
      closed_acc = last;
      ttc_star_sum += ttc_star;
      gap_sum += gap;
      ++ticks;
      control_accel.clear();
      for (const auto& lane : w.lanes)
        for (const auto& v : lane) control_accel[v.id] = v.a;
      delay_sum = 0.0;
      delay_n = 0;
    }
  }

  if (!closed_ttc) ttc_decide(true);
  if (uses_acc_agent && !closed_acc) acc_decide(true);
  if (train_acc) agents->acc.end_episode();
  if (train_ttc) agents->ttc.end_episode();

  metrics.set_safety(tally);
  result.metrics = metrics.finish();
  result.mean_ttc_star = ticks ? ttc_star_sum / ticks : ttc_star;
  result.mean_gap = ticks ? gap_sum / ticks : gap;
  result.events = std::move(w.events);
  return result;
}

}  // namespace saint
