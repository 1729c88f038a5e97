#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saint/agents.hpp"
#include "saint/dqn.hpp"
#include "saint/metrics.hpp"
#include "saint/scenario.hpp"

namespace saint {

// kSaint: both agents. kFixedTtc: ACC agent with TTC* pinned (the agent
// ablation). kBase: no equipped behaviour at all. kScripted: fixed TTC* and
// the scripted gap rule, no learning.
enum class System { kSaint, kFixedTtc, kBase, kScripted };
enum class Mode { kTrain, kEval };

std::string to_string(System system);
System system_from_string(const std::string& name);  // throws ConfigError

struct Agents {
  DqnAgent ttc;
  DqnAgent acc;
};

DqnConfig ttc_agent_config(const AgentConfig& config);
DqnConfig acc_agent_config(const AgentConfig& config);
Agents make_agents(const AgentConfig& config, std::uint64_t seed);

struct EpisodeOptions {
  System system = System::kSaint;
  Mode mode = Mode::kEval;
  std::uint64_t seed = 1;
  double fixed_ttc_star = 4.0;  // kFixedTtc, kScripted, and the kBase tally
  bool train_ttc = true;        // train mode only
  bool train_acc = true;
  bool record_trajectory = false;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  double ttc_reward = 0.0;  // unscaled sums over the episode
  double acc_reward = 0.0;
  int ttc_decisions = 0;
  int acc_decisions = 0;
  double mean_ttc_star = 0.0;
  double mean_gap = 0.0;
  std::vector<TimedEvent> events;
  std::vector<TrajectoryRow> trajectory;
};

// Runs one episode. `agents` may be null for kBase and kScripted. In eval
// mode actions are greedy and no network, replay or schedule state changes.
EpisodeResult run_episode(const Scenario& scenario, Agents* agents, const EpisodeOptions& options);

}  // namespace saint
