#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "saint/rng.hpp"

namespace saint {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a parsed value breaks a model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RampKind { kOnRamp, kOffRamp, kNone };
enum class ArrivalProcess { kPoisson, kUniformHeadway };
enum class Route { kThrough, kExitAtRamp, kMergeFromRamp };
enum class TrainingSchedule { kSimultaneous, kAlternating };

std::string to_string(RampKind kind);
std::string to_string(Route route);

// Lane 0 is the mainline lane adjacent to the ramp. When a ramp exists it is
// lane `lane_count`.
//
// On-ramp: the ramp runs along [J - ramp_length, J] with J the junction
// position; its last accel_lane_length meters form the acceleration lane and
// the ramp ends at J.
// Off-ramp: the ramp leaves at J and runs along [J, J + ramp_length]; vehicles
// may diverge onto it within [J, J + accel_lane_length].
struct RoadGeometry {
  double mainline_length = 1500.0;
  int lane_count = 3;
  RampKind ramp_kind = RampKind::kOnRamp;
  double ramp_length = 360.0;
  double accel_lane_length = 180.0;
  double ramp_junction_position = 700.0;
  double speed_limit = 33.3;
  double ramp_speed_limit = 33.3;

  bool has_ramp() const { return ramp_kind != RampKind::kNone; }
  int ramp_lane() const { return lane_count; }
  int total_lanes() const { return lane_count + (has_ramp() ? 1 : 0); }
  double ramp_start() const;
  double ramp_end() const;
  double merge_zone_start() const;
  double merge_zone_end() const;
  void validate() const;
};

struct DemandSpec {
  double mainline_flow = 1800.0;  // veh/h/lane
  double ramp_flow = 900.0;       // veh/h on the ramp
  double penetration_rate = 0.8;
  ArrivalProcess arrival_process = ArrivalProcess::kPoisson;

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  double episode_duration = 420.0;
  double physics_timestep = 0.1;
  double control_interval = 1.0;
  double min_gap_for_near_collision = 2.5;
  double congestion_speed = 8.0;
  double warmup = 60.0;
  double max_accel = 2.6;
  double max_decel = 2.6;
  double human_tau = 1.0;
  double acc_tau = 0.5;
  double sigma_min = 0.2;
  double sigma_max = 0.5;
  double speed_factor_dev = 0.1;  // desired speed = limit * N(1, dev) clipped to [1-2dev, 1+2dev]
  double min_spawn_gap = 2.5;
  double spawn_speed = 25.0;
  double ramp_spawn_speed = 20.0;
  double lane_change_cooldown = 2.0;
  double lane_change_threshold = 2.0;

  int steps_per_control() const;
  void validate() const;
};

struct AgentConfig {
  double ttc_decision_interval = 10.0;
  bool shared_policy = true;
  // when set, equipped vehicles also brake once their TTC falls below TTC*;
  // off by default so TTC* only reaches the rewards and the FP/FN tally
  bool danger_response = false;
  double alpha_fp = 1.0;
  double alpha_fn = 2.0;
  double alpha_ac = 10.0;
  double beta_efficiency = 1.0;
  double beta_safety = 1.0;
  double beta_comfort = 1.0;
  double ttc_lambda_decay = 0.99985;
  double acc_lambda_decay = 0.9998;
  double epsilon_start = 1.0;
  double epsilon_min = 0.01;
  double gamma = 0.95;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int replay_capacity = 100000;
  int hidden_dim = 30;
  int hidden_layers = 1;
  int train_start = 1000;
  int ttc_train_steps = 10;  // gradient steps per TTC decision
  int acc_train_steps = 1;   // gradient steps per ACC decision
  int target_sync_episodes = 5;
  double ttc_reward_scale = 0.05;
  double acc_reward_scale = 0.1;
  double fixed_ttc_star = 4.0;
  double initial_ttc_star = 4.0;
  double scripted_gap = 10.0;
  TrainingSchedule schedule = TrainingSchedule::kSimultaneous;
  int alternating_block = 10;

  void validate() const;
};

struct Scenario {
  std::string name = "onramp";
  RoadGeometry geometry;
  DemandSpec demand;
  RunConfig run;
  AgentConfig agents;

  void validate() const;
};

Scenario parse_scenario(const std::string& text, const std::string& source_name = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
// Serializes every key so that parse_scenario(to_config_text(s)) == s.
std::string to_config_text(const Scenario& scenario);
// FNV-1a over to_config_text; embedded in CSV headers.
std::uint64_t config_hash(const Scenario& scenario);

struct SpawnEntry {
  double arrival_time;
  int lane;
  bool is_acc_equipped;
  Route route;
  double body_length;
  double sigma;
  double speed_factor;
};

// Arrivals over [0, duration) for every entry lane, sorted by time (ties by
// lane). Body length and driver imperfection are drawn here so that systems
// compared on the same seed see identical vehicles.
std::vector<SpawnEntry> spawn_schedule(const RoadGeometry& geometry, const DemandSpec& demand,
                                       const RunConfig& run, double duration, Rng& rng);

}  // namespace saint
