#include "saint/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace saint {

std::string to_string(RampKind kind) {
  switch (kind) {
    case RampKind::kOnRamp:
      return "on_ramp";
    case RampKind::kOffRamp:
      return "off_ramp";
    case RampKind::kNone:
      return "none";
  }
  return "none";
}

std::string to_string(Route route) {
  switch (route) {
    case Route::kThrough:
      return "through";
    case Route::kExitAtRamp:
      return "exit_at_ramp";
    case Route::kMergeFromRamp:
      return "merge_from_ramp";
  }
  return "through";
}

double RoadGeometry::ramp_start() const {
  return ramp_kind == RampKind::kOnRamp ? ramp_junction_position - ramp_length
                                         : ramp_junction_position;
}

double RoadGeometry::ramp_end() const {
  return ramp_kind == RampKind::kOnRamp ? ramp_junction_position
                                         : ramp_junction_position + ramp_length;
}

double RoadGeometry::merge_zone_start() const {
  return ramp_kind == RampKind::kOnRamp ? ramp_junction_position - accel_lane_length
                                         : ramp_junction_position;
}

double RoadGeometry::merge_zone_end() const {
  return ramp_kind == RampKind::kOnRamp ? ramp_junction_position
                                         : ramp_junction_position + accel_lane_length;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void RoadGeometry::validate() const {
  require(mainline_length > 0, "geometry.mainline_length must be > 0");
  require(lane_count >= 1, "geometry.lane_count must be >= 1");
  require(speed_limit > 0 && ramp_speed_limit > 0, "geometry speed limits must be > 0");
  if (has_ramp()) {
    require(ramp_junction_position > 0 && ramp_junction_position < mainline_length,
            "geometry.ramp_junction_position must lie strictly inside the mainline");
    require(ramp_length > 0, "geometry.ramp_length must be > 0 when a ramp exists");
    require(accel_lane_length > 0, "geometry.accel_lane_length must be > 0 when a ramp exists");
  }
  require(accel_lane_length <= ramp_length, "geometry.accel_lane_length must be <= ramp_length");
  if (ramp_kind == RampKind::kOnRamp) {
    require(ramp_junction_position >= ramp_length,
            "geometry: on-ramp must start at or after the segment start");
  }
  if (ramp_kind == RampKind::kOffRamp) {
    require(ramp_junction_position + accel_lane_length <= mainline_length,
            "geometry: off-ramp diverge zone must end inside the segment");
  }
}

void DemandSpec::validate() const {
  require(mainline_flow >= 0, "demand.mainline_flow must be >= 0");
  require(ramp_flow >= 0, "demand.ramp_flow must be >= 0");
  require(penetration_rate >= 0 && penetration_rate <= 1,
          "demand.penetration_rate must be in [0, 1]");
}

int RunConfig::steps_per_control() const {
  return static_cast<int>(std::lround(control_interval / physics_timestep));
}

void RunConfig::validate() const {
  require(physics_timestep > 0, "run.physics_timestep must be > 0");
  require(control_interval >= physics_timestep, "run.control_interval must be >= physics_timestep");
  const double ratio = control_interval / physics_timestep;
  require(std::abs(ratio - std::round(ratio)) < 1e-9,
          "run.control_interval must be an integer multiple of run.physics_timestep");
  require(episode_duration > 0, "run.episode_duration must be > 0");
  require(warmup >= 0 && warmup < episode_duration, "run.warmup must be in [0, episode_duration)");
  require(min_gap_for_near_collision >= 0, "run.min_gap_for_near_collision must be >= 0");
  require(congestion_speed > 0, "run.congestion_speed must be > 0");
  require(max_accel > 0 && max_decel > 0, "run.max_accel and run.max_decel must be > 0");
  require(human_tau > 0 && acc_tau > 0, "run tau values must be > 0");
  require(sigma_min >= 0 && sigma_max <= 1 && sigma_min <= sigma_max,
          "run.sigma_min/sigma_max must satisfy 0 <= min <= max <= 1");
  require(speed_factor_dev >= 0 && speed_factor_dev < 0.5, "run.speed_factor_dev must be in [0, 0.5)");
  require(min_spawn_gap >= 0, "run.min_spawn_gap must be >= 0");
  require(spawn_speed >= 0 && ramp_spawn_speed >= 0, "run spawn speeds must be >= 0");
  require(lane_change_cooldown >= 0, "run.lane_change_cooldown must be >= 0");
}

void AgentConfig::validate() const {
  require(ttc_decision_interval > 0, "agents.ttc_decision_interval must be > 0");
  require(alpha_fp >= 0 && alpha_fn >= 0 && alpha_ac >= 0, "agents alpha weights must be >= 0");
  require(beta_efficiency >= 0 && beta_safety >= 0 && beta_comfort >= 0,
          "agents beta weights must be >= 0");
  require(ttc_lambda_decay > 0 && ttc_lambda_decay <= 1 && acc_lambda_decay > 0 &&
              acc_lambda_decay <= 1,
          "agents lambda_decay must be in (0, 1]");
  require(epsilon_min >= 0 && epsilon_min <= epsilon_start && epsilon_start <= 1,
          "agents epsilon bounds must satisfy 0 <= min <= start <= 1");
  require(gamma >= 0 && gamma <= 1, "agents.gamma must be in [0, 1]");
  require(learning_rate > 0, "agents.learning_rate must be > 0");
  require(batch_size >= 1, "agents.batch_size must be >= 1");
  require(replay_capacity >= batch_size, "agents.replay_capacity must be >= batch_size");
  require(hidden_dim >= 1 && hidden_layers >= 1, "agents hidden sizes must be >= 1");
  require(train_start >= batch_size, "agents.train_start must be >= batch_size");
  require(ttc_train_steps >= 0 && acc_train_steps >= 0, "agents train steps must be >= 0");
  require(target_sync_episodes >= 1, "agents.target_sync_episodes must be >= 1");
  require(ttc_reward_scale > 0 && acc_reward_scale > 0, "agents reward scales must be > 0");
  require(fixed_ttc_star >= 0 && fixed_ttc_star <= 10, "agents.fixed_ttc_star must be in [0, 10]");
  require(initial_ttc_star >= 0 && initial_ttc_star <= 10,
          "agents.initial_ttc_star must be in [0, 10]");
  require(scripted_gap >= 1 && scripted_gap <= 25, "agents.scripted_gap must be in [1, 25]");
  require(alternating_block >= 1, "agents.alternating_block must be >= 1");
}

void Scenario::validate() const {
  geometry.validate();
  demand.validate();
  run.validate();
  agents.validate();
  require(geometry.has_ramp() || demand.ramp_flow == 0,
          "demand.ramp_flow must be 0 when geometry.ramp_kind = none");
}

namespace {

struct Field {
  std::function<void(Scenario&, const std::string&)> set;
  std::function<std::string(const Scenario&)> get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double out = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

std::int64_t parse_int(const std::string& v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("not an integer");
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("not an unsigned integer");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean");
}

// shortest text that parses back to the same double
std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

#define SAINT_DOUBLE(sec, member)                                                          \
  {                                                                                        \
    #sec "." #member, Field {                                                              \
      [](Scenario& s, const std::string& v) { s.sec.member = parse_double(v); },           \
          [](const Scenario& s) { return fmt_double(s.sec.member); }                       \
    }                                                                                      \
  }
#define SAINT_INT(sec, member)                                                             \
  {                                                                                        \
    #sec "." #member, Field {                                                              \
      [](Scenario& s, const std::string& v) {                                              \
        s.sec.member = static_cast<decltype(s.sec.member)>(parse_int(v));                  \
      },                                                                                   \
          [](const Scenario& s) { return std::to_string(s.sec.member); }                   \
    }                                                                                      \
  }

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = {
      SAINT_DOUBLE(geometry, mainline_length),
      SAINT_INT(geometry, lane_count),
      {"geometry.ramp_kind",
       {[](Scenario& s, const std::string& v) {
          if (v == "on_ramp") s.geometry.ramp_kind = RampKind::kOnRamp;
          else if (v == "off_ramp") s.geometry.ramp_kind = RampKind::kOffRamp;
          else if (v == "none") s.geometry.ramp_kind = RampKind::kNone;
          else throw std::invalid_argument("expected on_ramp, off_ramp or none");
        },
        [](const Scenario& s) { return to_string(s.geometry.ramp_kind); }}},
      SAINT_DOUBLE(geometry, ramp_length),
      SAINT_DOUBLE(geometry, accel_lane_length),
      SAINT_DOUBLE(geometry, ramp_junction_position),
      SAINT_DOUBLE(geometry, speed_limit),
      SAINT_DOUBLE(geometry, ramp_speed_limit),
      SAINT_DOUBLE(demand, mainline_flow),
      SAINT_DOUBLE(demand, ramp_flow),
      SAINT_DOUBLE(demand, penetration_rate),
      {"demand.arrival_process",
       {[](Scenario& s, const std::string& v) {
          if (v == "poisson") s.demand.arrival_process = ArrivalProcess::kPoisson;
          else if (v == "uniform_headway") s.demand.arrival_process = ArrivalProcess::kUniformHeadway;
          else throw std::invalid_argument("expected poisson or uniform_headway");
        },
        [](const Scenario& s) {
          return std::string(s.demand.arrival_process == ArrivalProcess::kPoisson ? "poisson"
                                                                                  : "uniform_headway");
        }}},
      {"run.seed",
       {[](Scenario& s, const std::string& v) { s.run.seed = parse_u64(v); },
        [](const Scenario& s) { return std::to_string(s.run.seed); }}},
      SAINT_DOUBLE(run, episode_duration),
      SAINT_DOUBLE(run, physics_timestep),
      SAINT_DOUBLE(run, control_interval),
      SAINT_DOUBLE(run, min_gap_for_near_collision),
      SAINT_DOUBLE(run, congestion_speed),
      SAINT_DOUBLE(run, warmup),
      SAINT_DOUBLE(run, max_accel),
      SAINT_DOUBLE(run, max_decel),
      SAINT_DOUBLE(run, human_tau),
      SAINT_DOUBLE(run, acc_tau),
      SAINT_DOUBLE(run, sigma_min),
      SAINT_DOUBLE(run, sigma_max),
      SAINT_DOUBLE(run, speed_factor_dev),
      SAINT_DOUBLE(run, min_spawn_gap),
      SAINT_DOUBLE(run, spawn_speed),
      SAINT_DOUBLE(run, ramp_spawn_speed),
      SAINT_DOUBLE(run, lane_change_cooldown),
      SAINT_DOUBLE(run, lane_change_threshold),
      SAINT_DOUBLE(agents, ttc_decision_interval),
      {"agents.shared_policy",
       {[](Scenario& s, const std::string& v) { s.agents.shared_policy = parse_bool(v); },
        [](const Scenario& s) { return std::string(s.agents.shared_policy ? "true" : "false"); }}},
      {"agents.danger_response",
       {[](Scenario& s, const std::string& v) { s.agents.danger_response = parse_bool(v); },
        [](const Scenario& s) { return std::string(s.agents.danger_response ? "true" : "false"); }}},
      SAINT_DOUBLE(agents, alpha_fp),
      SAINT_DOUBLE(agents, alpha_fn),
      SAINT_DOUBLE(agents, alpha_ac),
      SAINT_DOUBLE(agents, beta_efficiency),
      SAINT_DOUBLE(agents, beta_safety),
      SAINT_DOUBLE(agents, beta_comfort),
      SAINT_DOUBLE(agents, ttc_lambda_decay),
      SAINT_DOUBLE(agents, acc_lambda_decay),
      SAINT_DOUBLE(agents, epsilon_start),
      SAINT_DOUBLE(agents, epsilon_min),
      SAINT_DOUBLE(agents, gamma),
      SAINT_DOUBLE(agents, learning_rate),
      SAINT_INT(agents, batch_size),
      SAINT_INT(agents, replay_capacity),
      SAINT_INT(agents, hidden_dim),
      SAINT_INT(agents, hidden_layers),
      SAINT_INT(agents, train_start),
      SAINT_INT(agents, ttc_train_steps),
      SAINT_INT(agents, acc_train_steps),
      SAINT_INT(agents, target_sync_episodes),
      SAINT_DOUBLE(agents, ttc_reward_scale),
      SAINT_DOUBLE(agents, acc_reward_scale),
      SAINT_DOUBLE(agents, fixed_ttc_star),
      SAINT_DOUBLE(agents, initial_ttc_star),
      SAINT_DOUBLE(agents, scripted_gap),
      {"agents.schedule",
       {[](Scenario& s, const std::string& v) {
          if (v == "simultaneous") s.agents.schedule = TrainingSchedule::kSimultaneous;
          else if (v == "alternating") s.agents.schedule = TrainingSchedule::kAlternating;
          else throw std::invalid_argument("expected simultaneous or alternating");
        },
        [](const Scenario& s) {
          return std::string(s.agents.schedule == TrainingSchedule::kSimultaneous ? "simultaneous"
                                                                                  : "alternating");
        }}},
      SAINT_INT(agents, alternating_block),
  };
  return table;
}

#undef SAINT_DOUBLE
#undef SAINT_INT

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source_name) {
  Scenario s;
  const auto& table = field_table();
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  auto where = [&] { return source_name + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find_first_of("#;")));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section == "scenario") continue;
      if (section != "geometry" && section != "demand" && section != "run" && section != "agents")
        throw ConfigError(where() + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) throw ConfigError(where() + "key '" + key + "' outside of any section");
    if (section == "scenario") {
      if (key != "name") throw ConfigError(where() + "unknown key 'scenario." + key + "'");
      s.name = value;
      continue;
    }
    const std::string full = section + "." + key;
    const auto it = table.find(full);
    if (it == table.end()) throw ConfigError(where() + "unknown key '" + full + "'");
    try {
      it->second.set(s, value);
    } catch (const std::exception& e) {
      throw ConfigError(where() + "bad value '" + value + "' for '" + full + "': " + e.what());
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string to_config_text(const Scenario& scenario) {
  std::ostringstream os;
  os << "[scenario]\nname = " << scenario.name << "\n";
  std::string current;
  for (const auto& [key, field] : field_table()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != current) {
      os << "\n[" << sec << "]\n";
      current = sec;
    }
    os << key.substr(dot + 1) << " = " << field.get(scenario) << "\n";
  }
  return os.str();
}

std::uint64_t config_hash(const Scenario& scenario) {
  const std::string text = to_config_text(scenario);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<SpawnEntry> spawn_schedule(const RoadGeometry& geometry, const DemandSpec& demand,
                                       const RunConfig& run, double duration, Rng& rng) {
  std::vector<SpawnEntry> out;
  if (!(duration > 0)) return out;

  const double exit_prob =
      geometry.ramp_kind == RampKind::kOffRamp && demand.mainline_flow > 0
          ? std::min(1.0, demand.ramp_flow / (demand.mainline_flow * geometry.lane_count))
          : 0.0;

  auto arrivals = [&](double flow, int lane, Route base_route) {
    if (flow <= 0) return;
    const double rate = flow / 3600.0;
    double t = demand.arrival_process == ArrivalProcess::kPoisson ? rng.exponential(rate)
                                                                  : rng.uniform() / rate;
    while (t < duration) {
      SpawnEntry e{};
      e.arrival_time = t;
      e.lane = lane;
      e.is_acc_equipped = rng.bernoulli(demand.penetration_rate);
      e.route = base_route;
      if (base_route == Route::kThrough && exit_prob > 0 && rng.bernoulli(exit_prob))
        e.route = Route::kExitAtRamp;
      e.body_length = rng.uniform(4.0, 5.0);
      e.sigma = rng.uniform(run.sigma_min, run.sigma_max);
      e.speed_factor = std::clamp(rng.normal(1.0, run.speed_factor_dev),
                                  1.0 - 2.0 * run.speed_factor_dev, 1.0 + 2.0 * run.speed_factor_dev);
      out.push_back(e);
      t += demand.arrival_process == ArrivalProcess::kPoisson ? rng.exponential(rate) : 1.0 / rate;
    }
  };

  for (int lane = 0; lane < geometry.lane_count; ++lane)
    arrivals(demand.mainline_flow, lane, Route::kThrough);
  if (geometry.ramp_kind == RampKind::kOnRamp)
    arrivals(demand.ramp_flow, geometry.ramp_lane(), Route::kMergeFromRamp);

  std::stable_sort(out.begin(), out.end(), [](const SpawnEntry& a, const SpawnEntry& b) {
    return a.arrival_time < b.arrival_time;
  });
  return out;
}

}  // namespace saint
