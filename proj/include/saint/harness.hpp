#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "saint/episode.hpp"
#include "saint/scenario.hpp"

namespace saint {

// Error with a machine-readable category ("config", "io", "checkpoint",
// "simulation", "usage") used for the CLI exit code.
class HarnessError : public std::runtime_error {
 public:
  HarnessError(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

std::uint64_t training_seed(std::uint64_t base, std::int64_t episode);
std::uint64_t evaluation_seed(std::uint64_t base, int index);

// SAINT_WORKERS if set and positive, otherwise the OpenMP default.
int worker_count();

// ---- training -------------------------------------------------------------

struct RewardRow {
  std::int64_t episode = 0;
  std::uint64_t seed = 0;
  double ttc_reward = 0.0;
  double acc_reward = 0.0;
  double ttc_epsilon = 0.0;
  double acc_epsilon = 0.0;
  double mean_ttc_star = 0.0;
  double mean_gap = 0.0;
  std::int64_t near_collisions = 0;
  double mean_speed = 0.0;
};

std::string reward_csv_header();
std::string reward_csv_row(const RewardRow& row);

struct TrainOptions {
  System system = System::kSaint;  // kSaint or kFixedTtc
  int episodes = 300;
  std::uint64_t seed = 1;
  int checkpoint_every = 10;
};

// Trains in memory for options.episodes episodes numbered from
// first_episode. Episode e uses training_seed(options.seed, e).
std::vector<RewardRow> train_agents(const Scenario& scenario, Agents& agents,
                                    const TrainOptions& options, std::int64_t first_episode = 0,
                                    const std::function<void(const RewardRow&)>& on_episode = {});

struct TrainOutcome {
  std::int64_t first_episode = 0;
  std::int64_t episodes_done = 0;  // total after this call
  std::vector<RewardRow> rows;
};

// Trains into out_dir, resuming from its checkpoints when present: episode
// numbering continues and rewards.csv is appended.
TrainOutcome cmd_train(const Scenario& scenario, const TrainOptions& options,
                       const std::filesystem::path& out_dir);

inline constexpr const char* kTtcCheckpoint = "ttc_agent.ckpt";
inline constexpr const char* kAccCheckpoint = "acc_agent.ckpt";
inline constexpr const char* kRewardCsv = "rewards.csv";

void save_agents(const std::filesystem::path& dir, const Agents& agents, const std::string& meta);
// Returns the metadata string of the ACC checkpoint through `meta`.
Agents load_agents(const std::filesystem::path& dir, std::string* meta = nullptr);

// ---- evaluation sweeps ----------------------------------------------------

enum class SweepVariable { kTtcStarFixed, kPenetration, kMergeFlow, kExitFlow, kUpdateInterval };
std::string to_string(SweepVariable variable);
SweepVariable sweep_variable_from_string(const std::string& name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::kPenetration;
  std::vector<double> values;
  int episodes_per_point = 20;
  std::uint64_t base_seed = 1;
  std::vector<System> systems{System::kSaint, System::kFixedTtc, System::kBase};
};

// Sets the swept quantity on a scenario copy (and the fixed threshold on the
// options). Merge flow needs an on-ramp scenario, exit flow an off-ramp.
void apply_sweep_value(Scenario& scenario, EpisodeOptions& options, SweepVariable variable,
                       double value);

struct EpisodeRecord {
  double value = 0.0;
  System system = System::kBase;
  int seed_index = 0;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
  double mean_ttc_star = 0.0;
  double mean_gap = 0.0;
};

struct PolicySet {
  const Agents* saint = nullptr;
  const Agents* fixed_ttc = nullptr;
};

// Every (value, system, seed index) job runs on its own episode state. Seed
// index i uses evaluation_seed(base_seed, i) for every value and system, so
// systems are compared on identical traffic. Output order is (value, system,
// seed index) regardless of scheduling.
std::vector<EpisodeRecord> run_sweep(const Scenario& scenario, const SweepSpec& spec,
                                     const PolicySet& policies, bool parallel = true);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

struct ResultRow {
  double value = 0.0;
  System system = System::kBase;
  int episodes = 0;
  Summary near_collisions, fp, fn, ac, mean_speed, mean_delay, mean_abs_accel, mean_sq_jerk,
      min_interval_speed, ttc_star, gap;
};

std::vector<ResultRow> aggregate(const std::vector<EpisodeRecord>& records);

// First line of every CSV: "# config_hash=<hex> seeds=<...> <extra>".
std::string csv_comment(const Scenario& scenario, const std::string& seeds,
                        const std::string& extra = {});
void write_episode_csv(std::ostream& os, const std::vector<EpisodeRecord>& records,
                       const std::string& comment, const std::string& variable);
void write_result_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                      const std::string& comment, const std::string& variable);

// Scripted fixed-threshold ACC at each TTC* value.
std::vector<EpisodeRecord> cmd_motivation(const Scenario& scenario,
                                          const std::vector<double>& ttc_values, int episodes,
                                          std::uint64_t base_seed, bool parallel = true);

struct LatencyReport {
  std::vector<double> ms;
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
};

// Greedy SAINT episodes until at least `samples` decisions were timed.
LatencyReport cmd_latency(const Scenario& scenario, const Agents& agents, int samples,
                          std::uint64_t base_seed);

std::string trajectory_csv_header();
std::string trajectory_csv_row(const TrajectoryRow& row);
EpisodeResult cmd_spacetime(const Scenario& scenario, System system, const Agents* agents,
                            std::uint64_t seed);

}  // namespace saint
