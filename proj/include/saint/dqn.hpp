#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "saint/qnetwork.hpp"
#include "saint/rng.hpp"

namespace saint {

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// Fixed-capacity ring of transitions stored in flat arrays.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::size_t capacity, std::size_t state_dim);

  void push(const Transition& t);
  void push(std::span<const double> state, int action, double reward,
            std::span<const double> next_state, bool done);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t state_dim() const { return dim_; }

  // Uniform draw of n stored indices, with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Transition at(std::size_t index) const;

  std::span<const double> state(std::size_t i) const { return {&states_[i * dim_], dim_}; }
  std::span<const double> next_state(std::size_t i) const { return {&next_[i * dim_], dim_}; }
  int action(std::size_t i) const { return actions_[i]; }
  double reward(std::size_t i) const { return rewards_[i]; }
  bool done(std::size_t i) const { return dones_[i] != 0; }
  std::size_t head() const { return head_; }

  bool operator==(const ReplayBuffer&) const = default;

 private:
  friend struct CheckpointAccess;
  std::size_t capacity_ = 0;
  std::size_t dim_ = 0;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<double> states_, next_, rewards_;
  std::vector<int> actions_;
  std::vector<std::uint8_t> dones_;
};

// epsilon after k selections = max(start * decay^k, minimum).
struct EpsilonSchedule {
  double start = 1.0;
  double minimum = 0.01;
  double decay = 0.99985;
  std::int64_t steps = 0;

  double value() const;
  void advance() { ++steps; }
  bool operator==(const EpsilonSchedule&) const = default;
};

// Lowest index among the maxima.
int argmax(std::span<const double> values);

// epsilon-greedy choice; advances the schedule.
int select_action(const QNetwork& net, std::span<const double> state, EpsilonSchedule& schedule,
                  Rng& rng);

// One DQN update on the given replay indices: targets
// y = r + gamma * (1 - done) * max_a' Q_target(s', a'), input statistics
// refreshed from the batch, then one Adam step on the MSE of the taken
// actions. Returns the pre-update loss.
double train_step(QNetwork& net, const QNetwork& target, const ReplayBuffer& buffer,
                  std::span<const std::size_t> indices, double gamma, AdamState& adam);

// Sets target parameters and input statistics bit-equal to the online network.
void sync_target(const QNetwork& net, QNetwork& target);

struct DqnConfig {
  int state_dim = 13;
  int action_count = 21;
  int hidden_dim = 30;
  int hidden_layers = 1;
  double gamma = 0.95;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int replay_capacity = 100000;
  int train_start = 1000;
  int target_sync_episodes = 5;
  double epsilon_start = 1.0;
  double epsilon_min = 0.01;
  double epsilon_decay = 0.99985;
  double init_stddev = 0.05;
  bool operator==(const DqnConfig&) const = default;
};

// Online and target networks, optimizer, replay memory, exploration
// schedule and the generators that drive exploration and replay sampling.
class DqnAgent {
 public:
  DqnAgent() = default;
  DqnAgent(const DqnConfig& config, std::uint64_t seed, std::uint64_t explore_stream);

  const DqnConfig& config() const { return config_; }
  QNetwork& online() { return online_; }
  const QNetwork& online() const { return online_; }
  QNetwork& target() { return target_; }
  const QNetwork& target() const { return target_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }
  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  EpsilonSchedule& schedule() { return schedule_; }
  const EpsilonSchedule& schedule() const { return schedule_; }
  Rng& explore_rng() { return explore_rng_; }
  Rng& replay_rng() { return replay_rng_; }
  const Rng& explore_rng() const { return explore_rng_; }
  const Rng& replay_rng() const { return replay_rng_; }

  // epsilon-greedy when exploring, pure argmax otherwise (schedule untouched).
  int act(std::span<const double> state, bool explore);
  void remember(std::span<const double> state, int action, double reward,
                std::span<const double> next_state, bool done);
  // No-op until the buffer holds train_start transitions; returns the loss or
  // a negative value when no update happened.
  double learn();
  // Counts a finished episode and syncs the target every target_sync_episodes.
  void end_episode();

  // Copy without replay memory, for read-only evaluation.
  DqnAgent snapshot() const;

  std::int64_t episodes() const { return episodes_; }
  std::int64_t updates() const { return updates_; }
  void restore_config(const DqnConfig& config) { config_ = config; }
  void set_counters(std::int64_t episodes, std::int64_t updates) {
    episodes_ = episodes;
    updates_ = updates;
  }

 private:
  DqnConfig config_;
  QNetwork online_, target_;
  AdamState adam_;
  ReplayBuffer replay_;
  EpsilonSchedule schedule_;
  Rng explore_rng_, replay_rng_;
  std::int64_t episodes_ = 0;
  std::int64_t updates_ = 0;
};

}  // namespace saint
