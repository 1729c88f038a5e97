#include "saint/dqn.hpp"

#include <algorithm>
#include <cmath>

namespace saint {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim)
    : capacity_(capacity),
      dim_(state_dim),
      states_(capacity * state_dim),
      next_(capacity * state_dim),
      rewards_(capacity),
      actions_(capacity),
      dones_(capacity) {
  if (capacity == 0) throw DimensionError("replay capacity must be positive");
}

void ReplayBuffer::push(std::span<const double> state, int action, double reward,
                        std::span<const double> next_state, bool done) {
  if (state.size() != dim_ || next_state.size() != dim_)
    throw DimensionError("transition state dimension does not match the buffer");
  std::copy(state.begin(), state.end(), states_.begin() + head_ * dim_);
  std::copy(next_state.begin(), next_state.end(), next_.begin() + head_ * dim_);
  actions_[head_] = action;
  rewards_[head_] = reward;
  dones_[head_] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

void ReplayBuffer::push(const Transition& t) {
  push(t.state, t.action, t.reward, t.next_state, t.done);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = static_cast<std::size_t>(rng.uniform_index(size_));
  return out;
}

Transition ReplayBuffer::at(std::size_t i) const {
  Transition t;
  t.state.assign(state(i).begin(), state(i).end());
  t.next_state.assign(next_state(i).begin(), next_state(i).end());
  t.action = actions_[i];
  t.reward = rewards_[i];
  t.done = dones_[i] != 0;
  return t;
}

double EpsilonSchedule::value() const {
  return std::max(start * std::pow(decay, static_cast<double>(steps)), minimum);
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

int select_action(const QNetwork& net, std::span<const double> state, EpsilonSchedule& schedule,
                  Rng& rng) {
  const double eps = schedule.value();
  schedule.advance();
  if (rng.uniform() < eps)
    return static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(net.output_dim())));
  return argmax(net.forward(state));
}

double train_step(QNetwork& net, const QNetwork& target, const ReplayBuffer& buffer,
                  std::span<const std::size_t> indices, double gamma, AdamState& adam) {
  const std::size_t n = indices.size();
  const std::size_t dim = buffer.state_dim();
  const std::size_t out = static_cast<std::size_t>(target.output_dim());
  std::vector<double> states(n * dim), next(n * dim), next_q(n * out), targets(n);
  std::vector<int> actions(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = indices[r];
    std::copy_n(buffer.state(i).begin(), dim, states.begin() + r * dim);
    std::copy_n(buffer.next_state(i).begin(), dim, next.begin() + r * dim);
    actions[r] = buffer.action(i);
  }
  target.forward_batch(next, n, next_q);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = indices[r];
    double best = next_q[r * out];
    for (std::size_t a = 1; a < out; ++a) best = std::max(best, next_q[r * out + a]);
    targets[r] = buffer.reward(i) + (buffer.done(i) ? 0.0 : gamma * best);
  }

  net.norm().update(states, n);
  std::vector<double> x(states.size());
  net.norm().apply(states, x);
  std::vector<double> grad(net.param_count());
  const double loss = net.loss_and_gradient(x, actions, targets, grad);
  adam.step(net.params(), grad);
  return loss;
}

void sync_target(const QNetwork& net, QNetwork& target) { target = net; }

DqnAgent::DqnAgent(const DqnConfig& config, std::uint64_t seed, std::uint64_t explore_stream)
    : config_(config),
      online_(config.state_dim, config.hidden_dim, config.hidden_layers, config.action_count),
      adam_(online_.param_count(), config.learning_rate),
      replay_(static_cast<std::size_t>(config.replay_capacity),
              static_cast<std::size_t>(config.state_dim)),
      schedule_{config.epsilon_start, config.epsilon_min, config.epsilon_decay, 0},
      explore_rng_(derive_seed(seed, explore_stream)),
      replay_rng_(derive_seed(derive_seed(seed, explore_stream), stream::kReplay)) {
  Rng init(derive_seed(derive_seed(seed, explore_stream), stream::kInit));
  online_.init_random_normal(init, config.init_stddev);
  sync_target(online_, target_);
}

int DqnAgent::act(std::span<const double> state, bool explore) {
  if (explore) return select_action(online_, state, schedule_, explore_rng_);
  return argmax(online_.forward(state));
}

void DqnAgent::remember(std::span<const double> state, int action, double reward,
                        std::span<const double> next_state, bool done) {
  replay_.push(state, action, reward, next_state, done);
}

double DqnAgent::learn() {
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  if (replay_.size() < std::max<std::size_t>(static_cast<std::size_t>(config_.train_start), batch))
    return -1.0;
  const auto idx = replay_.sample_indices(batch, replay_rng_);
  ++updates_;
  return train_step(online_, target_, replay_, idx, config_.gamma, adam_);
}

DqnAgent DqnAgent::snapshot() const {
  DqnAgent copy;
  copy.config_ = config_;
  copy.online_ = online_;
  copy.target_ = target_;
  copy.adam_ = adam_;
  copy.schedule_ = schedule_;
  copy.explore_rng_ = explore_rng_;
  copy.replay_rng_ = replay_rng_;
  copy.episodes_ = episodes_;
  copy.updates_ = updates_;
  return copy;
}

void DqnAgent::end_episode() {
  ++episodes_;
  if (config_.target_sync_episodes > 0 && episodes_ % config_.target_sync_episodes == 0)
    sync_target(online_, target_);
}

}  // namespace saint
