#include "saint/qnetwork.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace saint {

void InputNorm::update(std::span<const double> batch, std::size_t rows) {
  if (!enabled || rows == 0) return;
  const std::size_t dim = mean.size();
  for (std::size_t j = 0; j < dim; ++j) {
    double mu = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mu += batch[r * dim + j];
    mu /= static_cast<double>(rows);
    double s2 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = batch[r * dim + j] - mu;
      s2 += d * d;
    }
    s2 /= static_cast<double>(rows);
    mean[j] = momentum * mean[j] + (1.0 - momentum) * mu;
    var[j] = momentum * var[j] + (1.0 - momentum) * s2;
  }
}

void InputNorm::apply(std::span<const double> in, std::span<double> out) const {
  if (!enabled) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const std::size_t dim = mean.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t j = i % dim;
    out[i] = (in[i] - mean[j]) / std::sqrt(var[j] + eps);
  }
}

QNetwork::QNetwork(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw DimensionError("network needs at least input and output layers");
  for (int d : dims_)
    if (d <= 0) throw DimensionError("layer widths must be positive");
  offsets_.clear();
  std::size_t n = 0;
  for (int l = 0; l < layers(); ++l) {
    offsets_.push_back(n);
    n += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_.assign(n, 0.0);
  norm_ = InputNorm(static_cast<std::size_t>(dims_.front()));
}

QNetwork::QNetwork(int input_dim, int hidden_dim, int hidden_layers, int output_dim)
    : QNetwork([&] {
        std::vector<int> d{input_dim};
        for (int i = 0; i < hidden_layers; ++i) d.push_back(hidden_dim);
        d.push_back(output_dim);
        return d;
      }()) {}

std::size_t QNetwork::bias_offset(int layer) const {
  return offsets_[layer] + static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
}

void QNetwork::init_random_normal(Rng& rng, double stddev) {
  for (int l = 0; l < layers(); ++l) {
    const std::size_t w = weight_offset(l), b = bias_offset(l);
    for (std::size_t i = w; i < b; ++i) params_[i] = rng.normal(0.0, stddev);
    for (int i = 0; i < dims_[l + 1]; ++i) params_[b + i] = 0.0;
  }
}

void QNetwork::check_input(std::size_t size, std::size_t rows) const {
  if (size != rows * static_cast<std::size_t>(input_dim()))
    throw DimensionError("state has " + std::to_string(size) + " values, expected " +
                         std::to_string(rows * input_dim()));
}

void QNetwork::forward_raw(std::span<const double> x, std::span<double> out) const {
  int widest = 0;
  for (int d : dims_) widest = std::max(widest, d);
  std::vector<double> a(x.begin(), x.end()), z(widest);
  for (int l = 0; l < layers(); ++l) {
    const int in = dims_[l], outd = dims_[l + 1];
    const double* W = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const bool last = l + 1 == layers();
    for (int o = 0; o < outd; ++o) {
      double s = b[o];
      const double* row = W + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = last ? s : std::max(0.0, s);
    }
    a.assign(z.begin(), z.begin() + outd);
  }
  std::copy(a.begin(), a.end(), out.begin());
}

std::vector<double> QNetwork::forward(std::span<const double> state) const {
  check_input(state.size(), 1);
  std::vector<double> x(state.size()), q(output_dim());
  norm_.apply(state, x);
  forward_raw(x, q);
  return q;
}

void QNetwork::forward_batch_serial(std::span<const double> states, std::size_t rows,
                                    std::span<double> out) const {
  check_input(states.size(), rows);
  const std::size_t in = input_dim(), od = output_dim();
  std::vector<double> x(in);
  for (std::size_t r = 0; r < rows; ++r) {
    norm_.apply(states.subspan(r * in, in), x);
    forward_raw(x, out.subspan(r * od, od));
  }
}

void QNetwork::forward_batch(std::span<const double> states, std::size_t rows,
                             std::span<double> out) const {
  check_input(states.size(), rows);
  const std::size_t in = input_dim(), od = output_dim();
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (n >= 256)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    std::vector<double> x(in);
    norm_.apply(states.subspan(r * in, in), x);
    forward_raw(x, out.subspan(r * od, od));
  }
}

double QNetwork::loss_and_gradient(std::span<const double> inputs, std::span<const int> actions,
                                   std::span<const double> targets,
                                   std::span<double> grad) const {
  const std::size_t rows = actions.size();
  check_input(inputs.size(), rows);
  if (targets.size() != rows || grad.size() != params_.size())
    throw DimensionError("batch targets or gradient buffer have the wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  if (rows == 0) return 0.0;

  const int L = layers();
  std::vector<std::vector<double>> act(L + 1);  // act[0] = input, act[l+1] = layer l output
  std::vector<double> delta, prev_delta;
  double loss = 0.0;
  const double scale = 2.0 / static_cast<double>(rows);

  for (std::size_t r = 0; r < rows; ++r) {
    const int a = actions[r];
    if (a < 0 || a >= output_dim()) throw DimensionError("action index out of range");
    act[0].assign(inputs.begin() + r * input_dim(), inputs.begin() + (r + 1) * input_dim());
    for (int l = 0; l < L; ++l) {
      const int in = dims_[l], outd = dims_[l + 1];
      const double* W = params_.data() + weight_offset(l);
      const double* b = params_.data() + bias_offset(l);
      act[l + 1].resize(outd);
      for (int o = 0; o < outd; ++o) {
        double s = b[o];
        for (int i = 0; i < in; ++i) s += W[static_cast<std::size_t>(o) * in + i] * act[l][i];
        act[l + 1][o] = l + 1 == L ? s : std::max(0.0, s);
      }
    }
    const double err = act[L][a] - targets[r];
    loss += err * err;

    // dLoss/dz for the output layer: only the taken action contributes
    delta.assign(output_dim(), 0.0);
    delta[a] = scale * err;
    for (int l = L - 1; l >= 0; --l) {
      const int in = dims_[l], outd = dims_[l + 1];
      const double* W = params_.data() + weight_offset(l);
      double* gW = grad.data() + weight_offset(l);
      double* gb = grad.data() + bias_offset(l);
      for (int o = 0; o < outd; ++o) {
        if (delta[o] == 0.0) continue;
        gb[o] += delta[o];
        for (int i = 0; i < in; ++i) gW[static_cast<std::size_t>(o) * in + i] += delta[o] * act[l][i];
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (int o = 0; o < outd; ++o) {
        if (delta[o] == 0.0) continue;
        for (int i = 0; i < in; ++i) prev_delta[i] += W[static_cast<std::size_t>(o) * in + i] * delta[o];
      }
      for (int i = 0; i < in; ++i)
        if (act[l][i] <= 0.0) prev_delta[i] = 0.0;  // ReLU
      delta.swap(prev_delta);
    }
  }
  return loss / static_cast<double>(rows);
}

void AdamState::step(std::span<double> params, std::span<const double> grad) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    params[i] -= learning_rate * mhat / (std::sqrt(vhat) + epsilon);
  }
}

double backward_check(const QNetwork& net, std::span<const double> state, int action,
                      double target, double h) {
  std::vector<double> x(state.size());
  net.norm().apply(state, x);
  const int a[1] = {action};
  const double y[1] = {target};
  std::vector<double> grad(net.param_count()), scratch(net.param_count());
  net.loss_and_gradient(x, a, y, grad);

  QNetwork probe = net;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.param_count(); ++i) {
    const double orig = probe.params()[i];
    probe.params()[i] = orig + h;
    const double up = probe.loss_and_gradient(x, a, y, scratch);
    probe.params()[i] = orig - h;
    const double down = probe.loss_and_gradient(x, a, y, scratch);
    probe.params()[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double mag = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grad[i]) / mag);
  }
  return worst;
}

}  // namespace saint
