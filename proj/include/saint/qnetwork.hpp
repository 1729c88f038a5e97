#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "saint/rng.hpp"

namespace saint {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Running per-feature input statistics. Inputs are normalized as
// (x - mean) / sqrt(var + eps); the statistics move toward each training
// batch with the given momentum and stay fixed during inference.
struct InputNorm {
  std::vector<double> mean;
  std::vector<double> var;
  double momentum = 0.99;
  double eps = 1e-3;
  bool enabled = true;

  explicit InputNorm(std::size_t dim = 0) : mean(dim, 0.0), var(dim, 1.0) {}
  void update(std::span<const double> batch, std::size_t rows);
  void apply(std::span<const double> in, std::span<double> out) const;
  bool operator==(const InputNorm&) const = default;
};

// Fully connected ReLU network with a linear output layer. All weights and
// biases live in one flat vector: for each layer, a row-major [out x in]
// weight block followed by the out biases.
class QNetwork {
 public:
  QNetwork() = default;
  // layer_dims = {input, hidden..., output}
  explicit QNetwork(std::vector<int> layer_dims);
  QNetwork(int input_dim, int hidden_dim, int hidden_layers, int output_dim);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layers() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t param_count() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;

  InputNorm& norm() { return norm_; }
  const InputNorm& norm() const { return norm_; }

  // Kernels ~ N(0, stddev), biases 0.
  void init_random_normal(Rng& rng, double stddev = 0.05);

  // Q-values for one state, normalized with the running statistics.
  std::vector<double> forward(std::span<const double> state) const;

  // Row-major [rows x input] -> [rows x output]. The parallel version splits
  // rows across OpenMP threads; both produce bit-identical results.
  void forward_batch(std::span<const double> states, std::size_t rows,
                     std::span<double> out) const;
  void forward_batch_serial(std::span<const double> states, std::size_t rows,
                            std::span<double> out) const;

  // Forward pass on already-normalized input without touching statistics.
  void forward_raw(std::span<const double> x, std::span<double> out) const;

  // Loss (1/n) sum_i (Q(x_i, a_i) - y_i)^2 over pre-normalized inputs and its
  // gradient with respect to params (grad is overwritten).
  double loss_and_gradient(std::span<const double> inputs, std::span<const int> actions,
                           std::span<const double> targets, std::span<double> grad) const;

  bool operator==(const QNetwork&) const = default;

 private:
  void check_input(std::size_t size, std::size_t rows) const;

  std::vector<int> dims_{1, 1};
  std::vector<std::size_t> offsets_{0};
  std::vector<double> params_;
  InputNorm norm_;
};

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : learning_rate(lr), m(n, 0.0), v(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad);
  bool operator==(const AdamState&) const = default;
};

// Largest relative difference between the analytic gradient of
// (Q(state, action) - target)^2 and central finite differences.
// The denominator is floored at 1e-6 so vanishing components do not
// amplify rounding noise.
double backward_check(const QNetwork& net, std::span<const double> state, int action,
                      double target, double h = 1e-5);

}  // namespace saint
