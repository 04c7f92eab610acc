#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace dvfs {

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> biases;

  bool operator==(const DenseLayer&) const = default;
};

/// Small fully connected Q-value network: ReLU on hidden layers, identity on
/// the scalar output. The input is the flattened state followed by the
/// normalized action frequency.
class QNet {
 public:
  QNet() = default;
  /// All-zero network with the given layer sizes (first = input width, last = 1).
  explicit QNet(std::vector<std::size_t> sizes);

  /// Parameters drawn uniformly from [-scale, scale].
  static QNet random(std::vector<std::size_t> sizes, std::mt19937_64& rng, double scale = 0.5);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.empty() ? 0 : sizes_.front(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Throws std::invalid_argument on input width mismatch.
  double forward(std::span<const double> input) const;

  /// forward() on state ++ [action_value].
  double q(std::span<const double> state, double action_value) const;

  /// Runs forward and back-propagates `upstream` (dLoss/dOutput), adding the
  /// parameter gradient into `grad` (flat, parameters() order). Returns the
  /// network output.
  double accumulate_gradient(std::span<const double> input, double upstream, std::span<double> grad) const;

  std::size_t parameter_count() const;
  /// Flat copy: per layer, weights row-major then biases.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  bool operator==(const QNet&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Adaptive-moment gradient descent over a flat parameter vector.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace dvfs
