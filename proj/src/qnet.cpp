#include "dvfslab/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dvfs {

QNet::QNet(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs at least an input and an output layer");
  if (sizes_.back() != 1) throw std::invalid_argument("Q network output must be a single value");
  for (std::size_t s : sizes_)
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    DenseLayer l;
    l.inputs = sizes_[i];
    l.outputs = sizes_[i + 1];
    l.weights.assign(l.inputs * l.outputs, 0.0);
    l.biases.assign(l.outputs, 0.0);
    layers_.push_back(std::move(l));
  }
}

QNet QNet::random(std::vector<std::size_t> sizes, std::mt19937_64& rng, double scale) {
  QNet net(std::move(sizes));
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& l : net.layers_) {
    for (auto& w : l.weights) w = dist(rng);
    for (auto& b : l.biases) b = dist(rng);
  }
  return net;
}

double QNet::forward(std::span<const double> input) const {
  if (input.size() != input_size())
    throw std::invalid_argument("network expects " + std::to_string(input_size()) + " inputs, got " +
                                std::to_string(input.size()));
  std::vector<double> a(input.begin(), input.end()), z;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    z.assign(l.outputs, 0.0);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      double acc = l.biases[o];
      const double* row = &l.weights[o * l.inputs];
      for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * a[i];
      z[o] = li + 1 < layers_.size() ? std::max(0.0, acc) : acc;
    }
    a.swap(z);
  }
  return a[0];
}

double QNet::q(std::span<const double> state, double action_value) const {
  if (state.size() + 1 != input_size())
    throw std::invalid_argument("state length " + std::to_string(state.size()) + " + action does not match input " +
                                std::to_string(input_size()));
  std::vector<double> in(state.begin(), state.end());
  in.push_back(action_value);
  return forward(in);
}

double QNet::accumulate_gradient(std::span<const double> input, double upstream, std::span<double> grad) const {
  if (input.size() != input_size()) throw std::invalid_argument("input width mismatch");
  if (grad.size() != parameter_count()) throw std::invalid_argument("gradient buffer has the wrong size");

  // Activations per layer boundary; activations[0] is the input.
  std::vector<std::vector<double>> acts(layers_.size() + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    auto& out = acts[li + 1];
    out.assign(l.outputs, 0.0);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      double acc = l.biases[o];
      for (std::size_t i = 0; i < l.inputs; ++i) acc += l.weights[o * l.inputs + i] * acts[li][i];
      out[o] = li + 1 < layers_.size() ? std::max(0.0, acc) : acc;
    }
  }

  // Offsets of each layer's block in the flat parameter vector.
  std::vector<std::size_t> offset(layers_.size());
  for (std::size_t li = 0, off = 0; li < layers_.size(); ++li) {
    offset[li] = off;
    off += layers_[li].weights.size() + layers_[li].biases.size();
  }

  std::vector<double> delta{upstream}, prev;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const auto& in = acts[li];
    double* gw = &grad[offset[li]];
    double* gb = gw + l.weights.size();
    prev.assign(l.inputs, 0.0);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      for (std::size_t i = 0; i < l.inputs; ++i) {
        gw[o * l.inputs + i] += d * in[i];
        prev[i] += d * l.weights[o * l.inputs + i];
      }
    }
    // ReLU derivative of the layer below (strictly positive pre-activation).
    if (li > 0)
      for (std::size_t i = 0; i < l.inputs; ++i)
        if (!(in[i] > 0.0)) prev[i] = 0.0;
    delta.swap(prev);
  }
  return acts.back()[0];
}

std::size_t QNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> QNet::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.biases.begin(), l.biases.end());
  }
  return flat;
}

void QNet::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("parameter vector has the wrong size");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& w : l.weights) w = flat[k++];
    for (auto& b : l.biases) b = flat[k++];
  }
}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw std::invalid_argument("parameter and gradient sizes differ");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace dvfs
