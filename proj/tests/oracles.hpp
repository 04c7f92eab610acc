#pragma once

// Straight transcriptions of the reference algorithms, written without the
// library's helpers so that tests compare two independent implementations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Ondemand decision rule on a plain list of frequencies (ascending, GHz).
// Levels within one hertz of the target count as "at or below" it.
inline double ondemand(double u, double up_threshold, double bias, const std::vector<double>& freqs) {
  const double min_f = freqs.front();
  const double max_f = freqs.back();
  double next_f;
  if (u > up_threshold)
    next_f = max_f;
  else
    next_f = min_f + (max_f - min_f) * u;
  next_f = next_f * (1.0 - bias);
  double chosen = freqs.front();
  for (double f : freqs)
    if (f <= next_f + 1e-9) chosen = f;
  return chosen;
}

struct EncState {
  double fnorm = 0, util_avg = 0, util_max = 0, u = 0, c = 0;
  std::vector<std::vector<double>> p;  // [level][interval]
};

inline EncState enc_zero(std::size_t levels, std::size_t intervals) {
  EncState s;
  s.p.assign(levels, std::vector<double>(intervals, 0.0));
  return s;
}

// One encoder update. `edges` are the interval upper bounds.
inline EncState enc_step(EncState s, const std::vector<double>& freqs, const std::vector<double>& edges,
                         double deadline, double freq, double util_avg, double util_max, double x) {
  std::size_t level = 0;
  for (std::size_t i = 0; i < freqs.size(); ++i)
    if (std::abs(freqs[i] - freq) < 1e-9) level = i;
  std::size_t interval = edges.size() - 1;
  for (std::size_t k = edges.size(); k-- > 0;)
    if (util_max <= edges[k]) interval = k;
  s.fnorm = (freq - freqs.front()) / (freqs.back() - freqs.front());
  s.util_avg = util_avg;
  s.util_max = util_max;
  s.u = s.u + x * util_avg / deadline;
  s.c = s.c + x / deadline;
  s.p[level][interval] += x / deadline;
  return s;
}

// Terminal reward from a list of (frequency, util_avg, duration) slices
// covering the period.
struct Slice {
  double freq;
  double util_avg;
  double x;
};

inline double reward(const std::vector<Slice>& slices, const std::vector<double>& freqs, double deadline,
                     bool missed) {
  if (missed) return 0.0;
  const double lo = freqs.front() * freqs.front() * freqs.front();
  const double hi = freqs.back() * freqs.back() * freqs.back();
  double r_freq = 0.0;
  double r_util = 0.0;
  for (const auto& s : slices) {
    const double f3 = s.freq * s.freq * s.freq;
    r_freq += (1.0 - (f3 - lo) / (hi - lo)) * (s.x / deadline);
    r_util += s.util_avg * (s.x / deadline);
  }
  return r_freq / 2.0 + r_util / 2.0;
}

// Multilayer perceptron from a flat parameter list (per layer: weights
// row-major, then biases), ReLU between layers.
inline double mlp(const std::vector<std::size_t>& sizes, const std::vector<double>& params,
                  const std::vector<double>& input) {
  std::vector<double> a = input;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t n_in = sizes[l];
    const std::size_t n_out = sizes[l + 1];
    std::vector<double> z(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_in; ++i) acc += params[off + o * n_in + i] * a[i];
      z[o] = acc;
    }
    off += n_in * n_out;
    for (std::size_t o = 0; o < n_out; ++o) z[o] += params[off + o];
    off += n_out;
    if (l + 2 < sizes.size())
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
    a = z;
  }
  return a[0];
}

// Central finite difference of f at params[i].
template <typename F>
double central_difference(F f, std::vector<double> params, std::size_t i, double h) {
  const double x = params[i];
  params[i] = x + h;
  const double up = f(params);
  params[i] = x - h;
  const double down = f(params);
  return (up - down) / (2.0 * h);
}

}  // namespace oracle
