#include "dvfslab/encoder.hpp"

#include <numeric>
#include <stdexcept>

namespace dvfs {

std::string layout_name(StateLayout layout) { return layout == StateLayout::kCompact ? "compact" : "full"; }

StateLayout parse_layout(const std::string& name) {
  if (name == "compact") return StateLayout::kCompact;
  if (name == "full") return StateLayout::kFull;
  throw std::invalid_argument("unknown state layout '" + name + "'");
}

void EncoderConfig::validate() const {
  if (interval_edges.empty()) throw std::invalid_argument("at least one utilization interval required");
  for (std::size_t i = 0; i < interval_edges.size(); ++i) {
    if (!(interval_edges[i] > 0.0)) throw std::invalid_argument("interval edges must be positive");
    if (i > 0 && !(interval_edges[i] > interval_edges[i - 1]))
      throw std::invalid_argument("interval edges must be strictly increasing");
  }
  if (interval_edges.back() != 1.0) throw std::invalid_argument("the last interval edge must be 1");
  if (!(deadline_s > 0.0)) throw std::invalid_argument("deadline must be positive");
}

std::size_t EncoderConfig::interval_of(double util_max) const {
  for (std::size_t i = 0; i < interval_edges.size(); ++i)
    if (util_max <= interval_edges[i]) return i;
  return interval_edges.size() - 1;
}

EncodedState EncodedState::zero(const EncoderConfig& cfg) {
  EncodedState s;
  s.intervals = cfg.interval_edges.size();
  s.p.assign(cfg.table.size() * s.intervals, 0.0);
  return s;
}

double EncodedState::p_sum() const { return std::accumulate(p.begin(), p.end(), 0.0); }

EncodedState encode_step(const EncodedState& prev, const Observation& obs, const EncoderConfig& cfg) {
  const auto level = cfg.table.index_of(obs.freq_ghz);
  if (!level) throw std::invalid_argument("observed frequency " + std::to_string(obs.freq_ghz) + " GHz is not a table level");
  if (!(obs.elapsed_s > 0.0)) throw std::invalid_argument("observation elapsed time must be positive");
  if (prev.p.size() != cfg.table.size() * cfg.interval_edges.size())
    throw std::invalid_argument("state shape does not match the encoder config");

  const double share = obs.elapsed_s / cfg.deadline_s;
  EncodedState s = prev;
  s.freq_normalized = cfg.table.normalized(*level);
  s.util_avg = obs.util_avg;
  s.util_max = obs.util_max;
  s.u = prev.u + share * obs.util_avg;
  s.c = prev.c + share;
  s.p[*level * s.intervals + cfg.interval_of(obs.util_max)] += share;
  return s;
}

std::size_t flattened_size(StateLayout layout, std::size_t levels, std::size_t intervals) {
  return layout == StateLayout::kCompact ? 4 + levels : 5 + levels * intervals;
}

std::vector<double> flatten(const EncodedState& state, StateLayout layout) {
  std::vector<double> out;
  const std::size_t levels = state.intervals ? state.p.size() / state.intervals : 0;
  out.reserve(flattened_size(layout, levels, state.intervals));
  out.push_back(state.freq_normalized);
  if (layout == StateLayout::kFull) out.push_back(state.util_avg);
  out.push_back(state.util_max);
  out.push_back(state.u);
  out.push_back(state.c);
  if (layout == StateLayout::kFull) {
    out.insert(out.end(), state.p.begin(), state.p.end());
  } else {
    for (std::size_t l = 0; l < levels; ++l) {
      double total = 0.0;
      for (std::size_t i = 0; i < state.intervals; ++i) total += state.p_at(l, i);
      out.push_back(total);
    }
  }
  return out;
}

}  // namespace dvfs
