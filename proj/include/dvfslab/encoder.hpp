#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dvfslab/governor.hpp"
#include "dvfslab/power_model.hpp"

namespace dvfs {

/// How an EncodedState is flattened into network inputs.
///
/// kCompact: [freq_normalized, util_max, u, c, per-level totals of p]
///           (6 values for a 2-level table; 7 with the action appended).
/// kFull:    [freq_normalized, util_avg, util_max, u, c, p row-major].
enum class StateLayout { kCompact, kFull };

std::string layout_name(StateLayout layout);
StateLayout parse_layout(const std::string& name);

struct EncoderConfig {
  // Upper edges of the utilization intervals: {0.6, 1.0} means [0, 0.6] and
  // (0.6, 1.0]. Must be strictly increasing and end at 1.
  std::vector<double> interval_edges{0.6, 1.0};
  double deadline_s = 1.0;
  FrequencyTable table = FrequencyTable::jetson2();

  void validate() const;
  std::size_t interval_of(double util_max) const;
};

/// Running summary of one task period's observation sequence.
struct EncodedState {
  double freq_normalized = 0.0;
  double util_avg = 0.0;
  double util_max = 0.0;
  double u = 0.0;  // sum of elapsed * util_avg, over the deadline
  double c = 0.0;  // elapsed time over the deadline
  std::size_t intervals = 0;
  std::vector<double> p;  // [level][interval], deadline-normalized time

  static EncodedState zero(const EncoderConfig& cfg);

  double p_at(std::size_t level, std::size_t interval) const { return p.at(level * intervals + interval); }
  double p_sum() const;
};

/// Folds one observation into the state. Throws std::invalid_argument when
/// the observed frequency is not a level of cfg.table or elapsed_s <= 0.
EncodedState encode_step(const EncodedState& prev, const Observation& obs, const EncoderConfig& cfg);

std::size_t flattened_size(StateLayout layout, std::size_t levels, std::size_t intervals);
std::vector<double> flatten(const EncodedState& state, StateLayout layout);

}  // namespace dvfs
