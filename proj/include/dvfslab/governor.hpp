#pragma once

#include <string>

#include "dvfslab/power_model.hpp"

namespace dvfs {

/// What a governor sees at the end of one sampling period.
struct Observation {
  double freq_ghz = 0.0;   // frequency the period ran at
  double util_avg = 0.0;   // mean busy fraction over cores
  double util_max = 0.0;   // max busy fraction over cores
  double elapsed_s = 0.0;  // actual period length
};

/// Frequency policy driven once per sampling period.
///
/// initial() picks the level for the first period of an episode; next() is
/// called at each period boundary with that period's observation. Returned
/// levels must come from `table`; the simulator rejects anything else.
class Governor {
 public:
  virtual ~Governor() = default;

  virtual std::string name() const = 0;
  virtual FreqLevel initial(const FrequencyTable& table) = 0;
  virtual FreqLevel next(const Observation& obs, const FrequencyTable& table) = 0;
  virtual void reset() {}
};

}  // namespace dvfs
