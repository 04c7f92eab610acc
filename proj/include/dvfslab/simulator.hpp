#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dvfslab/governor.hpp"
#include "dvfslab/power_model.hpp"
#include "dvfslab/workload.hpp"

namespace dvfs {

/// Raised when a governor breaks the simulator protocol (e.g. returns a
/// frequency that is not in the table).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EpisodeEnd {
  // Stop at the deadline. Work left at that point is a miss; used for
  // training, where transitions past a miss are discarded.
  kTruncateAtDeadline,
  // Run until the task completes. A task finishing early still runs to the end
  // of its period so idle tails are accounted for.
  kRunToCompletion,
};

struct SimConfig {
  double sampling_period_s = 0.02;  // 50 Hz
  EpisodeEnd end = EpisodeEnd::kRunToCompletion;
  double jitter = 0.0;              // relative half-width of uniform period jitter
  std::uint64_t seed = 0;
  double max_duration_factor = 200.0;  // abort after this many periods
};

struct StepRecord {
  double start_s = 0.0;
  std::size_t level = 0;           // level the period ran at
  Observation obs;
  std::vector<double> core_util;   // per-core busy fraction
  std::size_t next_level = 0;      // governor's decision for the following period
};

struct EpisodeResult {
  std::vector<StepRecord> steps;
  double period_s = 0.0;
  bool completed = false;
  // Completion instant when completed; otherwise the time the episode stopped.
  double completion_time_s = 0.0;
  bool deadline_met = false;
  EnergyReport energy;
  double busy_gcycles = 0.0;
  double io_wall_s = 0.0;
  std::size_t initial_level = 0;

  std::vector<PowerSegment> segments() const;
  double duration_s() const;
};

using StepHook = std::function<void(const StepRecord&)>;

/// Simulates one task period of `workload` under `governor`.
///
/// Time advances in sampling periods. Within a period each core drains its
/// remaining cycles at the current frequency; IO phases consume wall time.
/// At every period boundary the governor receives the observation and picks
/// the next level. `hook`, when set, sees every completed step.
EpisodeResult run_episode(const Workload& workload, Governor& governor, const FrequencyTable& table,
                          const PowerParams& params, const SimConfig& config, const StepHook& hook = {});

}  // namespace dvfs
