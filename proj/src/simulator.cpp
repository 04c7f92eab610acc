#include "dvfslab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dvfs {

namespace {

constexpr double kTimeEps = 1e-12;

// Progress through the phase list.
class PhaseCursor {
 public:
  explicit PhaseCursor(const Workload& w) : w_(w), remaining_(w.cores, 0.0) { load(); }

  bool done() const { return index_ >= w_.phases.size(); }

  // Runs for up to `window` seconds at `ghz`. Adds per-core busy time and
  // consumed cycles; returns the time actually used (< window only when the
  // last phase finished inside the window).
  double advance(double window, double ghz, std::vector<double>& busy, double& gcycles, double& io_s) {
    double t = 0.0;
    while (!done() && window - t > kTimeEps) {
      const double avail = window - t;
      double need = 0.0;
      for (double r : remaining_) need = std::max(need, r / ghz);
      if (io_left_ > 0.0) need = std::max(need, io_left_);
      const bool finishes = need <= avail;
      const double adv = finishes ? need : avail;
      for (std::size_t c = 0; c < remaining_.size(); ++c) {
        const double b = std::min(remaining_[c] / ghz, adv);
        busy[c] += b;
        const double used = finishes && b == remaining_[c] / ghz ? remaining_[c] : b * ghz;
        gcycles += used;
        remaining_[c] = std::max(0.0, remaining_[c] - used);
      }
      if (io_left_ > 0.0) {
        const double io = std::min(io_left_, adv);
        io_s += io;
        io_left_ -= io;
      }
      t += adv;
      if (finishes) {
        ++index_;
        load();
      }
    }
    return t;
  }

 private:
  void load() {
    std::fill(remaining_.begin(), remaining_.end(), 0.0);
    io_left_ = 0.0;
    if (done()) return;
    const auto& p = w_.phases[index_];
    if (p.kind == PhaseKind::Compute) {
      remaining_ = p.per_core_gcycles;
    } else {
      io_left_ = p.wall_s;
      if (!p.concurrent_gcycles.empty()) remaining_ = p.concurrent_gcycles;
    }
  }

  const Workload& w_;
  std::size_t index_ = 0;
  std::vector<double> remaining_;
  double io_left_ = 0.0;
};

std::size_t checked_index(const FreqLevel& level, const FrequencyTable& table, const Governor& gov) {
  const auto idx = table.index_of(level.ghz);
  if (!idx || std::abs(table[*idx].volts - level.volts) > 1e-9)
    throw ProtocolError("governor '" + gov.name() + "' returned " + std::to_string(level.ghz) +
                        " GHz, which is not in the frequency table");
  return *idx;
}

}  // namespace

std::vector<PowerSegment> EpisodeResult::segments() const {
  std::vector<PowerSegment> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back({s.level, s.obs.util_avg, s.obs.elapsed_s});
  return out;
}

double EpisodeResult::duration_s() const {
  double d = 0.0;
  for (const auto& s : steps) d += s.obs.elapsed_s;
  return d;
}

EpisodeResult run_episode(const Workload& workload, Governor& governor, const FrequencyTable& table,
                          const PowerParams& params, const SimConfig& config, const StepHook& hook) {
  if (!(config.sampling_period_s > 0.0)) throw std::invalid_argument("sampling period must be positive");
  if (config.jitter < 0.0 || config.jitter >= 1.0) throw std::invalid_argument("jitter must be in [0, 1)");
  workload.validate();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(-config.jitter, config.jitter);

  EpisodeResult result;
  result.period_s = workload.period_s;
  const double deadline = workload.period_s;
  const double limit = deadline * config.max_duration_factor;

  PhaseCursor cursor(workload);
  std::size_t level = checked_index(governor.initial(table), table, governor);
  result.initial_level = level;
  double now = 0.0;
  std::vector<double> busy(workload.cores);

  while (true) {
    const bool before_deadline = now < deadline - kTimeEps;
    if (!before_deadline && (cursor.done() || config.end == EpisodeEnd::kTruncateAtDeadline)) break;
    if (now > limit) throw std::runtime_error("episode exceeded " + std::to_string(limit) + " s without completing");

    double window = config.sampling_period_s;
    if (config.jitter > 0.0) window *= 1.0 + jitter(rng);
    if (before_deadline) window = std::min(window, deadline - now);

    std::fill(busy.begin(), busy.end(), 0.0);
    const bool was_done = cursor.done();
    const double ghz = table[level].ghz;
    const double used = cursor.advance(window, ghz, busy, result.busy_gcycles, result.io_wall_s);
    if (!was_done && cursor.done()) {
      result.completed = true;
      result.completion_time_s = now + used;
      // Past the deadline the episode ends with the task.
      if (!before_deadline) window = used;
    }

    StepRecord step;
    step.start_s = now;
    step.level = level;
    step.core_util.resize(workload.cores);
    double sum = 0.0, mx = 0.0;
    for (std::size_t c = 0; c < workload.cores; ++c) {
      const double u = window > 0.0 ? std::clamp(busy[c] / window, 0.0, 1.0) : 0.0;
      step.core_util[c] = u;
      sum += u;
      mx = std::max(mx, u);
    }
    step.obs = {ghz, std::min(sum / double(workload.cores), mx), mx, window};
    step.next_level = checked_index(governor.next(step.obs, table), table, governor);
    now += window;
    level = step.next_level;
    if (hook) hook(step);
    result.steps.push_back(std::move(step));
    if (window <= 0.0) break;
  }

  if (!result.completed) result.completion_time_s = now;
  result.deadline_met = result.completed && result.completion_time_s <= deadline + 1e-9;
  const auto segs = result.segments();
  result.energy = energy_of_trace(segs, table, params);
  return result;
}

}  // namespace dvfs
