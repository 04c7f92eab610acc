#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dvfslab/rl_agent.hpp"

namespace dvfs {

/// One row of a learning curve: greedy evaluation after a training episode.
struct CurvePoint {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_completion_s = 0.0;
  double deadline_met_rate = 0.0;
  double train_reward = 0.0;  // reward of the exploratory episode itself
  double mean_loss = 0.0;     // mean batch loss of this episode's updates
};

struct GreedyEvaluation {
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_completion_s = 0.0;
  double deadline_met_rate = 0.0;
  double mean_energy_j = 0.0;
  std::vector<EpisodeResult> episodes;
};

/// Everything a trained policy needs to run again.
struct TrainedPolicy {
  QNet net;
  StateLayout layout = StateLayout::kCompact;
  EncoderConfig encoder;

  RlGovernor governor(double random_probability = 0.0, std::uint64_t seed = 0) const {
    return RlGovernor(net, encoder, layout, random_probability, seed);
  }
};

struct TrainingRun {
  TrainedPolicy policy;
  std::vector<CurvePoint> curve;
};

/// Runs `runs` greedy episodes to completion (sim.seed + i seeds each run).
GreedyEvaluation evaluate_greedy(const TrainedPolicy& policy, const Workload& workload, const PowerParams& params,
                                 const SimConfig& sim, std::size_t runs, bool keep_episodes = false);

/// Sizes of the Q network for a table and training config: input, hidden..., 1.
std::vector<std::size_t> network_sizes(const FrequencyTable& table, const TrainConfig& cfg);

/// Initial policy for a workload/table/config: seeded random parameters.
TrainedPolicy initial_policy(const Workload& workload, const FrequencyTable& table, const TrainConfig& cfg,
                             std::uint64_t seed);

using EpisodeCallback = std::function<void(const CurvePoint&)>;

/// Interleaved training: each episode runs the exploring policy up to the
/// deadline, scores it, files it into the reward buckets, builds a training
/// pool and applies one DDQN step per batch. A greedy evaluation follows every
/// `cfg.eval_every` episodes. Deterministic for a given seed.
TrainingRun train_governor(const Workload& workload, const FrequencyTable& table, const PowerParams& params,
                           const TrainConfig& cfg, std::size_t episodes, std::uint64_t seed,
                           const SimConfig& sim = {}, const EpisodeCallback& on_episode = {});

/// Model file (JSON): format tag, version, layout, layer sizes, parameters,
/// frequency table with fingerprint, interval edges, deadline.
std::string policy_to_json(const TrainedPolicy& policy);
TrainedPolicy policy_from_json(const std::string& text);
void save_policy(const TrainedPolicy& policy, const std::string& path);
TrainedPolicy load_policy(const std::string& path);

/// Learning curve CSV: episode,mean_reward,std,mean_completion_s,...
std::string curve_to_csv(const std::vector<CurvePoint>& curve);

}  // namespace dvfs
