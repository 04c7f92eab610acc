#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "dvfslab/encoder.hpp"
#include "dvfslab/governor.hpp"
#include "dvfslab/qnet.hpp"
#include "dvfslab/simulator.hpp"

namespace dvfs {

// ---------------------------------------------------------------------------
// Reward

/// Terminal reward from the per-level share of the period T and the
/// time-weighted average utilization over T. Zero when the deadline was
/// missed; otherwise r_freq / 2 + r_util / 2 where
///   r_freq = sum_f (1 - (f^3 - fmin^3) / (fmax^3 - fmin^3)) * share_f.
double reward_from_shares(std::span<const double> level_share, double avg_utilization, const FrequencyTable& table,
                          bool deadline_met);

/// Reward of a simulated episode over its period [0, deadline_s].
double compute_reward(const EpisodeResult& episode, const FrequencyTable& table, double deadline_s);

// ---------------------------------------------------------------------------
// Exploration and action selection

/// Probability of a random action by training episode index. Default:
/// 0.7 for the first 50 episodes, 0.5 for the next 50, then 0.3.
struct ExplorationSchedule {
  std::vector<std::pair<std::size_t, double>> stages{{50, 0.7}, {50, 0.5}};
  double final_probability = 0.3;

  double at(std::size_t episode) const;
  void validate() const;
};

/// Normalized frequency of every table level; the network's action input.
std::vector<double> action_values(const FrequencyTable& table);

/// Index of the highest Q value; ties go to the lowest index.
std::size_t greedy_action(const QNet& net, std::span<const double> state, std::span<const double> actions);

/// With probability `random_probability` a uniform random level, otherwise
/// greedy_action().
std::size_t select_action(const QNet& net, std::span<const double> state, std::span<const double> actions,
                          double random_probability, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// DDQN

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  bool terminal = false;
  std::vector<double> next_state;  // empty when terminal
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t target_sync_batches = 32;
  double gamma = 0.99;
  std::size_t draws_per_bucket = 64;
  std::size_t bucket_capacity = 256;
  ExplorationSchedule schedule;
  std::vector<std::size_t> hidden{8, 8};
  double init_scale = 0.5;
  StateLayout layout = StateLayout::kCompact;
  std::vector<double> interval_edges{0.6, 1.0};
  std::size_t eval_runs = 5;
  std::size_t eval_every = 1;
  // Return the evaluated checkpoint with the highest greedy reward instead of
  // the last network.
  bool keep_best = true;

  void validate() const;
};

/// y = r for terminal transitions, otherwise
/// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)).
double ddqn_target(const QNet& online, const QNet& target, const Transition& t, double gamma,
                   std::span<const double> actions);

struct LossAndGradient {
  double loss = 0.0;             // mean squared TD error over the batch
  std::vector<double> gradient;  // d loss / d online parameters
};

LossAndGradient ddqn_loss_gradient(const QNet& online, const QNet& target, std::span<const Transition* const> batch,
                                   double gamma, std::span<const double> actions);
LossAndGradient ddqn_loss_gradient(const QNet& online, const QNet& target, std::span<const Transition> batch,
                                   double gamma, std::span<const double> actions);

/// One optimizer step of `net` on the batch. Returns the pre-update loss.
/// Throws std::runtime_error when the loss is not finite.
double ddqn_train_step(QNet& net, const QNet& target, std::span<const Transition* const> batch, const TrainConfig& cfg,
                       AdamOptimizer& optimizer, std::span<const double> actions);

/// Online/target pair with the optimizer and the target-sync counter.
class DdqnLearner {
 public:
  DdqnLearner(QNet net, const TrainConfig& cfg, std::vector<double> actions);

  double train_batch(std::span<const Transition* const> batch);

  const QNet& online() const { return online_; }
  const QNet& target() const { return target_; }
  std::size_t batches() const { return batches_; }

 private:
  TrainConfig cfg_;
  std::vector<double> actions_;
  QNet online_;
  QNet target_;
  AdamOptimizer adam_;
  std::size_t batches_ = 0;
};

// ---------------------------------------------------------------------------
// Bucketed replay

struct EpisodeMemory {
  std::vector<Transition> transitions;
  double reward = 0.0;
};

/// Ten reward buckets: bucket k holds episodes whose terminal reward lies in
/// [k/10, (k+1)/10); reward 1 goes to bucket 9. Each bucket keeps at most
/// `capacity` episodes, dropping the oldest.
class ReplayBuckets {
 public:
  static constexpr std::size_t kBuckets = 10;

  explicit ReplayBuckets(std::size_t capacity = 256);

  static std::size_t bucket_index(double reward);

  void add(EpisodeMemory episode);
  const std::deque<EpisodeMemory>& bucket(std::size_t k) const { return buckets_.at(k); }
  std::size_t size() const;

 private:
  std::size_t capacity_;
  std::vector<std::deque<EpisodeMemory>> buckets_;
};

using Batch = std::vector<const Transition*>;

struct TrainingPool {
  std::vector<const EpisodeMemory*> episodes;  // drawn episodes, bucket order
  std::vector<Batch> batches;
};

/// Draws up to `draws_per_bucket` distinct episodes from every non-empty
/// bucket (all of them when a bucket holds fewer), flattens to transitions,
/// shuffles, and chunks into batches of `batch_size` (last one may be short).
TrainingPool build_training_pool(const ReplayBuckets& buckets, std::size_t draws_per_bucket, std::size_t batch_size,
                                 std::mt19937_64& rng);

/// Converts an episode's decision list into transitions. decisions[i] is the
/// state observed before period i and the action applied during it; the
/// final decision supplies the terminal state only. `reward` is attached to
/// the last transition.
struct Decision {
  std::vector<double> state;
  std::size_t action = 0;
};
std::vector<Transition> transitions_from(std::span<const Decision> decisions, double reward);

// ---------------------------------------------------------------------------
// Governor

/// DVFS policy backed by a QNet over the temporal encoding.
class RlGovernor final : public Governor {
 public:
  RlGovernor(QNet net, EncoderConfig encoder, StateLayout layout, double random_probability = 0.0,
             std::uint64_t seed = 0);

  std::string name() const override { return "rl"; }
  FreqLevel initial(const FrequencyTable& table) override;
  FreqLevel next(const Observation& obs, const FrequencyTable& table) override;
  void reset() override;

  const std::vector<Decision>& decisions() const { return decisions_; }
  const EncodedState& state() const { return state_; }
  const EncoderConfig& encoder() const { return encoder_; }

 private:
  FreqLevel decide(const FrequencyTable& table);

  QNet net_;
  EncoderConfig encoder_;
  StateLayout layout_;
  double random_probability_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<double> actions_;
  EncodedState state_;
  std::vector<Decision> decisions_;
};

}  // namespace dvfs
