#include "dvfslab/rl_agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dvfs {

double reward_from_shares(std::span<const double> level_share, double avg_utilization, const FrequencyTable& table,
                          bool deadline_met) {
  if (!deadline_met) return 0.0;
  if (level_share.size() != table.size()) throw std::invalid_argument("one time share per level required");
  const double fmin3 = std::pow(table.min().ghz, 3);
  const double span3 = std::pow(table.max().ghz, 3) - fmin3;
  double r_freq = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i)
    r_freq += (1.0 - (std::pow(table[i].ghz, 3) - fmin3) / span3) * level_share[i];
  return r_freq / 2.0 + avg_utilization / 2.0;
}

double compute_reward(const EpisodeResult& episode, const FrequencyTable& table, double deadline_s) {
  if (!(deadline_s > 0.0)) throw std::invalid_argument("deadline must be positive");
  if (!episode.deadline_met) return 0.0;
  std::vector<double> share(table.size(), 0.0);
  double util = 0.0;
  for (const auto& s : episode.steps) {
    const double inside = std::min(s.obs.elapsed_s, std::max(0.0, deadline_s - s.start_s));
    if (inside <= 0.0) continue;
    share[s.level] += inside / deadline_s;
    util += s.obs.util_avg * inside / deadline_s;
  }
  return std::clamp(reward_from_shares(share, util, table, true), 0.0, 1.0);
}

double ExplorationSchedule::at(std::size_t episode) const {
  std::size_t edge = 0;
  for (const auto& [count, p] : stages) {
    edge += count;
    if (episode < edge) return p;
  }
  return final_probability;
}

void ExplorationSchedule::validate() const {
  auto bad = [](double p) { return !(p >= 0.0 && p <= 1.0); };
  if (bad(final_probability)) throw std::invalid_argument("exploration probability outside [0, 1]");
  for (const auto& [count, p] : stages)
    if (bad(p)) throw std::invalid_argument("exploration probability outside [0, 1]");
}

std::vector<double> action_values(const FrequencyTable& table) {
  std::vector<double> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) out[i] = table.normalized(i);
  return out;
}

std::size_t greedy_action(const QNet& net, std::span<const double> state, std::span<const double> actions) {
  std::vector<double> in(state.begin(), state.end());
  in.push_back(0.0);
  std::size_t best = 0;
  double best_q = 0.0;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    in.back() = actions[a];
    const double q = net.forward(in);
    if (a == 0 || q > best_q) {
      best = a;
      best_q = q;
    }
  }
  return best;
}

std::size_t select_action(const QNet& net, std::span<const double> state, std::span<const double> actions,
                          double random_probability, std::mt19937_64& rng) {
  if (actions.empty()) throw std::invalid_argument("no actions to choose from");
  if (random_probability > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < random_probability) {
      std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
      return pick(rng);
    }
  }
  return greedy_action(net, state, actions);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || batch_size == 0 || target_sync_batches == 0 || draws_per_bucket == 0 ||
      bucket_capacity == 0 || eval_every == 0)
    throw std::invalid_argument("training settings must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  schedule.validate();
}

double ddqn_target(const QNet& online, const QNet& target, const Transition& t, double gamma,
                   std::span<const double> actions) {
  if (t.terminal) return t.reward;
  const std::size_t a = greedy_action(online, t.next_state, actions);
  return t.reward + gamma * target.q(t.next_state, actions[a]);
}

LossAndGradient ddqn_loss_gradient(const QNet& online, const QNet& target, std::span<const Transition* const> batch,
                                   double gamma, std::span<const double> actions) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  LossAndGradient out;
  out.gradient.assign(online.parameter_count(), 0.0);
  const double n = double(batch.size());
  std::vector<double> in;
  for (const Transition* t : batch) {
    const double y = ddqn_target(online, target, *t, gamma, actions);
    in.assign(t->state.begin(), t->state.end());
    in.push_back(actions[t->action]);
    const double q = online.forward(in);
    const double err = q - y;
    out.loss += err * err / n;
    online.accumulate_gradient(in, 2.0 * err / n, out.gradient);
  }
  return out;
}

LossAndGradient ddqn_loss_gradient(const QNet& online, const QNet& target, std::span<const Transition> batch,
                                   double gamma, std::span<const double> actions) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& t : batch) ptrs.push_back(&t);
  return ddqn_loss_gradient(online, target, ptrs, gamma, actions);
}

double ddqn_train_step(QNet& net, const QNet& target, std::span<const Transition* const> batch, const TrainConfig& cfg,
                       AdamOptimizer& optimizer, std::span<const double> actions) {
  auto lg = ddqn_loss_gradient(net, target, batch, cfg.gamma, actions);
  if (!std::isfinite(lg.loss)) throw std::runtime_error("non-finite DDQN loss (" + std::to_string(lg.loss) + ")");
  auto params = net.parameters();
  optimizer.step(params, lg.gradient);
  net.set_parameters(params);
  return lg.loss;
}

DdqnLearner::DdqnLearner(QNet net, const TrainConfig& cfg, std::vector<double> actions)
    : cfg_(cfg), actions_(std::move(actions)), online_(net), target_(std::move(net)), adam_(cfg.learning_rate) {}

double DdqnLearner::train_batch(std::span<const Transition* const> batch) {
  const double loss = ddqn_train_step(online_, target_, batch, cfg_, adam_, actions_);
  if (++batches_ % cfg_.target_sync_batches == 0) target_ = online_;
  return loss;
}

ReplayBuckets::ReplayBuckets(std::size_t capacity) : capacity_(capacity), buckets_(kBuckets) {
  if (capacity_ == 0) throw std::invalid_argument("bucket capacity must be positive");
}

std::size_t ReplayBuckets::bucket_index(double reward) {
  if (!(reward >= 0.0 && reward <= 1.0)) throw std::invalid_argument("reward outside [0, 1]");
  return std::min<std::size_t>(kBuckets - 1, static_cast<std::size_t>(std::floor(reward * double(kBuckets))));
}

void ReplayBuckets::add(EpisodeMemory episode) {
  auto& b = buckets_[bucket_index(episode.reward)];
  if (b.size() == capacity_) b.pop_front();
  b.push_back(std::move(episode));
}

std::size_t ReplayBuckets::size() const {
  std::size_t n = 0;
  for (const auto& b : buckets_) n += b.size();
  return n;
}

TrainingPool build_training_pool(const ReplayBuckets& buckets, std::size_t draws_per_bucket, std::size_t batch_size,
                                 std::mt19937_64& rng) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  TrainingPool pool;
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < ReplayBuckets::kBuckets; ++k) {
    const auto& b = buckets.bucket(k);
    idx.resize(b.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (b.size() > draws_per_bucket) {
      // Partial Fisher-Yates: the first draws_per_bucket slots become a uniform sample.
      for (std::size_t i = 0; i < draws_per_bucket; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      idx.resize(draws_per_bucket);
    }
    for (std::size_t i : idx) pool.episodes.push_back(&b[i]);
  }

  std::vector<const Transition*> all;
  for (const auto* e : pool.episodes)
    for (const auto& t : e->transitions) all.push_back(&t);
  std::shuffle(all.begin(), all.end(), rng);
  for (std::size_t i = 0; i < all.size(); i += batch_size)
    pool.batches.emplace_back(all.begin() + i, all.begin() + std::min(all.size(), i + batch_size));
  return pool;
}

std::vector<Transition> transitions_from(std::span<const Decision> decisions, double reward) {
  std::vector<Transition> out;
  if (decisions.size() < 2) return out;
  out.reserve(decisions.size() - 1);
  for (std::size_t i = 0; i + 1 < decisions.size(); ++i) {
    Transition t;
    t.state = decisions[i].state;
    t.action = decisions[i].action;
    t.terminal = i + 2 == decisions.size();
    t.reward = t.terminal ? reward : 0.0;
    if (!t.terminal) t.next_state = decisions[i + 1].state;
    out.push_back(std::move(t));
  }
  return out;
}

RlGovernor::RlGovernor(QNet net, EncoderConfig encoder, StateLayout layout, double random_probability,
                       std::uint64_t seed)
    : net_(std::move(net)),
      encoder_(std::move(encoder)),
      layout_(layout),
      random_probability_(random_probability),
      seed_(seed),
      rng_(seed),
      actions_(action_values(encoder_.table)),
      state_(EncodedState::zero(encoder_)) {
  encoder_.validate();
  const auto width = flattened_size(layout_, encoder_.table.size(), encoder_.interval_edges.size()) + 1;
  if (net_.input_size() != width)
    throw std::invalid_argument("network input width " + std::to_string(net_.input_size()) + " does not match the " +
                                layout_name(layout_) + " layout (" + std::to_string(width) + ")");
}

void RlGovernor::reset() {
  state_ = EncodedState::zero(encoder_);
  decisions_.clear();
  rng_.seed(seed_);
}

FreqLevel RlGovernor::initial(const FrequencyTable& table) {
  if (!(table == encoder_.table)) throw std::invalid_argument("RL governor was built for a different frequency table");
  state_ = EncodedState::zero(encoder_);
  decisions_.clear();
  return decide(table);
}

FreqLevel RlGovernor::next(const Observation& obs, const FrequencyTable& table) {
  state_ = encode_step(state_, obs, encoder_);
  return decide(table);
}

FreqLevel RlGovernor::decide(const FrequencyTable& table) {
  Decision d;
  d.state = flatten(state_, layout_);
  d.action = select_action(net_, d.state, actions_, random_probability_, rng_);
  decisions_.push_back(d);
  return table[d.action];
}

}  // namespace dvfs
