#include "dvfslab/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dvfslab/kv_file.hpp"
#include "dvfslab/text_util.hpp"

namespace dvfs {

namespace {
constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "dvfslab-qnet";

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}
}  // namespace

GreedyEvaluation evaluate_greedy(const TrainedPolicy& policy, const Workload& workload, const PowerParams& params,
                                 const SimConfig& sim, std::size_t runs, bool keep_episodes) {
  GreedyEvaluation ev;
  if (runs == 0) return ev;
  std::vector<double> rewards;
  double met = 0.0;
  for (std::size_t i = 0; i < runs; ++i) {
    auto gov = policy.governor();
    SimConfig s = sim;
    s.end = EpisodeEnd::kRunToCompletion;
    s.seed = sim.seed + i;
    auto ep = run_episode(workload, gov, policy.encoder.table, params, s);
    const double r = compute_reward(ep, policy.encoder.table, workload.period_s);
    rewards.push_back(r);
    ev.mean_completion_s += ep.completion_time_s / double(runs);
    ev.mean_energy_j += ep.energy.total_joules / double(runs);
    met += ep.deadline_met ? 1.0 : 0.0;
    if (keep_episodes) ev.episodes.push_back(std::move(ep));
  }
  for (double r : rewards) ev.mean_reward += r / double(runs);
  for (double r : rewards) ev.std_reward += (r - ev.mean_reward) * (r - ev.mean_reward) / double(runs);
  ev.std_reward = std::sqrt(ev.std_reward);
  ev.deadline_met_rate = met / double(runs);
  return ev;
}

std::vector<std::size_t> network_sizes(const FrequencyTable& table, const TrainConfig& cfg) {
  std::vector<std::size_t> sizes{flattened_size(cfg.layout, table.size(), cfg.interval_edges.size()) + 1};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  return sizes;
}

TrainedPolicy initial_policy(const Workload& workload, const FrequencyTable& table, const TrainConfig& cfg,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TrainedPolicy p;
  p.layout = cfg.layout;
  p.encoder.table = table;
  p.encoder.interval_edges = cfg.interval_edges;
  p.encoder.deadline_s = workload.period_s;
  p.encoder.validate();
  p.net = QNet::random(network_sizes(table, cfg), rng, cfg.init_scale);
  return p;
}

TrainingRun train_governor(const Workload& workload, const FrequencyTable& table, const PowerParams& params,
                           const TrainConfig& cfg, std::size_t episodes, std::uint64_t seed, const SimConfig& sim,
                           const EpisodeCallback& on_episode) {
  cfg.validate();
  workload.validate();
  TrainingRun run;
  run.policy = initial_policy(workload, table, cfg, seed);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  DdqnLearner learner(run.policy.net, cfg, action_values(table));
  ReplayBuckets buckets(cfg.bucket_capacity);
  QNet best = learner.online();
  double best_reward = -1.0;

  for (std::size_t ep = 0; ep < episodes; ++ep) {
    RlGovernor gov(learner.online(), run.policy.encoder, cfg.layout, cfg.schedule.at(ep), rng());
    SimConfig s = sim;
    s.end = EpisodeEnd::kTruncateAtDeadline;
    s.seed = rng();
    const auto result = run_episode(workload, gov, table, params, s);
    const double reward = compute_reward(result, table, workload.period_s);

    EpisodeMemory mem;
    mem.reward = reward;
    mem.transitions = transitions_from(gov.decisions(), reward);
    if (!mem.transitions.empty()) buckets.add(std::move(mem));

    const auto pool = build_training_pool(buckets, cfg.draws_per_bucket, cfg.batch_size, rng);
    double loss = 0.0;
    for (const auto& batch : pool.batches) loss += learner.train_batch(batch);

    run.policy.net = learner.online();
    if ((ep + 1) % cfg.eval_every == 0) {
      SimConfig es = sim;
      es.seed = seed * 1000003ull + ep;
      const auto ev = evaluate_greedy(run.policy, workload, params, es, cfg.eval_runs);
      CurvePoint pt;
      pt.episode = ep + 1;
      pt.mean_reward = ev.mean_reward;
      pt.std_reward = ev.std_reward;
      pt.mean_completion_s = ev.mean_completion_s;
      pt.deadline_met_rate = ev.deadline_met_rate;
      pt.train_reward = reward;
      pt.mean_loss = pool.batches.empty() ? 0.0 : loss / double(pool.batches.size());
      run.curve.push_back(pt);
      if (ev.mean_reward > best_reward) {
        best_reward = ev.mean_reward;
        best = learner.online();
      }
      if (on_episode) on_episode(pt);
    }
  }
  run.policy.net = cfg.keep_best && best_reward >= 0.0 ? best : learner.online();
  return run;
}

std::string policy_to_json(const TrainedPolicy& policy) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["layout"] = layout_name(policy.layout);
  j["layer_sizes"] = policy.net.sizes();
  j["parameter_count"] = policy.net.parameter_count();
  j["parameters"] = policy.net.parameters();
  j["table"] = policy.encoder.table.to_string();
  j["table_fingerprint"] = hex64(policy.encoder.table.fingerprint());
  j["interval_edges"] = policy.encoder.interval_edges;
  j["deadline_s"] = policy.encoder.deadline_s;
  return j.dump(1) + "\n";
}

TrainedPolicy policy_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ConfigError("not a dvfslab model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw ConfigError("unsupported model version " + std::to_string(j.at("version").get<int>()));
    TrainedPolicy p;
    p.layout = parse_layout(j.at("layout").get<std::string>());
    p.encoder.table = FrequencyTable::parse(j.at("table").get<std::string>());
    if (hex64(p.encoder.table.fingerprint()) != j.at("table_fingerprint").get<std::string>())
      throw ConfigError("model frequency table does not match its fingerprint");
    p.encoder.interval_edges = j.at("interval_edges").get<std::vector<double>>();
    p.encoder.deadline_s = j.at("deadline_s").get<double>();
    p.encoder.validate();
    p.net = QNet(j.at("layer_sizes").get<std::vector<std::size_t>>());
    p.net.set_parameters(j.at("parameters").get<std::vector<double>>());
    const auto width = flattened_size(p.layout, p.encoder.table.size(), p.encoder.interval_edges.size()) + 1;
    if (p.net.input_size() != width) throw ConfigError("model input width does not match its layout");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

void save_policy(const TrainedPolicy& policy, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write model file '" + path + "'");
  f << policy_to_json(policy);
}

TrainedPolicy load_policy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return policy_from_json(ss.str());
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "episode,mean_reward,std,mean_completion_s,deadline_met_rate,train_reward,mean_loss\n";
  for (const auto& p : curve)
    out << p.episode << ',' << format_fixed(p.mean_reward, 6) << ',' << format_fixed(p.std_reward, 6) << ','
        << format_fixed(p.mean_completion_s, 6) << ',' << format_fixed(p.deadline_met_rate, 3) << ','
        << format_fixed(p.train_reward, 6) << ',' << format_double(p.mean_loss) << '\n';
  return out.str();
}

}  // namespace dvfs
