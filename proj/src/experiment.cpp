#include "dvfslab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dvfslab/text_util.hpp"

namespace dvfs {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"workload",
       {"scenario", "file", "cores", "deadline_s", "runtime_s", "io_s", "concurrent_s", "post_io_s", "segments",
        "segment_s"}},
      {"table", {"rl", "builtin"}},
      {"power", {"switching_capacitance", "static_current_per_volt", "base_board_power"}},
      {"governor",
       {"name", "model", "compare", "up_threshold", "powersave_bias", "down_threshold", "step_levels"}},
      {"sim", {"sampling_period_s", "jitter"}},
      {"train",
       {"episodes", "seeds", "learning_rate", "gamma", "batch_size", "target_sync_batches", "draws_per_bucket",
        "bucket_capacity", "hidden", "layout", "interval_edges", "eval_runs", "keep_best"}},
      {"run", {"runs", "trace_capacity", "bench_iterations", "threads"}},
  };
  return keys;
}

std::vector<std::string> words(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::size_t get_count(const KvFile& kv, const std::string& sec, const std::string& key, std::size_t fallback) {
  const long long v = kv.get_int_or(sec, key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError("key '" + sec + "." + key + "' must not be negative");
  return static_cast<std::size_t>(v);
}

FrequencyTable table_from(const std::string& spec) {
  if (spec == "jetson2") return FrequencyTable::jetson2();
  if (spec == "jetson_full") return FrequencyTable::jetson_full();
  return FrequencyTable::parse(spec);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

fs::path prepare_dir(const std::string& out_dir) {
  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  return dir;
}

ordered_json metadata(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed) {
  ordered_json m;
  m["command"] = command;
  m["seed"] = seed;
  m["config_path"] = cfg.source_path;
  m["config_text"] = cfg.source_text;
  m["rl_table"] = cfg.rl_table.to_string();
  m["builtin_table"] = cfg.builtin_table.to_string();
  m["sampling_period_s"] = cfg.sim.sampling_period_s;
  return m;
}

// Runs f(i) for i in [0, n) across worker threads. Each index is handled once.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_kv(const KvFile& kv, const std::string& source_path,
                                           const std::string& source_text) {
  for (const auto& sec : kv.sections()) {
    auto it = known_keys().find(sec);
    if (it == known_keys().end()) throw ConfigError("unknown config section [" + sec + "]");
    for (const auto& key : kv.keys(sec))
      if (!it->second.count(key)) throw ConfigError("unknown config key '" + sec + "." + key + "'");
  }

  ExperimentConfig c;
  c.source_path = source_path;
  c.source_text = source_text;
  try {
    c.scenario = kv.get_string_or("workload", "scenario", c.scenario);
    c.workload_file = kv.get_string_or("workload", "file", "");
    auto& d = c.dims;
    d.cores = get_count(kv, "workload", "cores", d.cores);
    d.deadline_s = kv.get_double_or("workload", "deadline_s", d.deadline_s);
    d.runtime_s = kv.get_double_or("workload", "runtime_s", d.runtime_s);
    d.io_s = kv.get_double_or("workload", "io_s", d.io_s);
    d.concurrent_s = kv.get_double_or("workload", "concurrent_s", d.concurrent_s);
    d.post_io_s = kv.get_double_or("workload", "post_io_s", d.post_io_s);
    d.segments = get_count(kv, "workload", "segments", d.segments);
    d.segment_s = kv.get_double_or("workload", "segment_s", d.segment_s);

    if (auto t = kv.get("table", "rl")) c.rl_table = table_from(*t);
    if (auto t = kv.get("table", "builtin")) c.builtin_table = table_from(*t);
    d.fmax_ghz = c.builtin_table.max().ghz;

    auto& p = c.power;
    p.switching_capacitance = kv.get_double_or("power", "switching_capacitance", p.switching_capacitance);
    p.static_current_per_volt = kv.get_double_or("power", "static_current_per_volt", p.static_current_per_volt);
    p.base_board_power = kv.get_double_or("power", "base_board_power", p.base_board_power);

    c.governor = kv.get_string_or("governor", "name", c.governor);
    c.model_path = kv.get_string_or("governor", "model", "");
    if (kv.has("governor", "compare")) {
      c.compare.clear();
      for (const auto& v : kv.get_all("governor", "compare"))
        for (auto& w : words(v)) c.compare.push_back(w);
    }
    c.ondemand.up_threshold = kv.get_double_or("governor", "up_threshold", c.ondemand.up_threshold);
    c.ondemand.powersave_bias = kv.get_double_or("governor", "powersave_bias", c.ondemand.powersave_bias);
    c.conservative.up_threshold = c.ondemand.up_threshold;
    c.conservative.down_threshold = kv.get_double_or("governor", "down_threshold", c.conservative.down_threshold);
    c.conservative.step_levels = get_count(kv, "governor", "step_levels", c.conservative.step_levels);

    c.sim.sampling_period_s = kv.get_double_or("sim", "sampling_period_s", c.sim.sampling_period_s);
    c.sim.jitter = kv.get_double_or("sim", "jitter", c.sim.jitter);

    c.episodes = get_count(kv, "train", "episodes", c.episodes);
    if (auto s = kv.get("train", "seeds")) {
      c.seeds.clear();
      for (auto& w : words(*s)) {
        const long long v = parse_int(w);
        if (v < 0) throw ConfigError("seeds must not be negative");
        c.seeds.push_back(static_cast<std::uint64_t>(v));
      }
    }
    auto& t = c.train;
    t.learning_rate = kv.get_double_or("train", "learning_rate", t.learning_rate);
    t.gamma = kv.get_double_or("train", "gamma", t.gamma);
    t.batch_size = get_count(kv, "train", "batch_size", t.batch_size);
    t.target_sync_batches = get_count(kv, "train", "target_sync_batches", t.target_sync_batches);
    t.draws_per_bucket = get_count(kv, "train", "draws_per_bucket", t.draws_per_bucket);
    t.bucket_capacity = get_count(kv, "train", "bucket_capacity", t.bucket_capacity);
    if (auto h = kv.get("train", "hidden")) {
      t.hidden.clear();
      for (auto& w : words(*h)) t.hidden.push_back(static_cast<std::size_t>(parse_int(w)));
    }
    if (auto l = kv.get("train", "layout")) t.layout = parse_layout(*l);
    if (auto e = kv.get("train", "interval_edges")) {
      t.interval_edges.clear();
      for (auto& w : words(*e)) t.interval_edges.push_back(parse_double(w));
    }
    t.eval_runs = get_count(kv, "train", "eval_runs", t.eval_runs);
    if (auto k = kv.get("train", "keep_best")) {
      if (*k == "true" || *k == "1")
        t.keep_best = true;
      else if (*k == "false" || *k == "0")
        t.keep_best = false;
      else
        throw ConfigError("key 'train.keep_best' must be true or false");
    }

    c.runs = get_count(kv, "run", "runs", c.runs);
    c.trace_capacity = get_count(kv, "run", "trace_capacity", c.trace_capacity);
    c.bench_iterations = get_count(kv, "run", "bench_iterations", c.bench_iterations);
    c.threads = get_count(kv, "run", "threads", c.threads);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  if (!c.workload_file.empty() && !source_path.empty() && fs::path(c.workload_file).is_relative())
    c.workload_file = (fs::path(source_path).parent_path() / c.workload_file).string();
  if (!c.model_path.empty() && !source_path.empty() && fs::path(c.model_path).is_relative())
    c.model_path = (fs::path(source_path).parent_path() / c.model_path).string();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  const std::string text = read_file(path);
  return from_kv(KvFile::parse(text), path, text);
}

Workload ExperimentConfig::workload() const {
  try {
    if (!workload_file.empty()) return workload_from_text(read_file(workload_file));
    return dvfs::scenario(scenario, dims);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("workload: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  try {
    if (!(dims.deadline_s > 0.0)) throw ConfigError("workload.deadline_s must be positive");
    if (!(sim.sampling_period_s > 0.0)) throw ConfigError("sim.sampling_period_s must be positive");
    if (!(sim.jitter >= 0.0 && sim.jitter < 1.0)) throw ConfigError("sim.jitter must lie in [0, 1)");
    if (!workload_file.empty() && !fs::exists(workload_file))
      throw ConfigError("workload file '" + workload_file + "' does not exist");
    if (!model_path.empty() && !fs::exists(model_path))
      throw ConfigError("model file '" + model_path + "' does not exist");
    if (seeds.empty()) throw ConfigError("train.seeds must list at least one seed");
    if (runs == 0) throw ConfigError("run.runs must be positive");
    if (trace_capacity == 0) throw ConfigError("run.trace_capacity must be positive");
    power.validate(rl_table);
    power.validate(builtin_table);
    ondemand.validate();
    conservative.validate();
    train.validate();
    workload().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Governors and traced episodes

GovernorSetup make_governor(const std::string& name, const ExperimentConfig& cfg) {
  if (is_builtin_governor(name))
    return {make_builtin_governor(name, cfg.ondemand, cfg.conservative), cfg.builtin_table, false};
  if (name != "rl" && name != "rl_int")
    throw UsageError("unknown governor '" + name +
                     "' (expected performance, powersave, ondemand, conservative, schedutil_like, rl or rl_int)");
  if (cfg.model_path.empty()) throw ConfigError("governor '" + name + "' needs governor.model");

  TrainedPolicy policy;
  try {
    policy = load_policy(cfg.model_path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot load model '" + cfg.model_path + "': " + e.what());
  }
  const double period = cfg.workload().period_s;
  if (std::abs(policy.encoder.deadline_s - period) > 1e-9)
    throw ConfigError("model was trained for a " + format_double(policy.encoder.deadline_s) +
                      " s deadline but the workload period is " + format_double(period) + " s");
  FrequencyTable table = policy.encoder.table;
  if (name == "rl") return {std::make_unique<RlGovernor>(policy.governor()), table, true};
  return {std::make_unique<QuantizedRlGovernor>(quantize(policy.net), policy.encoder, policy.layout), table, true};
}

namespace {

std::vector<double> governor_state(const Governor& g) {
  if (auto* rl = dynamic_cast<const RlGovernor*>(&g)) return flatten(rl->state(), StateLayout::kCompact);
  if (auto* q = dynamic_cast<const QuantizedRlGovernor*>(&g)) return flatten(q->state(), StateLayout::kCompact);
  return {};
}

}  // namespace

TracedEpisode run_traced(const Workload& workload, GovernorSetup& setup, const ExperimentConfig& cfg,
                         std::uint64_t seed) {
  SimConfig sim = cfg.sim;
  sim.seed = seed;
  sim.end = EpisodeEnd::kRunToCompletion;
  const auto bound =
      static_cast<std::size_t>(std::ceil(workload.period_s * sim.max_duration_factor / sim.sampling_period_s)) + 2;
  TracedEpisode out{{}, TraceBuffer(std::min(cfg.trace_capacity, bound), static_cast<std::uint16_t>(workload.cores)),
                    0.0};
  const double deadline = workload.period_s;
  setup.governor->reset();
  auto hook = [&](const StepRecord& step) {
    const auto state = governor_state(*setup.governor);
    const bool late = step.start_s + step.obs.elapsed_s > deadline + 1e-9;
    out.trace.record(make_record(step, state, 0.0, late, false, false));
  };
  out.result = run_episode(workload, *setup.governor, setup.table, cfg.power, sim, hook);
  out.reward = compute_reward(out.result, setup.table, deadline);

  if (out.trace.size() > 0) {
    auto& last = out.trace.at(out.trace.size() - 1);
    last.flags |= TraceFlags::kTerminal;
    last.reward_millis = static_cast<std::uint16_t>(std::lround(std::clamp(out.reward, 0.0, 1.0) * 1000.0));
    if (out.result.completed) {
      const auto done_us = static_cast<std::uint64_t>(std::llround(out.result.completion_time_s * 1e6));
      for (std::size_t i = 0; i < out.trace.size(); ++i) {
        auto& r = out.trace.at(i);
        if (r.timestamp_us >= done_us) {
          r.flags |= TraceFlags::kTaskDone;
          break;
        }
      }
    }
  }
  return out;
}

double low_level_share(std::span<const TraceRecord> records, const FrequencyTable& table, double from_s, double to_s) {
  if (!(to_s > from_s)) return 0.0;
  const auto low_khz = static_cast<std::uint32_t>(std::lround(table.min().ghz * 1e6));
  double low = 0.0;
  double prev = 0.0;
  for (const auto& r : records) {
    const double end = double(r.timestamp_us) * 1e-6;
    const double overlap = std::min(end, to_s) - std::max(prev, from_s);
    if (overlap > 0.0 && r.freq_khz == low_khz) low += overlap;
    prev = end;
  }
  return low / (to_s - from_s);
}

// ---------------------------------------------------------------------------
// run

std::string cmd_run(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  const Workload w = cfg.workload();
  auto setup = make_governor(cfg.governor, cfg);
  auto ep = run_traced(w, setup, cfg, seed);
  const auto dir = prepare_dir(out_dir);
  export_trace(ep.trace, (dir / "trace.bin").string());
  const auto records = ep.trace.records();
  write_file(dir / "trace.csv", trace_to_csv(records));

  const auto& r = ep.result;
  ordered_json j = metadata("run", cfg, seed);
  j["governor"] = setup.governor->name();
  j["table"] = setup.table.to_string();
  j["deadline_s"] = w.period_s;
  j["completed"] = r.completed;
  j["completion_time_s"] = r.completion_time_s;
  j["deadline_met"] = r.deadline_met;
  j["energy_j"] = r.energy.total_joules;
  j["dynamic_j"] = r.energy.dynamic_joules;
  j["static_j"] = r.energy.static_joules;
  j["base_j"] = r.energy.base_joules;
  j["duration_s"] = r.energy.duration_s;
  j["level_share"] = r.energy.level_share;
  j["reward"] = ep.reward;
  j["steps"] = r.steps.size();
  j["trace_records"] = records.size();
  j["trace_dropped"] = ep.trace.dropped();
  write_file(dir / "result.json", j.dump(2) + "\n");

  std::ostringstream s;
  s << setup.governor->name() << ": completion " << format_fixed(r.completion_time_s, 4) << " s, energy "
    << format_fixed(r.energy.total_joules, 4) << " J, deadline " << (r.deadline_met ? "met" : "missed") << ", "
    << records.size() << " trace records";
  return s.str();
}

// ---------------------------------------------------------------------------
// train

std::vector<SeedOutcome> train_seeds(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  const Workload w = cfg.workload();
  std::vector<SeedOutcome> out(seeds.size());
  parallel_for(seeds.size(), cfg.threads, [&](std::size_t i) {
    SimConfig sim = cfg.sim;
    sim.seed = seeds[i];
    out[i].seed = seeds[i];
    out[i].run = train_governor(w, cfg.rl_table, cfg.power, cfg.train, cfg.episodes, seeds[i], sim);
    sim.seed = seeds[i];
    out[i].eval = evaluate_greedy(out[i].run.policy, w, cfg.power, sim, 1, true);
  });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  return out;
}

std::string cmd_train(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir) {
  if (seeds.empty()) throw UsageError("no seeds to train");
  const auto outcomes = train_seeds(cfg, seeds);
  const auto dir = prepare_dir(out_dir);

  std::ostringstream summary;
  summary << "seed,episodes,greedy_reward,completion_s,deadline_met,energy_j,low_share\n";
  for (const auto& o : outcomes) {
    const std::string stem = outcomes.size() == 1 ? "" : "_seed" + std::to_string(o.seed);
    save_policy(o.run.policy, (dir / ("model" + stem + ".json")).string());
    save_quantized_model({o.run.policy.layout, quantize(o.run.policy.net)}, (dir / ("model" + stem + ".qbin")).string());
    write_file(dir / ("curve" + stem + ".csv"), curve_to_csv(o.run.curve));
    const auto& e = o.eval.episodes.front();
    summary << o.seed << ',' << cfg.episodes << ',' << format_fixed(o.eval.mean_reward, 6) << ','
            << format_fixed(e.completion_time_s, 6) << ',' << (e.deadline_met ? 1 : 0) << ','
            << format_fixed(e.energy.total_joules, 6) << ',' << format_fixed(e.energy.level_share.front(), 6) << '\n';
  }
  write_file(dir / "train_summary.csv", summary.str());
  ordered_json meta = metadata("train", cfg, seeds.front());
  meta["seeds"] = seeds;
  meta["episodes"] = cfg.episodes;
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::ostringstream s;
  for (const auto& o : outcomes) {
    const auto& e = o.eval.episodes.front();
    s << "seed " << o.seed << ": reward " << format_fixed(o.eval.mean_reward, 3) << ", completion "
      << format_fixed(e.completion_time_s, 4) << " s, energy " << format_fixed(e.energy.total_joules, 4) << " J, "
      << (e.deadline_met ? "met" : "missed") << '\n';
  }
  return s.str();
}

// ---------------------------------------------------------------------------
// compare

std::vector<CompareRow> compare_governors(const ExperimentConfig& cfg, std::uint64_t seed,
                                          const std::string& trace_dir) {
  const Workload w = cfg.workload();
  std::vector<std::string> names = cfg.compare;
  if (std::find(names.begin(), names.end(), "performance") == names.end()) names.insert(names.begin(), "performance");
  for (const auto& n : names) make_governor(n, cfg);  // fail fast on bad names or missing models

  std::vector<CompareRow> rows(names.size());
  parallel_for(names.size(), cfg.threads, [&](std::size_t gi) {
    auto setup = make_governor(names[gi], cfg);
    CompareRow& row = rows[gi];
    row.governor = names[gi];
    row.runs = cfg.runs;
    double met = 0.0;
    for (std::size_t i = 0; i < cfg.runs; ++i) {
      auto ep = run_traced(w, setup, cfg, seed + i);
      const auto records = ep.trace.records();
      const auto recomputed = energy_of_trace(segments_from_trace(records, setup.table), setup.table, cfg.power);
      const double total = ep.result.energy.total_joules;
      if (std::abs(recomputed.total_joules - total) > 1e-3 * total)
        throw std::runtime_error("trace energy " + format_double(recomputed.total_joules) + " J disagrees with " +
                                 format_double(total) + " J for governor " + names[gi]);
      row.mean_energy_j += total / double(cfg.runs);
      row.trace_energy_j += recomputed.total_joules / double(cfg.runs);
      row.mean_completion_s += ep.result.completion_time_s / double(cfg.runs);
      row.low_share += ep.result.energy.level_share.front() / double(cfg.runs);
      met += ep.result.deadline_met ? 1.0 : 0.0;
      if (i == 0 && !trace_dir.empty()) export_trace(ep.trace, (fs::path(trace_dir) / ("trace_" + names[gi] + ".bin")).string());
    }
    row.deadline_met_rate = met / double(cfg.runs);
  });

  const auto perf = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.governor == "performance"; });
  for (auto& r : rows) r.normalized_energy = r.mean_energy_j / perf->mean_energy_j;
  return rows;
}

std::string compare_to_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream s;
  s << "governor,runs,mean_energy_j,normalized_energy,mean_completion_s,deadline_met_rate,low_share,trace_energy_j\n";
  for (const auto& r : rows)
    s << r.governor << ',' << r.runs << ',' << format_fixed(r.mean_energy_j, 6) << ','
      << format_fixed(r.normalized_energy, 4) << ',' << format_fixed(r.mean_completion_s, 6) << ','
      << format_fixed(r.deadline_met_rate, 4) << ',' << format_fixed(r.low_share, 4) << ','
      << format_fixed(r.trace_energy_j, 6) << '\n';
  return s.str();
}

namespace {

std::string bar_svg(const std::vector<CompareRow>& rows, const std::string& title) {
  const double width = 120.0 + 90.0 * double(rows.size());
  const double height = 320.0, left = 60.0, bottom = 270.0, top = 40.0;
  double ymax = 1.0;
  for (const auto& r : rows) ymax = std::max(ymax, r.normalized_energy);
  ymax = std::ceil(ymax * 5.0) / 5.0;
  auto y = [&](double v) { return bottom - (bottom - top) * v / ymax; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_fixed(width, 0) << "\" height=\""
    << format_fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << format_fixed(left, 0) << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << format_fixed(width - 20, 0) << "\" y2=\""
    << bottom << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  for (double v = 0.0; v <= ymax + 1e-9; v += 0.2)
    s << "<text x=\"" << left - 6 << "\" y=\"" << format_fixed(y(v) + 4, 1) << "\" text-anchor=\"end\">"
      << format_fixed(v, 1) << "</text>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x = left + 20.0 + 90.0 * double(i);
    const double v = rows[i].normalized_energy;
    s << "<rect x=\"" << format_fixed(x, 1) << "\" y=\"" << format_fixed(y(v), 2) << "\" width=\"60\" height=\""
      << format_fixed(bottom - y(v), 2) << "\" fill=\"#4c72b0\"/>\n";
    s << "<text x=\"" << format_fixed(x + 30, 1) << "\" y=\"" << format_fixed(y(v) - 4, 2)
      << "\" text-anchor=\"middle\">" << format_fixed(v, 2) << "</text>\n";
    s << "<text x=\"" << format_fixed(x + 30, 1) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
      << rows[i].governor << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::string cmd_compare(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  const auto dir = prepare_dir(out_dir);
  fs::create_directories(dir / "traces");
  const auto rows = compare_governors(cfg, seed, (dir / "traces").string());
  const std::string csv = compare_to_csv(rows);
  write_file(dir / "compare.csv", csv);
  write_file(dir / "compare.svg", bar_svg(rows, "energy normalized to performance"));
  ordered_json meta = metadata("compare", cfg, seed);
  meta["runs"] = cfg.runs;
  write_file(dir / "meta.json", meta.dump(2) + "\n");
  return csv;
}

// ---------------------------------------------------------------------------
// plot

namespace {

struct Series {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;  // already in [0, 1]
};

std::string line_svg(const std::vector<Series>& series, double xmax, const std::string& xlabel,
                     const std::string& title, const std::string& right_axis) {
  const double width = 800, height = 340, left = 60, right = 740, top = 40, bottom = 290;
  if (!(xmax > 0.0)) xmax = 1.0;
  auto px = [&](double x) { return format_fixed(left + (right - left) * x / xmax, 2); };
  auto py = [&](double y) { return format_fixed(bottom - (bottom - top) * y, 2); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  s << "<g id=\"axes\" stroke=\"black\">\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom << "\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom << "\"/>\n";
  s << "</g>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(v) << "\" text-anchor=\"end\">" << format_fixed(v, 1)
      << "</text>\n";
    s << "<text x=\"" << px(xmax * v) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
      << format_double(std::round(xmax * v * 1000.0) / 1000.0) << "</text>\n";
  }
  s << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 34 << "\" text-anchor=\"middle\">" << xlabel
    << "</text>\n";
  if (!right_axis.empty())
    s << "<text x=\"" << right + 6 << "\" y=\"" << top << "\">" << right_axis << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& se = series[i];
    s << "<text x=\"" << left + 10 + 130 * double(i) << "\" y=\"" << top - 6 << "\" fill=\"" << se.color << "\">"
      << se.name << "</text>\n";
    s << "<polyline class=\"series\" data-name=\"" << se.name << "\" fill=\"none\" stroke=\"" << se.color
      << "\" points=\"";
    for (std::size_t k = 0; k < se.points.size(); ++k)
      s << (k ? " " : "") << px(se.points[k].first) << ',' << py(se.points[k].second);
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

bool is_trace_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  char magic[4] = {};
  f.read(magic, 4);
  return f.gcount() == 4 && std::string(magic, 4) == "DVTR";
}

}  // namespace

std::string trace_svg(std::span<const TraceRecord> records, const std::string& title) {
  double fmax = 0.0, tmax = 0.0;
  for (const auto& r : records) {
    fmax = std::max(fmax, double(r.freq_khz) * 1e-6);
    tmax = std::max(tmax, double(r.timestamp_us) * 1e-6);
  }
  const double fscale = fmax > 0.0 ? std::ceil(fmax * 2.0) / 2.0 : 1.0;
  Series freq{"freq (GHz/" + format_fixed(fscale, 1) + ")", "#c44e52", {}};
  Series umax{"util_max", "#4c72b0", {}};
  Series uavg{"util_avg", "#55a868", {}};
  double prev = 0.0;
  for (const auto& r : records) {
    const double end = double(r.timestamp_us) * 1e-6;
    const double f = double(r.freq_khz) * 1e-6 / fscale;
    freq.points.insert(freq.points.end(), {{prev, f}, {end, f}});
    umax.points.insert(umax.points.end(), {{prev, r.util_max_millis / 1000.0}, {end, r.util_max_millis / 1000.0}});
    uavg.points.insert(uavg.points.end(), {{prev, r.util_avg_millis / 1000.0}, {end, r.util_avg_millis / 1000.0}});
    prev = end;
  }
  return line_svg({freq, umax, uavg}, tmax, "time (s)", title, "0.0-" + format_fixed(fscale, 1) + " GHz");
}

std::string curve_svg(const std::string& curve_csv, const std::string& title) {
  std::istringstream in(curve_csv);
  std::string line;
  std::getline(in, line);
  Series reward{"mean_reward", "#4c72b0", {}};
  Series met{"deadline_met_rate", "#55a868", {}};
  double xmax = 0.0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < 5) throw std::runtime_error("malformed curve row: '" + line + "'");
    const double ep = parse_double(f[0]);
    xmax = std::max(xmax, ep);
    reward.points.emplace_back(ep, std::clamp(parse_double(f[1]), 0.0, 1.0));
    met.points.emplace_back(ep, std::clamp(parse_double(f[4]), 0.0, 1.0));
  }
  return line_svg({reward, met}, xmax, "episode", title, "");
}

std::string cmd_plot(const std::string& input_path, const std::string& out_path) {
  if (input_path.empty()) throw UsageError("plot needs an input trace or curve CSV");
  if (!fs::exists(input_path)) throw ConfigError("input '" + input_path + "' does not exist");
  std::string svg;
  std::size_t points = 0;
  if (is_trace_file(input_path)) {
    const auto trace = load_trace(input_path);
    svg = trace_svg(trace.records, fs::path(input_path).filename().string());
    points = trace.records.size();
  } else {
    const std::string text = read_file(input_path);
    svg = curve_svg(text, fs::path(input_path).filename().string());
    points = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    if (points) --points;
  }
  fs::path out = out_path.empty() ? fs::path(input_path).replace_extension(".svg") : fs::path(out_path);
  if (fs::is_directory(out)) out /= fs::path(input_path).filename().replace_extension(".svg");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file(out, svg);
  return "wrote " + out.string() + " (" + std::to_string(points) + " points)";
}

// ---------------------------------------------------------------------------
// bench

namespace {

LatencyStats stats_of(std::vector<double>& ns) {
  std::sort(ns.begin(), ns.end());
  LatencyStats s;
  for (double v : ns) s.mean_us += v / double(ns.size()) * 1e-3;
  auto pct = [&](double p) {
    const auto i = static_cast<std::size_t>(std::ceil(p * double(ns.size()))) - 1;
    return ns[std::min(i, ns.size() - 1)] * 1e-3;
  };
  s.p50_us = pct(0.50);
  s.p99_us = pct(0.99);
  return s;
}

}  // namespace

BenchReport bench_inference(const TrainedPolicy& policy, std::size_t iterations, std::uint64_t seed) {
  if (iterations == 0) throw UsageError("bench needs at least one iteration");
  using clock = std::chrono::steady_clock;
  const auto qnet = quantize(policy.net);
  const auto actions = action_values(policy.encoder.table);
  const auto actions_q = quantize_vector(actions);
  const std::size_t width = policy.net.sizes().front() - 1;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> states(iterations, std::vector<double>(width));
  for (auto& s : states)
    for (auto& v : s) v = unit(rng);

  std::vector<double> float_ns(iterations), int_ns(iterations);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto t0 = clock::now();
    const std::size_t a = greedy_action(policy.net, states[i], actions);
    const auto t1 = clock::now();
    const auto sq = quantize_vector(states[i]);
    const std::size_t b = argmax_action_int(qnet, sq, actions_q);
    const auto t2 = clock::now();
    float_ns[i] = std::chrono::duration<double, std::nano>(t1 - t0).count();
    int_ns[i] = std::chrono::duration<double, std::nano>(t2 - t1).count();
    agree += a == b ? 1 : 0;
  }
  BenchReport r;
  r.iterations = iterations;
  r.float_path = stats_of(float_ns);
  r.int_path = stats_of(int_ns);
  r.argmax_agreement = double(agree) / double(iterations);
  return r;
}

std::string cmd_bench(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t iterations,
                      const std::string& out_dir) {
  if (iterations == 0) throw UsageError("bench needs at least one iteration");
  TrainedPolicy policy;
  if (cfg.model_path.empty()) {
    policy = initial_policy(cfg.workload(), cfg.rl_table, cfg.train, seed);
  } else {
    try {
      policy = load_policy(cfg.model_path);
    } catch (const std::exception& e) {
      throw ConfigError("cannot load model '" + cfg.model_path + "': " + e.what());
    }
  }
  const auto r = bench_inference(policy, iterations, seed);

  std::ostringstream s;
  s << "path,iterations,mean_us,p50_us,p99_us\n";
  s << "float," << r.iterations << ',' << format_fixed(r.float_path.mean_us, 4) << ','
    << format_fixed(r.float_path.p50_us, 4) << ',' << format_fixed(r.float_path.p99_us, 4) << '\n';
  s << "int," << r.iterations << ',' << format_fixed(r.int_path.mean_us, 4) << ','
    << format_fixed(r.int_path.p50_us, 4) << ',' << format_fixed(r.int_path.p99_us, 4) << '\n';
  std::string text = s.str();
  text += "# argmax agreement " + format_fixed(r.argmax_agreement, 4) + "\n";
  if (r.int_path.mean_us >= r.float_path.mean_us)
    text += "# note: the integer path was not faster on this host; it also quantizes the state on every call\n";
  if (!out_dir.empty()) {
    const auto dir = prepare_dir(out_dir);
    write_file(dir / "bench.csv", s.str());
    ordered_json meta = metadata("bench", cfg, seed);
    meta["iterations"] = iterations;
    meta["argmax_agreement"] = r.argmax_agreement;
    write_file(dir / "meta.json", meta.dump(2) + "\n");
  }
  return text;
}

}  // namespace dvfs
