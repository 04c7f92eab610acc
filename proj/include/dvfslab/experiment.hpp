#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvfslab/builtin_governors.hpp"
#include "dvfslab/kv_file.hpp"
#include "dvfslab/quantized.hpp"
#include "dvfslab/trace.hpp"
#include "dvfslab/trainer.hpp"

namespace dvfs {

/// Bad command-line usage detected after parsing (maps to exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command needs, read from a KvFile:
///
///   [workload]  scenario, file, cores, deadline_s, runtime_s, io_s,
///               concurrent_s, post_io_s, segments, segment_s
///   [table]     rl (jetson2 | jetson_full | "ghz@v, ..."), builtin
///   [power]     switching_capacitance, static_current_per_volt, base_board_power
///   [governor]  name, model, compare (repeatable), up_threshold,
///               powersave_bias, down_threshold, step_levels
///   [sim]       sampling_period_s, jitter
///   [train]     episodes, seeds, learning_rate, gamma, batch_size,
///               target_sync_batches, draws_per_bucket, bucket_capacity,
///               hidden, layout, interval_edges, eval_runs, keep_best
///   [run]       runs, trace_capacity, bench_iterations, threads
///
/// Every key is optional; defaults reproduce the FaceRecog-like 0.6 s setting.
struct ExperimentConfig {
  std::string source_path;  // empty when built in code
  std::string source_text;

  std::string scenario = "face_recog_like";
  std::string workload_file;  // overrides the scenario when set
  ScenarioDims dims;

  FrequencyTable rl_table = FrequencyTable::jetson2();
  FrequencyTable builtin_table = FrequencyTable::jetson_full();
  PowerParams power;

  std::string governor = "ondemand";
  std::string model_path;
  std::vector<std::string> compare{"performance", "powersave", "ondemand", "conservative", "schedutil_like"};
  OndemandConfig ondemand;
  ConservativeConfig conservative;

  SimConfig sim;

  std::size_t episodes = 300;
  std::vector<std::uint64_t> seeds{1};
  TrainConfig train;

  std::size_t runs = 1;
  std::size_t trace_capacity = 360000;  // one hour at 100 Hz
  std::size_t bench_iterations = 10000;
  std::size_t threads = 0;              // 0: hardware concurrency

  /// Throws ConfigError naming the offending key.
  static ExperimentConfig from_kv(const KvFile& kv, const std::string& source_path = {},
                                  const std::string& source_text = {});
  static ExperimentConfig load(const std::string& path);

  Workload workload() const;
  void validate() const;
};

/// Governor bound to the table it runs on.
struct GovernorSetup {
  std::unique_ptr<Governor> governor;
  FrequencyTable table;
  bool learned = false;  // rl or rl_int
};

/// Builds the named governor: a built-in name, "rl" (float network from
/// cfg.model_path) or "rl_int" (the same model through the integer engine).
/// Unknown names throw UsageError; a learned governor without a readable
/// model throws ConfigError.
GovernorSetup make_governor(const std::string& name, const ExperimentConfig& cfg);

/// One episode with a trace recorded into a preallocated buffer.
struct TracedEpisode {
  EpisodeResult result;
  TraceBuffer trace;
  double reward = 0.0;
};

TracedEpisode run_traced(const Workload& workload, GovernorSetup& setup, const ExperimentConfig& cfg,
                         std::uint64_t seed);

/// Fraction of [from_s, to_s) spent at the lowest table frequency, from a
/// trace's period boundaries.
double low_level_share(std::span<const TraceRecord> records, const FrequencyTable& table, double from_s, double to_s);

// ---------------------------------------------------------------------------
// Commands. Each writes into `out_dir` (created when missing) and returns a
// short human-readable summary.

std::string cmd_run(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);

struct SeedOutcome {
  std::uint64_t seed = 0;
  TrainingRun run;
  GreedyEvaluation eval;
};

/// Trains one policy per seed (in parallel) and returns them sorted by seed.
std::vector<SeedOutcome> train_seeds(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds);

std::string cmd_train(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir);

struct CompareRow {
  std::string governor;
  std::size_t runs = 0;
  double mean_energy_j = 0.0;
  double normalized_energy = 0.0;  // over the performance governor
  double mean_completion_s = 0.0;
  double deadline_met_rate = 0.0;
  double low_share = 0.0;
  double trace_energy_j = 0.0;     // recomputed from the recorded traces
};

std::vector<CompareRow> compare_governors(const ExperimentConfig& cfg, std::uint64_t seed,
                                          const std::string& trace_dir = {});
std::string compare_to_csv(const std::vector<CompareRow>& rows);

std::string cmd_compare(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);

/// SVG of a trace (frequency, util_max, util_avg per sampling point) or of a
/// learning curve CSV. Deterministic; an empty input gives bare axes.
std::string trace_svg(std::span<const TraceRecord> records, const std::string& title);
std::string curve_svg(const std::string& curve_csv, const std::string& title);

std::string cmd_plot(const std::string& input_path, const std::string& out_path);

struct LatencyStats {
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p99_us = 0.0;
};

struct BenchReport {
  std::size_t iterations = 0;
  LatencyStats float_path;
  LatencyStats int_path;
  double argmax_agreement = 0.0;
};

BenchReport bench_inference(const TrainedPolicy& policy, std::size_t iterations, std::uint64_t seed);

std::string cmd_bench(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t iterations,
                      const std::string& out_dir);

}  // namespace dvfs
