// dvfslab: run, train, compare, plot and benchmark DVFS governors on the
// simulated board.
//
// Exit codes: 0 success, 1 usage, 2 config, 3 runtime.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvfslab/experiment.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config) sub->add_option("--config", c.config, "experiment config file");
  sub->add_option("--seed", c.seed, "seed (defaults to the first of train.seeds)");
  sub->add_option("--out", c.out, "output directory (plot: output file)");
}

dvfs::ExperimentConfig load_config(const Common& c) {
  if (c.config.empty()) {
    dvfs::ExperimentConfig cfg;
    cfg.validate();
    return cfg;
  }
  return dvfs::ExperimentConfig::load(c.config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DVFS governor lab"};
  app.require_subcommand(1);

  Common c;
  std::string governor, model, input;
  std::vector<std::string> governors;
  std::optional<std::size_t> episodes, iterations;

  auto* run = app.add_subcommand("run", "simulate one task period under a governor and record its trace");
  add_common(run, c);
  run->add_option("--governor", governor, "governor name (overrides governor.name)");
  run->add_option("--model", model, "model file for rl / rl_int");

  auto* train = app.add_subcommand("train", "train the learned governor");
  add_common(train, c);
  train->add_option("--episodes", episodes, "training episodes (overrides train.episodes)");

  auto* compare = app.add_subcommand("compare", "energy and deadline table over several governors");
  add_common(compare, c);
  compare->add_option("--governors", governors, "governors to compare (overrides governor.compare)");
  compare->add_option("--model", model, "model file for rl / rl_int");

  auto* plot = app.add_subcommand("plot", "render a trace or learning curve as SVG");
  add_common(plot, c, false);
  plot->add_option("input", input, "trace .bin or curve .csv")->required();

  auto* bench = app.add_subcommand("bench", "time float and integer inference");
  add_common(bench, c);
  bench->add_option("--iterations", iterations, "forward passes to time (overrides run.bench_iterations)");
  bench->add_option("--model", model, "model file (default: a freshly initialized network)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (plot->parsed()) {
      std::cout << dvfs::cmd_plot(input, c.out) << '\n';
      return kOk;
    }

    auto cfg = load_config(c);
    if (!model.empty()) {
      cfg.model_path = model;
      cfg.validate();
    }
    const std::uint64_t seed = c.seed.value_or(cfg.seeds.front());

    if (run->parsed()) {
      if (!governor.empty()) cfg.governor = governor;
      std::cout << dvfs::cmd_run(cfg, seed, c.out) << '\n';
    } else if (train->parsed()) {
      if (episodes) cfg.episodes = *episodes;
      const auto seeds = c.seed ? std::vector<std::uint64_t>{*c.seed} : cfg.seeds;
      std::cout << dvfs::cmd_train(cfg, seeds, c.out);
    } else if (compare->parsed()) {
      if (!governors.empty()) cfg.compare = governors;
      std::cout << dvfs::cmd_compare(cfg, seed, c.out);
    } else if (bench->parsed()) {
      std::cout << dvfs::cmd_bench(cfg, seed, iterations.value_or(cfg.bench_iterations), c.out);
    }
    return kOk;
  } catch (const dvfs::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const dvfs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
