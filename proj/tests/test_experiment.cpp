#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvfslab/experiment.hpp"

using namespace dvfs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dvfslab_exp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(DVFSLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig parse(const std::string& text) { return ExperimentConfig::from_kv(KvFile::parse(text)); }

}  // namespace

TEST_CASE("kv file parsing") {
  const auto kv = KvFile::parse("top = 1\n# comment\n[a]\nx = 2\nx = 3  \n\n[b]\ny = hello world\n");
  CHECK(kv.get_int("", "top") == 1);
  CHECK(kv.get_all("a", "x") == std::vector<std::string>{"2", "3"});
  CHECK(kv.get_string("b", "y") == "hello world");
  CHECK(kv.get_double_or("b", "z", 1.5) == 1.5);
  CHECK_THROWS_AS(kv.get_string("b", "z"), ConfigError);
  CHECK_THROWS_AS(kv.get_double("b", "y"), ConfigError);
  CHECK_THROWS_AS(KvFile::parse("[open\n"), ConfigError);
  CHECK_THROWS_AS(KvFile::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(KvFile::load("/nonexistent/file.conf"), ConfigError);
}

TEST_CASE("experiment config defaults and overrides") {
  const auto d = parse("");
  CHECK(d.scenario == "face_recog_like");
  CHECK(d.dims.deadline_s == 0.6);
  CHECK(d.rl_table == FrequencyTable::jetson2());
  CHECK(d.builtin_table == FrequencyTable::jetson_full());
  CHECK(d.sim.sampling_period_s == 0.02);

  const auto c = parse(
      "[workload]\nscenario = audio_recog_like\ndeadline_s = 1.3\nio_s = 0.9\n"
      "[governor]\ncompare = performance ondemand\ncompare = conservative\npowersave_bias = 0.3\n"
      "[train]\nseeds = 4, 5, 6\nhidden = 16 16\nlayout = full\nkeep_best = false\n"
      "[table]\nrl = 0.5@0.8, 1.0@1.0\n");
  CHECK(c.scenario == "audio_recog_like");
  CHECK(c.workload().period_s == 1.3);
  CHECK(c.compare == std::vector<std::string>{"performance", "ondemand", "conservative"});
  CHECK(c.ondemand.powersave_bias == 0.3);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5, 6});
  CHECK(c.train.hidden == std::vector<std::size_t>{16, 16});
  CHECK(c.train.layout == StateLayout::kFull);
  CHECK_FALSE(c.train.keep_best);
  CHECK(c.rl_table.size() == 2);
}

TEST_CASE("experiment config errors") {
  CHECK_THROWS_AS(parse("[workload]\ndeadline_s = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[workload]\ndeadline_s = soon\n"), ConfigError);
  CHECK_THROWS_AS(parse("[nowhere]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sim]\nperiod = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[workload]\nscenario = mystery\n"), ConfigError);
  CHECK_THROWS_AS(parse("[workload]\nfile = /no/such/workload.txt\n"), ConfigError);
  CHECK_THROWS_AS(parse("[governor]\nmodel = /no/such/model.json\n"), ConfigError);
  CHECK_THROWS_AS(parse("[table]\nrl = 1.0@1.0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[train]\ngamma = 2\n"), ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const auto& e : fs::directory_iterator(DVFSLAB_CONFIG_DIR)) {
    CAPTURE(e.path().string());
    CHECK_NOTHROW(ExperimentConfig::load(e.path().string()));
  }
}

TEST_CASE("governor construction") {
  const auto cfg = parse("");
  CHECK(make_governor("ondemand", cfg).table == FrequencyTable::jetson_full());
  CHECK_THROWS_AS(make_governor("turbo", cfg), UsageError);
  CHECK_THROWS_AS(make_governor("rl", cfg), ConfigError);
}

TEST_CASE("run command with the performance and powersave governors") {
  const auto dir = scratch("run");
  auto cfg = parse("");
  cfg.governor = "performance";
  cmd_run(cfg, 1, (dir / "perf").string());
  const auto perf = load_trace((dir / "perf" / "trace.bin").string());
  CHECK(fs::exists(dir / "perf" / "trace.csv"));
  CHECK(slurp(dir / "perf" / "result.json").find("\"completion_time_s\": 0.35") != std::string::npos);

  cfg.governor = "powersave";
  cmd_run(cfg, 1, (dir / "ps").string());
  const auto ps = load_trace((dir / "ps" / "trace.bin").string());
  CHECK(ps.records.size() > perf.records.size());
  CHECK((ps.records.back().flags & TraceFlags::kTerminal) != 0);
  CHECK((ps.records.back().flags & TraceFlags::kPastDeadline) != 0);
  CHECK(low_level_share(ps.records, FrequencyTable::jetson_full(), 0.0, 0.6) == doctest::Approx(1.0));
  CHECK(low_level_share(perf.records, FrequencyTable::jetson_full(), 0.0, 0.6) == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("compare normalizes to performance and agrees with the traces") {
  auto cfg = parse("[workload]\ndeadline_s = 0.9\n[run]\nruns = 2\n");
  const auto rows = compare_governors(cfg, 1);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    if (r.governor == "performance") CHECK(r.normalized_energy == 1.0);
    CHECK(r.deadline_met_rate >= 0.0);
    CHECK(r.deadline_met_rate <= 1.0);
    CHECK(r.trace_energy_j == doctest::Approx(r.mean_energy_j).epsilon(1e-3));
  }
  const auto csv = compare_to_csv(rows);
  CHECK(csv.rfind("governor,runs,mean_energy_j,normalized_energy", 0) == 0);

  cfg.compare = {"ondemand", "rl"};
  CHECK_THROWS_AS(compare_governors(cfg, 1), ConfigError);
}

TEST_CASE("train command is reproducible and feeds the learned governors") {
  const auto dir = scratch("train");
  auto cfg = parse("[train]\nepisodes = 15\n");
  cmd_train(cfg, {9}, (dir / "a").string());
  cmd_train(cfg, {9}, (dir / "b").string());
  CHECK(slurp(dir / "a" / "model.json") == slurp(dir / "b" / "model.json"));
  CHECK(slurp(dir / "a" / "model.qbin") == slurp(dir / "b" / "model.qbin"));
  const auto curve = slurp(dir / "a" / "curve.csv");
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 16);
  CHECK(load_quantized_model((dir / "a" / "model.qbin").string()).net.parameter_count() == 145);

  cfg.model_path = (dir / "a" / "model.json").string();
  cfg.compare = {"ondemand", "rl", "rl_int"};
  const auto rows = compare_governors(cfg, 1);
  CHECK(rows.size() == 4);
  CHECK(rows[2].mean_energy_j == doctest::Approx(rows[3].mean_energy_j));

  auto other = parse("[workload]\ndeadline_s = 0.9\n");
  other.model_path = cfg.model_path;
  CHECK_THROWS_AS(make_governor("rl", other), ConfigError);

  cmd_train(cfg, {1, 2}, (dir / "multi").string());
  CHECK(fs::exists(dir / "multi" / "model_seed1.json"));
  CHECK(fs::exists(dir / "multi" / "model_seed2.qbin"));
  const auto summary = slurp(dir / "multi" / "train_summary.csv");
  CHECK(summary.find("\n1,") < summary.find("\n2,"));

  auto zero = parse("[train]\nepisodes = 0\n");
  cmd_train(zero, {3}, (dir / "zero").string());
  CHECK(policy_from_json(slurp(dir / "zero" / "model.json")).net ==
        initial_policy(zero.workload(), zero.rl_table, zero.train, 3).net);
  fs::remove_all(dir);
}

TEST_CASE("plots are deterministic and carry one series per quantity") {
  const auto dir = scratch("plot");
  auto cfg = parse("");
  cmd_run(cfg, 1, dir.string());
  cmd_plot((dir / "trace.bin").string(), (dir / "a.svg").string());
  cmd_plot((dir / "trace.bin").string(), (dir / "b.svg").string());
  const auto svg = slurp(dir / "a.svg");
  CHECK(svg == slurp(dir / "b.svg"));
  CHECK(svg.find("data-name=\"util_max\"") != std::string::npos);
  CHECK(svg.find("data-name=\"util_avg\"") != std::string::npos);
  CHECK(svg.find("data-name=\"freq") != std::string::npos);

  TraceBuffer empty(1);
  export_trace(empty, (dir / "empty.bin").string());
  cmd_plot((dir / "empty.bin").string(), (dir / "empty.svg").string());
  CHECK(slurp(dir / "empty.svg").find("id=\"axes\"") != std::string::npos);
  CHECK_THROWS_AS(cmd_plot("", ""), UsageError);
  fs::remove_all(dir);
}

TEST_CASE("bench reports latency statistics") {
  const auto cfg = parse("");
  const auto text = cmd_bench(cfg, 1, 2000, "");
  CHECK(text.find("mean_us,p50_us,p99_us") != std::string::npos);
  CHECK(text.find("\nfloat,2000,") != std::string::npos);
  CHECK(text.find("\nint,2000,") != std::string::npos);
  CHECK_THROWS_AS(cmd_bench(cfg, 1, 0, ""), UsageError);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  const std::string out = " --out " + dir.string();
  CHECK(cli("run --governor performance" + out) == 0);
  CHECK(cli("") == 1);
  CHECK(cli("launch") == 1);
  CHECK(cli("run --governor turbo" + out) == 1);
  CHECK(cli("bench --iterations 0") == 1);
  CHECK(cli("run --config /no/such/file.conf") == 2);
  {
    std::ofstream bad(dir / "bad.conf");
    bad << "[workload]\ndeadline_s = -2\n";
  }
  CHECK(cli("run --config " + (dir / "bad.conf").string()) == 2);
  CHECK(cli("compare --governors rl" + out) == 2);
  {
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "DVTR\x01";
  }
  CHECK(cli("plot " + (dir / "junk.bin").string() + out) == 3);
  fs::remove_all(dir);
}

TEST_CASE("seed fan-out gives the same policies on any thread count") {
  auto one = parse("[train]\nepisodes = 8\n[run]\nthreads = 1\n");
  auto many = parse("[train]\nepisodes = 8\n[run]\nthreads = 3\n");
  const std::vector<std::uint64_t> seeds{5, 2, 7};
  const auto a = train_seeds(one, seeds);
  const auto b = train_seeds(many, seeds);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  CHECK(a[0].seed == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].run.policy.net == b[i].run.policy.net);
  }
}
