#include <doctest.h>

#include <cmath>
#include <random>

#include "dvfslab/quantized.hpp"
#include "dvfslab/rl_agent.hpp"
#include "dvfslab/simulator.hpp"
#include "dvfslab/trainer.hpp"
#include "golden.hpp"

using namespace dvfs;

TEST_CASE("quantize boundaries") {
  CHECK(quantize_value(0.0) == 0);
  CHECK(quantize_value(10.0) == 1073741824);
  CHECK(quantize_value(-10.0) == -1073741824);
  CHECK_THROWS_AS(quantize_value(10.000001), std::out_of_range);
  CHECK_THROWS_AS(quantize_value(std::nan("")), std::out_of_range);
}

TEST_CASE("rounding is half away from zero") {
  // 10 / 2^30 is one unit; half a unit rounds outward.
  const double unit = 10.0 / double(kQuantOne);
  CHECK(quantize_value(0.5 * unit) == 1);
  CHECK(quantize_value(-0.5 * unit) == -1);
  CHECK(quantize_value(0.49 * unit) == 0);
  // 2^28 * 10 / 2^30 = 2.5 exactly.
  CHECK(rescale_product(std::int64_t{1} << 28) == 3);
  CHECK(rescale_product(-(std::int64_t{1} << 28)) == -3);
  CHECK(rescale_product((std::int64_t{1} << 28) - 1) == 2);
  CHECK(rescale_product(kQuantOne * kQuantOne / 10) == kQuantOne);
}

TEST_CASE("round trip error stays within one unit") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  for (int i = 0; i < 100000; ++i) {
    const double v = d(rng);
    CHECK(std::abs(dequantize_value(quantize_value(v)) - v) <= 10.0 / double(kQuantOne));
  }
}

TEST_CASE("out of range parameters are named") {
  QNet net({7, 8, 8, 1});
  net.layers()[1].biases[3] = 12.5;
  try {
    quantize(net);
    FAIL("expected an exception");
  } catch (const std::out_of_range& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layer 1") != std::string::npos);
    CHECK(msg.find("bias[3]") != std::string::npos);
  }
}

TEST_CASE("zero and identity networks") {
  const QNet zero({7, 8, 8, 1});
  const auto qz = quantize(zero);
  const auto actions_q = quantize_vector(action_values(FrequencyTable::jetson2()));
  const std::vector<std::int32_t> s(6, 12345);
  CHECK(int_forward(qz, s, 0, actions_q) == 0);
  CHECK(int_forward(qz, s, 1, actions_q) == 0);
  CHECK(argmax_action_int(qz, s, actions_q) == 0);

  QNet echo({7, 1});
  echo.layers()[0].weights.back() = 1.0;
  const auto qe = quantize(echo);
  CHECK(int_forward(qe, s, 1, actions_q) == actions_q[1]);
  CHECK(int_forward(qe, s, 0, actions_q) == actions_q[0]);
}

TEST_CASE("short dot product stays within a few quanta of the float path") {
  QNet net({3, 1});
  net.layers()[0].weights = {0.5, 0.25, -2.0};
  net.layers()[0].biases = {1.0};
  const auto q = quantize(net);
  const std::vector<double> x{0.5, 0.75, 0.125};
  const auto xq = quantize_vector(x);
  CHECK(std::abs(dequantize_value(q.forward(xq)) - net.forward(x)) <= 4.0 / kQuantScale);
}

TEST_CASE("integer and float paths agree on random states") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto actions = action_values(FrequencyTable::jetson2());
  const auto actions_q = quantize_vector(actions);
  const auto net = QNet::random({7, 8, 8, 1}, rng, 0.5);
  const auto qnet = quantize(net);
  int agree = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    std::vector<double> s(6);
    for (auto& v : s) v = unit(rng);
    const auto sq = quantize_vector(s);
    for (std::size_t a = 0; a < actions.size(); ++a)
      CHECK(std::abs(dequantize_value(int_forward(qnet, sq, a, actions_q)) - net.q(s, actions[a])) <= 1e-3);
    agree += argmax_action_int(qnet, sq, actions_q) == greedy_action(net, s, actions) ? 1 : 0;
  }
  CHECK(double(agree) / n >= 0.999);
}

TEST_CASE("dimension checks") {
  const auto q = quantize(QNet({7, 8, 8, 1}));
  const auto actions_q = quantize_vector(action_values(FrequencyTable::jetson2()));
  CHECK_THROWS_AS(int_forward(q, std::vector<std::int32_t>(5), 0, actions_q), std::invalid_argument);
  CHECK_THROWS_AS(int_forward(q, std::vector<std::int32_t>(6), 2, actions_q), std::out_of_range);
  CHECK(q.parameter_count() == 145);
}

TEST_CASE("quantized model file") {
  std::mt19937_64 rng(5);
  const QuantizedModelFile m{StateLayout::kCompact, quantize(QNet::random({7, 8, 8, 1}, rng))};
  const auto bytes = encode_quantized_model(m);
  CHECK(bytes.size() == 4 + 2 + 1 + 1 + 4 * 4 + 4 + 4 + 4 + 4 * 145);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DVQN");
  const auto back = decode_quantized_model(bytes);
  CHECK(back.net == m.net);
  CHECK(back.layout == m.layout);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS(decode_quantized_model(truncated));
  auto wrong_version = bytes;
  wrong_version[4] = 9;
  CHECK_THROWS(decode_quantized_model(wrong_version));
  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  CHECK_THROWS(decode_quantized_model(wrong_magic));
}

TEST_CASE("quantized governor matches the float governor on a workload") {
  const auto w = scenario("face_recog_like", {});
  const auto policy = train_governor(w, FrequencyTable::jetson2(), {}, TrainConfig{}, 30, 3).policy;
  auto fg = policy.governor();
  QuantizedRlGovernor qg(quantize(policy.net), policy.encoder, policy.layout);
  const auto a = run_episode(w, fg, FrequencyTable::jetson2(), {}, {});
  const auto b = run_episode(w, qg, FrequencyTable::jetson2(), {}, {});
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].level == b.steps[i].level);
  CHECK(qg.name() == "rl_int");
}

TEST_CASE("golden vectors are bit exact") {
  const auto v = golden::load();
  REQUIRE(v.cases.size() == 64);
  CHECK(golden::mismatches(v) == 0);
}
