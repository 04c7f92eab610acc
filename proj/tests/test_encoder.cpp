#include <doctest.h>

#include <algorithm>
#include <random>

#include "dvfslab/encoder.hpp"
#include "oracles.hpp"

using namespace dvfs;

namespace {

EncoderConfig cfg_for(double deadline) {
  EncoderConfig c;
  c.deadline_s = deadline;
  return c;
}

}  // namespace

TEST_CASE("first step from the zero state") {
  const auto c = cfg_for(0.6);
  const auto s = encode_step(EncodedState::zero(c), {1.479, 1.0, 1.0, 0.02}, c);
  CHECK(s.freq_normalized == 1.0);
  CHECK(s.util_avg == 1.0);
  CHECK(s.util_max == 1.0);
  CHECK(s.u == doctest::Approx(0.02 / 0.6).epsilon(1e-15));
  CHECK(s.c == doctest::Approx(0.02 / 0.6).epsilon(1e-15));
  CHECK(s.p_at(1, 1) == doctest::Approx(0.02 / 0.6).epsilon(1e-15));
  CHECK(s.p_at(0, 0) == 0.0);
}

TEST_CASE("pure io step lands in the low interval") {
  const auto c = cfg_for(1.0);
  const auto s = encode_step(EncodedState::zero(c), {0.307, 0.0, 0.0, 0.02}, c);
  CHECK(s.u == 0.0);
  CHECK(s.c == doctest::Approx(0.02));
  CHECK(s.p_at(0, 0) == doctest::Approx(0.02));
}

TEST_CASE("interval boundaries follow util_max") {
  const auto c = cfg_for(1.0);
  CHECK(c.interval_of(0.6) == 0);
  CHECK(c.interval_of(0.6000001) == 1);
  const auto s = encode_step(EncodedState::zero(c), {0.307, 0.1, 0.9, 0.02}, c);
  CHECK(s.p_at(0, 1) == doctest::Approx(0.02));
}

TEST_CASE("encoder errors") {
  const auto c = cfg_for(1.0);
  CHECK_THROWS_AS(encode_step(EncodedState::zero(c), {1.0, 0.5, 0.5, 0.02}, c), std::invalid_argument);
  CHECK_THROWS_AS(encode_step(EncodedState::zero(c), {0.307, 0.5, 0.5, 0.0}, c), std::invalid_argument);
  EncoderConfig bad = c;
  bad.interval_edges = {0.6, 0.9};
  CHECK_THROWS(bad.validate());
  bad.interval_edges = {0.7, 0.6, 1.0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("encoder matches the reference over random sequences") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto c = cfg_for(0.9);
  c.table = FrequencyTable::jetson_full();
  c.interval_edges = {0.3, 0.6, 1.0};
  std::vector<double> freqs;
  for (const auto& l : c.table.levels()) freqs.push_back(l.ghz);
  for (int ep = 0; ep < 200; ++ep) {
    auto s = EncodedState::zero(c);
    auto o = oracle::enc_zero(freqs.size(), c.interval_edges.size());
    for (int k = 0; k < 50; ++k) {
      const double f = freqs[std::size_t(unit(rng) * double(freqs.size())) % freqs.size()];
      const double umax = unit(rng);
      const double uavg = umax * unit(rng);
      const double x = 0.02 * (0.5 + unit(rng));
      s = encode_step(s, {f, uavg, umax, x}, c);
      o = oracle::enc_step(o, freqs, c.interval_edges, c.deadline_s, f, uavg, umax, x);
      CHECK(s.u == doctest::Approx(o.u).epsilon(1e-12));
      CHECK(s.c == doctest::Approx(o.c).epsilon(1e-12));
      CHECK(s.freq_normalized == doctest::Approx(o.fnorm).epsilon(1e-12));
      for (std::size_t l = 0; l < freqs.size(); ++l)
        for (std::size_t i = 0; i < c.interval_edges.size(); ++i)
          CHECK(s.p_at(l, i) == doctest::Approx(o.p[l][i]).epsilon(1e-12));
      CHECK(std::abs(s.p_sum() - s.c) <= 1e-12);
      CHECK(s.u <= s.c + 1e-15);
    }
  }
}

TEST_CASE("reordering observations changes only the latest observation fields") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto c = cfg_for(0.6);
  std::vector<Observation> obs;
  for (int i = 0; i < 12; ++i) {
    const double umax = unit(rng);
    obs.push_back({unit(rng) < 0.5 ? 0.307 : 1.479, umax * unit(rng), umax, 0.02});
  }
  auto shuffled = obs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto a = EncodedState::zero(c), b = EncodedState::zero(c);
  for (const auto& o : obs) a = encode_step(a, o, c);
  for (const auto& o : shuffled) b = encode_step(b, o, c);
  CHECK(a.u == doctest::Approx(b.u).epsilon(1e-12));
  CHECK(a.c == doctest::Approx(b.c).epsilon(1e-12));
  for (std::size_t i = 0; i < a.p.size(); ++i) CHECK(a.p[i] == doctest::Approx(b.p[i]).epsilon(1e-12));
  CHECK(a.util_max == obs.back().util_max);
  CHECK(b.util_max == shuffled.back().util_max);
}

TEST_CASE("flattened layouts") {
  const auto c = cfg_for(0.6);
  CHECK(flattened_size(StateLayout::kCompact, 2, 2) == 6);
  CHECK(flattened_size(StateLayout::kFull, 2, 2) == 9);
  const auto z = EncodedState::zero(c);
  for (auto layout : {StateLayout::kCompact, StateLayout::kFull}) {
    const auto v = flatten(z, layout);
    CHECK(v.size() == flattened_size(layout, 2, 2));
    for (double x : v) CHECK(x == 0.0);
  }
  auto s = encode_step(z, {1.479, 0.5, 0.9, 0.02}, c);
  s = encode_step(s, {0.307, 0.2, 0.3, 0.02}, c);
  const auto compact = flatten(s, StateLayout::kCompact);
  CHECK(compact[0] == s.freq_normalized);
  CHECK(compact[1] == s.util_max);
  CHECK(compact[2] == s.u);
  CHECK(compact[3] == s.c);
  CHECK(compact[4] == doctest::Approx(s.p_at(0, 0) + s.p_at(0, 1)));
  CHECK(compact[5] == doctest::Approx(s.p_at(1, 0) + s.p_at(1, 1)));
  const auto full = flatten(s, StateLayout::kFull);
  CHECK(full[1] == s.util_avg);
  CHECK(full[2] == s.util_max);
  CHECK(full[5] == s.p_at(0, 0));
  CHECK(full[8] == s.p_at(1, 1));
  CHECK(layout_name(parse_layout("full")) == "full");
  CHECK_THROWS(parse_layout("wide"));
}

TEST_CASE("flattened components stay within bounds over an overrunning episode") {
  const auto c = cfg_for(0.6);
  auto s = EncodedState::zero(c);
  for (int k = 0; k < 31; ++k) {
    s = encode_step(s, {0.307, 1.0, 1.0, 0.02}, c);
    for (double v : flatten(s, StateLayout::kFull)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.05);
    }
  }
}
