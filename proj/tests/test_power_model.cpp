#include <doctest.h>

#include <random>
#include <stdexcept>

#include "dvfslab/power_model.hpp"

using namespace dvfs;

TEST_CASE("frequency table validation") {
  CHECK_THROWS_AS(FrequencyTable({{1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencyTable({{1.0, 1.0}, {1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencyTable({{1.0, 1.0}, {0.5, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencyTable({{0.5, 1.0}, {1.0, 0.9}}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencyTable({{0.0, 1.0}, {1.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(FrequencyTable({{0.5, 1.0}, {1.0, 1.0}}));
}

TEST_CASE("jetson tables") {
  const auto t2 = FrequencyTable::jetson2();
  REQUIRE(t2.size() == 2);
  CHECK(t2.min().ghz == doctest::Approx(0.307));
  CHECK(t2.max().ghz == doctest::Approx(1.479));
  CHECK(t2.min().volts < t2.max().volts);

  const auto full = FrequencyTable::jetson_full();
  CHECK(full.size() == 13);
  CHECK(full.min().ghz == t2.min().ghz);
  CHECK(full.max().ghz == t2.max().ghz);
  for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i].volts == full.max().volts);
}

TEST_CASE("table lookup and text form") {
  const auto t = FrequencyTable::jetson_full();
  CHECK(t.index_of(1.224).value() == 9);
  CHECK_FALSE(t.index_of(1.0).has_value());
  CHECK(t.floor_index(0.1) == 0);
  CHECK(t.floor_index(1.0) == 6);
  CHECK(t.floor_index(5.0) == 12);
  CHECK(t.normalized(0) == 0.0);
  CHECK(t.normalized(12) == 1.0);
  const auto back = FrequencyTable::parse(t.to_string());
  CHECK(back == t);
  CHECK(back.fingerprint() == t.fingerprint());
  CHECK(FrequencyTable::jetson2().fingerprint() != t.fingerprint());
  CHECK_THROWS(FrequencyTable::parse("1.0@1.0, 2.0"));
}

TEST_CASE("instant power terms") {
  const PowerParams p;
  const FreqLevel lvl{1.0, 0.9};
  CHECK(instant_power(lvl, 0.0, p) == doctest::Approx(p.base_board_power + p.static_power(0.9)));

  const FreqLevel a{0.5, 1.0}, b{1.0, 1.0};
  const double dyn_a = instant_power(a, 1.0, p) - instant_power(a, 0.0, p);
  const double dyn_b = instant_power(b, 1.0, p) - instant_power(b, 0.0, p);
  CHECK(dyn_b == doctest::Approx(2.0 * dyn_a).epsilon(1e-12));
}

TEST_CASE("default calibration idle and busy ratios") {
  const PowerParams p = PowerParams::jetson_default();
  const auto t = FrequencyTable::jetson2();
  const double idle = instant_power(t.min(), 0.0, p) / instant_power(t.max(), 0.0, p);
  CHECK(idle == doctest::Approx(0.64).epsilon(0.01 / 0.64));
  const double busy = instant_power(t.max(), 1.0, p) / instant_power(t.min(), 1.0, p);
  CHECK(busy > 1.8);
  CHECK(busy < 2.6);
  CHECK_NOTHROW(p.validate(t));
}

TEST_CASE("power is monotone in frequency, voltage and utilization") {
  const PowerParams p;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> f(0.1, 2.0), v(0.5, 1.2), u(0.0, 1.0), d(0.0, 0.2);
  for (int i = 0; i < 1000; ++i) {
    const FreqLevel base{f(rng), v(rng)};
    const double util = u(rng);
    const double now = instant_power(base, util, p);
    CHECK(instant_power({base.ghz + d(rng), base.volts}, util, p) >= now);
    CHECK(instant_power({base.ghz, base.volts + d(rng)}, util, p) >= now);
    CHECK(instant_power(base, std::min(1.0, util + d(rng)), p) >= now);
  }
}

TEST_CASE("energy of a trace") {
  const PowerParams p;
  const auto t = FrequencyTable::jetson2();

  SUBCASE("empty") {
    const auto r = energy_of_trace({}, t, p);
    CHECK(r.total_joules == 0.0);
    CHECK(r.duration_s == 0.0);
  }
  SUBCASE("one segment") {
    const std::vector<PowerSegment> s{{1, 0.4, 0.3}};
    const auto r = energy_of_trace(s, t, p);
    CHECK(r.total_joules == doctest::Approx(instant_power(t[1], 0.4, p) * 0.3).epsilon(1e-12));
    CHECK(r.total_joules == doctest::Approx(r.dynamic_joules + r.static_joules + r.base_joules).epsilon(1e-15));
  }
  SUBCASE("split and reversed traces agree") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PowerSegment> s;
    for (int i = 0; i < 50; ++i) s.push_back({std::size_t(u(rng) < 0.5), u(rng), 0.02 * u(rng)});
    const auto whole = energy_of_trace(s, t, p);
    std::vector<PowerSegment> split;
    for (const auto& seg : s) {
      split.push_back({seg.level, seg.avg_utilization, seg.duration_s * 0.25});
      split.push_back({seg.level, seg.avg_utilization, seg.duration_s * 0.75});
    }
    std::vector<PowerSegment> rev(s.rbegin(), s.rend());
    CHECK(energy_of_trace(split, t, p).total_joules == doctest::Approx(whole.total_joules).epsilon(1e-12));
    CHECK(energy_of_trace(rev, t, p).total_joules == doctest::Approx(whole.total_joules).epsilon(1e-12));
    double shares = 0.0;
    for (double x : whole.level_share) shares += x;
    CHECK(shares == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("negative duration") {
    const std::vector<PowerSegment> s{{0, 0.0, -1.0}};
    CHECK_THROWS_AS(energy_of_trace(s, t, p), std::invalid_argument);
  }
}

TEST_CASE("fixed work costs less energy at the low level") {
  const PowerParams p;
  const auto t = FrequencyTable::jetson2();
  const double gcycles = 1.0;
  const std::vector<PowerSegment> slow{{0, 1.0, gcycles / t[0].ghz}};
  const std::vector<PowerSegment> fast{{1, 1.0, gcycles / t[1].ghz}};
  CHECK(energy_of_trace(slow, t, p).dynamic_joules < energy_of_trace(fast, t, p).dynamic_joules);
  CHECK(energy_of_trace(slow, t, p).total_joules > 0.0);
}

TEST_CASE("dynamic energy of fixed work scales with f squared when V tracks f") {
  PowerParams p;
  p.static_current_per_volt = 0.0;
  p.base_board_power = 0.0;
  const double c = 0.8;  // volts per GHz
  const FrequencyTable t({{0.4, 0.4 * c}, {0.8, 0.8 * c}, {1.2, 1.2 * c}, {1.6, 1.6 * c}});
  const double gcycles = 2.0;
  const auto e = [&](std::size_t i) {
    const std::vector<PowerSegment> s{{i, 1.0, gcycles / t[i].ghz}};
    return energy_of_trace(s, t, p).dynamic_joules;
  };
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double ratio = t[i].ghz / t[0].ghz;
    CHECK(std::abs(e(i) / e(0) - ratio * ratio) <= 1e-9 * ratio * ratio);
  }
}

TEST_CASE("power params validation") {
  PowerParams p;
  p.base_board_power = -1.0;
  CHECK_THROWS(p.validate(FrequencyTable::jetson2()));
  PowerParams q;
  q.static_current_per_volt = 0.0;
  CHECK_THROWS(q.validate(FrequencyTable::jetson2()));
}
