#pragma once

// Golden vectors for the integer inference path. The file stores the float
// network and states it was generated from next to the expected integers, so
// a check never depends on a platform's random number distributions.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dvfslab/quantized.hpp"
#include "dvfslab/rl_agent.hpp"
#include "dvfslab/text_util.hpp"

namespace golden {

struct Case {
  std::vector<double> state;
  std::vector<std::int32_t> state_q;
  std::vector<std::int64_t> q;  // one per action
  std::size_t argmax = 0;
};

struct Vectors {
  std::vector<std::size_t> sizes;
  std::vector<double> params;
  std::vector<std::int32_t> params_q;
  std::vector<double> actions;
  std::vector<Case> cases;
};

inline std::string path() { return std::string(DVFSLAB_GOLDEN_DIR) + "/int_forward.txt"; }

// splitmix64, so regeneration yields the same file on every platform.
inline double next_unit(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return double(z >> 11) * 0x1.0p-53;
}

inline Vectors generate() {
  Vectors v;
  v.sizes = {7, 8, 8, 1};
  std::uint64_t s = 20240601;
  dvfs::QNet net(v.sizes);
  std::vector<double> p(net.parameter_count());
  for (auto& x : p) x = next_unit(s) * 2.0 - 1.0;
  net.set_parameters(p);
  v.params = p;
  const auto qnet = dvfs::quantize(net);
  v.params_q = qnet.parameters();
  v.actions = dvfs::action_values(dvfs::FrequencyTable::jetson2());
  const auto actions_q = dvfs::quantize_vector(v.actions);
  for (int k = 0; k < 64; ++k) {
    Case c;
    for (int i = 0; i < 6; ++i) c.state.push_back(next_unit(s));
    c.state_q = dvfs::quantize_vector(c.state);
    for (std::size_t a = 0; a < actions_q.size(); ++a) c.q.push_back(dvfs::int_forward(qnet, c.state_q, a, actions_q));
    c.argmax = dvfs::argmax_action_int(qnet, c.state_q, actions_q);
    v.cases.push_back(c);
  }
  return v;
}

template <typename T>
void put_line(std::ostream& out, const std::string& tag, const std::vector<T>& xs) {
  out << tag;
  for (const auto& x : xs) {
    if constexpr (std::is_floating_point_v<T>)
      out << ' ' << dvfs::format_double(x);
    else
      out << ' ' << x;
  }
  out << '\n';
}

inline void write(const Vectors& v, const std::string& file) {
  std::ofstream out(file);
  out << "# int_forward golden vectors: float inputs, then the expected integers\n";
  put_line(out, "sizes", v.sizes);
  put_line(out, "params", v.params);
  put_line(out, "params_q", v.params_q);
  put_line(out, "actions", v.actions);
  for (const auto& c : v.cases) {
    put_line(out, "state", c.state);
    put_line(out, "state_q", c.state_q);
    put_line(out, "q", c.q);
    out << "argmax " << c.argmax << '\n';
  }
}

inline Vectors read(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing golden file " + file);
  Vectors v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    std::vector<std::string> words;
    for (std::string w; ls >> w;) words.push_back(w);
    auto doubles = [&] {
      std::vector<double> r;
      for (auto& w : words) r.push_back(dvfs::parse_double(w));
      return r;
    };
    auto ints = [&] {
      std::vector<long long> r;
      for (auto& w : words) r.push_back(dvfs::parse_int(w));
      return r;
    };
    if (tag == "sizes") {
      for (auto x : ints()) v.sizes.push_back(std::size_t(x));
    } else if (tag == "params") {
      v.params = doubles();
    } else if (tag == "params_q") {
      for (auto x : ints()) v.params_q.push_back(std::int32_t(x));
    } else if (tag == "actions") {
      v.actions = doubles();
    } else if (tag == "state") {
      v.cases.push_back({doubles(), {}, {}, 0});
    } else if (tag == "state_q") {
      for (auto x : ints()) v.cases.back().state_q.push_back(std::int32_t(x));
    } else if (tag == "q") {
      for (auto x : ints()) v.cases.back().q.push_back(x);
    } else if (tag == "argmax") {
      v.cases.back().argmax = std::size_t(ints().at(0));
    } else {
      throw std::runtime_error("unknown golden tag '" + tag + "'");
    }
  }
  return v;
}

// Regenerates the file when DVFSLAB_REGEN_GOLDEN is set, then loads it.
inline Vectors load() {
  if (std::getenv("DVFSLAB_REGEN_GOLDEN")) write(generate(), path());
  return read(path());
}

// Number of mismatches between the stored integers and a fresh evaluation.
inline std::size_t mismatches(const Vectors& v) {
  dvfs::QNet net(v.sizes);
  net.set_parameters(v.params);
  const auto qnet = dvfs::quantize(net);
  std::size_t bad = qnet.parameters() == v.params_q ? 0 : 1;
  const auto actions_q = dvfs::quantize_vector(v.actions);
  for (const auto& c : v.cases) {
    const auto sq = dvfs::quantize_vector(c.state);
    if (sq != c.state_q) ++bad;
    for (std::size_t a = 0; a < actions_q.size(); ++a)
      if (dvfs::int_forward(qnet, c.state_q, a, actions_q) != c.q.at(a)) ++bad;
    if (dvfs::argmax_action_int(qnet, c.state_q, actions_q) != c.argmax) ++bad;
  }
  return bad;
}

}  // namespace golden
