#include "dvfslab/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dvfslab/kv_file.hpp"
#include "dvfslab/text_util.hpp"

namespace dvfs {

namespace {

void check_cycles(const std::vector<double>& cycles, std::size_t cores, std::size_t idx, bool need_positive) {
  if (cycles.size() != cores)
    throw std::invalid_argument("phase " + std::to_string(idx) + " has " + std::to_string(cycles.size()) +
                                " cycle entries for " + std::to_string(cores) + " cores");
  bool any = false;
  for (double c : cycles) {
    if (!(c >= 0.0) || !std::isfinite(c))
      throw std::invalid_argument("phase " + std::to_string(idx) + " has a negative cycle count");
    any = any || c > 0.0;
  }
  if (need_positive && !any)
    throw std::invalid_argument("compute phase " + std::to_string(idx) + " has no work");
}

// Per-core share of a parallel section with uneven thread loads: core 0
// carries the full load, the last core 70% of it.
std::vector<double> uneven_split(std::size_t cores, double longest_gcycles) {
  std::vector<double> out(cores);
  for (std::size_t c = 0; c < cores; ++c) {
    const double frac = cores == 1 ? 1.0 : 1.0 - 0.3 * double(c) / double(cores - 1);
    out[c] = longest_gcycles * frac;
  }
  return out;
}

std::vector<double> single_thread(std::size_t cores, double gcycles) {
  std::vector<double> out(cores, 0.0);
  out[0] = gcycles;
  return out;
}

// Single-threaded read/pre-process, then multi-threaded recognition.
std::vector<Phase> face_phases(const ScenarioDims& d, double runtime_s) {
  const double prefix_s = runtime_s * (0.10 / 0.35);
  const double parallel_s = runtime_s - prefix_s;
  return {Phase::compute(single_thread(d.cores, prefix_s * d.fmax_ghz)),
          Phase::compute(uneven_split(d.cores, parallel_s * d.fmax_ghz))};
}

}  // namespace

void Workload::validate() const {
  if (!(period_s > 0.0)) throw std::invalid_argument("period_s must be positive");
  if (cores == 0) throw std::invalid_argument("workload needs at least one core");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto& p = phases[i];
    if (p.kind == PhaseKind::Compute) {
      check_cycles(p.per_core_gcycles, cores, i, true);
    } else {
      if (!(p.wall_s > 0.0)) throw std::invalid_argument("io phase " + std::to_string(i) + " needs wall_s > 0");
      if (!p.concurrent_gcycles.empty()) check_cycles(p.concurrent_gcycles, cores, i, false);
    }
  }
}

double Workload::total_gcycles() const {
  double total = 0.0;
  for (const auto& p : phases) {
    total += std::accumulate(p.per_core_gcycles.begin(), p.per_core_gcycles.end(), 0.0);
    total += std::accumulate(p.concurrent_gcycles.begin(), p.concurrent_gcycles.end(), 0.0);
  }
  return total;
}

double Workload::total_io_s() const {
  double total = 0.0;
  for (const auto& p : phases)
    if (p.kind == PhaseKind::IoWait) total += p.wall_s;
  return total;
}

std::vector<std::string> scenario_names() {
  return {"face_recog_like", "audio_recog_like", "unbalanced", "mibench_like"};
}

Workload scenario(const std::string& name, const ScenarioDims& d) {
  if (d.cores == 0) throw std::invalid_argument("scenario needs cores >= 1");
  if (!(d.deadline_s > 0) || !(d.fmax_ghz > 0)) throw std::invalid_argument("scenario durations must be positive");
  Workload w;
  w.cores = d.cores;
  w.period_s = d.deadline_s;
  if (name == "face_recog_like") {
    if (!(d.runtime_s > 0)) throw std::invalid_argument("runtime_s must be positive");
    w.phases = face_phases(d, d.runtime_s);
  } else if (name == "audio_recog_like") {
    if (!(d.io_s > 0) || !(d.concurrent_s > 0) || !(d.post_io_s > 0))
      throw std::invalid_argument("audio_recog_like durations must be positive");
    w.phases.push_back(Phase::io(d.io_s, uneven_split(d.cores, d.concurrent_s * d.fmax_ghz)));
    for (auto& p : face_phases(d, d.post_io_s)) w.phases.push_back(std::move(p));
  } else if (name == "unbalanced") {
    if (d.segments == 0 || !(d.segment_s > 0)) throw std::invalid_argument("unbalanced needs segments and segment_s");
    for (std::size_t i = 0; i < d.segments; ++i) {
      const double g = d.segment_s * d.fmax_ghz;
      w.phases.push_back(Phase::compute(i % 2 == 0 ? std::vector<double>(d.cores, g) : single_thread(d.cores, g)));
    }
  } else if (name == "mibench_like") {
    if (!(d.runtime_s > 0)) throw std::invalid_argument("runtime_s must be positive");
    w.phases.push_back(Phase::compute(std::vector<double>(d.cores, d.runtime_s * d.fmax_ghz)));
  } else {
    throw std::invalid_argument("unknown scenario '" + name + "'");
  }
  w.validate();
  return w;
}

std::string workload_to_text(const Workload& w) {
  std::ostringstream out;
  out << "cores = " << w.cores << "\n";
  out << "period_s = " << format_double(w.period_s) << "\n";
  for (const auto& p : w.phases) {
    out << "phase = ";
    if (p.kind == PhaseKind::Compute) {
      out << "compute";
      for (double c : p.per_core_gcycles) out << ' ' << format_double(c);
    } else {
      out << "io " << format_double(p.wall_s);
      if (!p.concurrent_gcycles.empty()) {
        out << " |";
        for (double c : p.concurrent_gcycles) out << ' ' << format_double(c);
      }
    }
    out << "\n";
  }
  return out.str();
}

Workload workload_from_text(const std::string& text) {
  const KvFile kv = KvFile::parse(text);
  Workload w;
  w.cores = static_cast<std::size_t>(kv.get_int("", "cores"));
  w.period_s = kv.get_double("", "period_s");
  for (const auto& line : kv.get_all("", "phase")) {
    std::istringstream in(line);
    std::string kind;
    in >> kind;
    auto read_numbers = [&in]() {
      std::vector<double> v;
      std::string tok;
      while (in >> tok) {
        if (tok == "|") break;
        v.push_back(parse_double(tok));
      }
      return v;
    };
    if (kind == "compute") {
      w.phases.push_back(Phase::compute(read_numbers()));
    } else if (kind == "io") {
      std::string wall;
      if (!(in >> wall)) throw std::invalid_argument("io phase needs a wall duration");
      std::string bar;
      std::vector<double> conc;
      if (in >> bar) {
        if (bar != "|") throw std::invalid_argument("expected '|' before concurrent cycles");
        conc = read_numbers();
      }
      w.phases.push_back(Phase::io(parse_double(wall), std::move(conc)));
    } else {
      throw std::invalid_argument("unknown phase kind '" + kind + "'");
    }
  }
  w.validate();
  return w;
}

}  // namespace dvfs
