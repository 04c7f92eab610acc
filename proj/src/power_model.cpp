#include "dvfslab/power_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dvfslab/text_util.hpp"

namespace dvfs {

namespace {
constexpr double kLowVolts = 0.7;
constexpr double kHighVolts = 1.0;
// 1 Hz of slack so that arithmetic landing a hair under a level still selects it.
constexpr double kFloorSlackGhz = 1e-9;
}  // namespace

FrequencyTable::FrequencyTable(std::vector<FreqLevel> levels) : levels_(std::move(levels)) {
  if (levels_.size() < 2) throw std::invalid_argument("frequency table needs at least 2 levels");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto& l = levels_[i];
    if (!(l.ghz > 0.0) || !(l.volts > 0.0) || !std::isfinite(l.ghz) || !std::isfinite(l.volts))
      throw std::invalid_argument("frequency table level " + std::to_string(i) + " is not positive");
    if (i > 0) {
      if (!(l.ghz > levels_[i - 1].ghz))
        throw std::invalid_argument("frequency table must be strictly increasing in frequency");
      if (l.volts < levels_[i - 1].volts)
        throw std::invalid_argument("frequency table voltage must be non-decreasing");
    }
  }
}

FrequencyTable FrequencyTable::jetson2() {
  return FrequencyTable({{0.307, kLowVolts}, {1.479, kHighVolts}});
}

FrequencyTable FrequencyTable::jetson_full() {
  const double ghz[] = {0.307, 0.4032, 0.5184, 0.6144, 0.7104, 0.8256, 0.9216,
                        1.0368, 1.1328, 1.224, 1.326, 1.428, 1.479};
  std::vector<FreqLevel> levels;
  for (double f : ghz) levels.push_back({f, f == 0.307 ? kLowVolts : kHighVolts});
  return FrequencyTable(std::move(levels));
}

std::optional<std::size_t> FrequencyTable::index_of(double ghz) const {
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (std::abs(levels_[i].ghz - ghz) <= 1e-9) return i;
  return std::nullopt;
}

std::size_t FrequencyTable::floor_index(double ghz) const {
  std::size_t best = 0;
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (levels_[i].ghz <= ghz + kFloorSlackGhz) best = i;
  return best;
}

double FrequencyTable::normalized(std::size_t i) const {
  return (levels_.at(i).ghz - min().ghz) / (max().ghz - min().ghz);
}

std::string FrequencyTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (i) out += ", ";
    out += format_double(levels_[i].ghz) + "@" + format_double(levels_[i].volts);
  }
  return out;
}

FrequencyTable FrequencyTable::parse(const std::string& text) {
  std::vector<FreqLevel> levels;
  for (const auto& item : split(text, ',')) {
    const auto t = trim(item);
    if (t.empty()) continue;
    const auto at = t.find('@');
    if (at == std::string::npos) throw std::invalid_argument("level '" + t + "' is not ghz@volts");
    levels.push_back({parse_double(t.substr(0, at)), parse_double(t.substr(at + 1))});
  }
  return FrequencyTable(std::move(levels));
}

std::uint64_t FrequencyTable::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_string()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void PowerParams::validate(const FrequencyTable& table) const {
  if (switching_capacitance < 0 || static_current_per_volt < 0 || base_board_power < 0)
    throw std::invalid_argument("power constants must be non-negative");
  if (!(static_power(table.min().volts) < static_power(table.max().volts)))
    throw std::invalid_argument("static power must grow from the lowest to the highest voltage");
}

double instant_power(const FreqLevel& level, double avg_utilization, const PowerParams& params) {
  const double v2 = level.volts * level.volts;
  return params.base_board_power + params.static_power(level.volts) +
         params.switching_capacitance * v2 * level.ghz * avg_utilization;
}

EnergyReport energy_of_trace(std::span<const PowerSegment> trace, const FrequencyTable& table,
                             const PowerParams& params) {
  EnergyReport r;
  r.level_share.assign(table.size(), 0.0);
  for (const auto& seg : trace) {
    if (seg.duration_s < 0) throw std::invalid_argument("negative segment duration");
    const auto& lvl = table[seg.level];
    const double v2 = lvl.volts * lvl.volts;
    r.dynamic_joules += params.switching_capacitance * v2 * lvl.ghz * seg.avg_utilization * seg.duration_s;
    r.static_joules += params.static_power(lvl.volts) * seg.duration_s;
    r.base_joules += params.base_board_power * seg.duration_s;
    r.level_share[seg.level] += seg.duration_s;
    r.duration_s += seg.duration_s;
  }
  r.total_joules = r.dynamic_joules + r.static_joules + r.base_joules;
  if (r.duration_s > 0)
    for (auto& s : r.level_share) s /= r.duration_s;
  return r;
}

}  // namespace dvfs
