#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dvfs {

/// One supported operating point of the CPU package.
struct FreqLevel {
  double ghz = 0.0;
  double volts = 0.0;

  bool operator==(const FreqLevel&) const = default;
};

/// Supported (frequency, voltage) operating points, ascending by frequency.
///
/// Construction validates the table: at least two levels, strictly increasing
/// frequency, non-decreasing voltage, all values positive.
class FrequencyTable {
 public:
  explicit FrequencyTable(std::vector<FreqLevel> levels);

  /// Two-level Jetson-like table: 0.307 GHz at the low voltage, 1.479 GHz at
  /// the high voltage.
  static FrequencyTable jetson2();

  /// The thirteen Jetson-like frequencies from 0.307 to 1.479 GHz. Only the
  /// lowest one runs at the low voltage.
  static FrequencyTable jetson_full();

  std::size_t size() const { return levels_.size(); }
  const FreqLevel& operator[](std::size_t i) const { return levels_.at(i); }
  std::span<const FreqLevel> levels() const { return levels_; }
  const FreqLevel& min() const { return levels_.front(); }
  const FreqLevel& max() const { return levels_.back(); }

  /// Index of the level running at `ghz` (1e-9 GHz tolerance).
  std::optional<std::size_t> index_of(double ghz) const;

  /// Highest level with frequency <= ghz; the lowest level when none is.
  std::size_t floor_index(double ghz) const;

  /// (f - f_min) / (f_max - f_min) for level i.
  double normalized(std::size_t i) const;

  /// Stable FNV-1a hash over the canonical text form; stored in model files.
  std::uint64_t fingerprint() const;

  /// Canonical "ghz@volts, ..." text form, also accepted by parse().
  std::string to_string() const;
  static FrequencyTable parse(const std::string& text);

  bool operator==(const FrequencyTable&) const = default;

 private:
  std::vector<FreqLevel> levels_;
};

/// Calibration constants of the package power model.
///
///   P = base_board_power + static_current_per_volt * V * V
///       + switching_capacitance * V^2 * f * avg_utilization
struct PowerParams {
  double switching_capacitance = 0.6;     // alpha*C, W / (V^2 GHz)
  double static_current_per_volt = 1.2;   // I_static = k * V
  double base_board_power = 0.5;          // W, frequency independent

  /// Default calibration: idle power at 0.7 V is 64% of idle power at 1.0 V,
  /// busy power at 1.479 GHz is ~2.2x busy power at 0.307 GHz.
  static PowerParams jetson_default() { return {}; }

  double static_power(double volts) const { return static_current_per_volt * volts * volts; }

  /// Throws std::invalid_argument when a constant is negative or static power
  /// does not grow from the lowest to the highest voltage of `table`.
  void validate(const FrequencyTable& table) const;
};

double instant_power(const FreqLevel& level, double avg_utilization, const PowerParams& params);

/// Piecewise-constant interval of a simulated run.
struct PowerSegment {
  std::size_t level = 0;  // index into the FrequencyTable
  double avg_utilization = 0.0;
  double duration_s = 0.0;
};

struct EnergyReport {
  double dynamic_joules = 0.0;
  double static_joules = 0.0;
  double base_joules = 0.0;
  double total_joules = 0.0;
  double duration_s = 0.0;
  std::vector<double> level_share;  // fraction of duration spent at each level
};

/// Integrates instant_power over the segments. An empty trace yields an all
/// zero report whose level shares are zero.
EnergyReport energy_of_trace(std::span<const PowerSegment> trace, const FrequencyTable& table,
                             const PowerParams& params);

}  // namespace dvfs
