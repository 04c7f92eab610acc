#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "dvfslab/governor.hpp"

namespace dvfs {

/// Tunables mirroring the Linux sysfs names.
struct OndemandConfig {
  double up_threshold = 0.8;
  double powersave_bias = 0.0;

  void validate() const;
};

struct ConservativeConfig {
  double up_threshold = 0.8;
  double down_threshold = 0.2;
  std::size_t step_levels = 1;

  void validate() const;
};

/// One Ondemand decision: jump to max_f above the threshold, otherwise
/// min_f + (max_f - min_f) * u; discount by (1 - powersave_bias); floor to a
/// supported level.
std::size_t ondemand_next(double util, const OndemandConfig& cfg, const FrequencyTable& table);

/// One Conservative decision from the level currently applied.
std::size_t conservative_next(std::size_t current, double util, const ConservativeConfig& cfg,
                              const FrequencyTable& table);

/// Ondemand-style rule with 25% headroom: floor(1.25 * u * max_f).
std::size_t schedutil_like_next(double util, const FrequencyTable& table);

class OndemandGovernor final : public Governor {
 public:
  explicit OndemandGovernor(OndemandConfig cfg = {});
  std::string name() const override { return "ondemand"; }
  FreqLevel initial(const FrequencyTable& table) override { return table.min(); }
  FreqLevel next(const Observation& obs, const FrequencyTable& table) override {
    return table[ondemand_next(obs.util_max, cfg_, table)];
  }

 private:
  OndemandConfig cfg_;
};

class ConservativeGovernor final : public Governor {
 public:
  explicit ConservativeGovernor(ConservativeConfig cfg = {});
  std::string name() const override { return "conservative"; }
  FreqLevel initial(const FrequencyTable& table) override;
  FreqLevel next(const Observation& obs, const FrequencyTable& table) override;
  void reset() override { current_ = 0; }

 private:
  ConservativeConfig cfg_;
  std::size_t current_ = 0;
};

class SchedutilLikeGovernor final : public Governor {
 public:
  std::string name() const override { return "schedutil_like"; }
  FreqLevel initial(const FrequencyTable& table) override { return table.min(); }
  FreqLevel next(const Observation& obs, const FrequencyTable& table) override {
    return table[schedutil_like_next(obs.util_max, table)];
  }
};

/// Pins one level for the whole run.
class StaticGovernor final : public Governor {
 public:
  enum class Pin { kMax, kMin, kIndex };

  static StaticGovernor performance() { return StaticGovernor(Pin::kMax, 0, "performance"); }
  static StaticGovernor powersave() { return StaticGovernor(Pin::kMin, 0, "powersave"); }
  static StaticGovernor pinned(std::size_t level) { return StaticGovernor(Pin::kIndex, level, "pinned"); }

  std::string name() const override { return name_; }
  FreqLevel initial(const FrequencyTable& table) override { return pick(table); }
  FreqLevel next(const Observation&, const FrequencyTable& table) override { return pick(table); }

 private:
  StaticGovernor(Pin pin, std::size_t level, std::string name) : pin_(pin), level_(level), name_(std::move(name)) {}
  FreqLevel pick(const FrequencyTable& table) const;

  Pin pin_;
  std::size_t level_;
  std::string name_;
};

/// Builds a built-in governor by name: performance, powersave, ondemand,
/// conservative, schedutil_like. Throws std::invalid_argument otherwise.
std::unique_ptr<Governor> make_builtin_governor(const std::string& name, const OndemandConfig& od = {},
                                                const ConservativeConfig& cons = {});

bool is_builtin_governor(const std::string& name);

}  // namespace dvfs
