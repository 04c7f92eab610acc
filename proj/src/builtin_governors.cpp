#include "dvfslab/builtin_governors.hpp"

#include <algorithm>
#include <stdexcept>

namespace dvfs {

namespace {
bool unit(double v) { return v >= 0.0 && v <= 1.0; }
}  // namespace

void OndemandConfig::validate() const {
  if (!unit(up_threshold) || !unit(powersave_bias))
    throw std::invalid_argument("up_threshold and powersave_bias must lie in [0, 1]");
}

void ConservativeConfig::validate() const {
  if (!unit(up_threshold) || !unit(down_threshold) || down_threshold > up_threshold)
    throw std::invalid_argument("conservative thresholds must satisfy 0 <= down <= up <= 1");
  if (step_levels == 0) throw std::invalid_argument("conservative step must be at least one level");
}

std::size_t ondemand_next(double util, const OndemandConfig& cfg, const FrequencyTable& table) {
  const double fmin = table.min().ghz;
  const double fmax = table.max().ghz;
  double next = util > cfg.up_threshold ? fmax : fmin + (fmax - fmin) * util;
  next *= 1.0 - cfg.powersave_bias;
  return table.floor_index(next);
}

std::size_t conservative_next(std::size_t current, double util, const ConservativeConfig& cfg,
                              const FrequencyTable& table) {
  const std::size_t top = table.size() - 1;
  current = std::min(current, top);
  if (util > cfg.up_threshold) return std::min(top, current + cfg.step_levels);
  if (util < cfg.down_threshold) return current >= cfg.step_levels ? current - cfg.step_levels : 0;
  return current;
}

std::size_t schedutil_like_next(double util, const FrequencyTable& table) {
  return table.floor_index(1.25 * util * table.max().ghz);
}

OndemandGovernor::OndemandGovernor(OndemandConfig cfg) : cfg_(cfg) { cfg_.validate(); }

ConservativeGovernor::ConservativeGovernor(ConservativeConfig cfg) : cfg_(cfg) { cfg_.validate(); }

FreqLevel ConservativeGovernor::initial(const FrequencyTable& table) {
  current_ = 0;
  return table[current_];
}

FreqLevel ConservativeGovernor::next(const Observation& obs, const FrequencyTable& table) {
  current_ = conservative_next(current_, obs.util_max, cfg_, table);
  return table[current_];
}

FreqLevel StaticGovernor::pick(const FrequencyTable& table) const {
  switch (pin_) {
    case Pin::kMax:
      return table.max();
    case Pin::kMin:
      return table.min();
    case Pin::kIndex:
      break;
  }
  if (level_ >= table.size()) throw std::out_of_range("pinned level outside the frequency table");
  return table[level_];
}

bool is_builtin_governor(const std::string& name) {
  return name == "performance" || name == "powersave" || name == "ondemand" || name == "conservative" ||
         name == "schedutil_like";
}

std::unique_ptr<Governor> make_builtin_governor(const std::string& name, const OndemandConfig& od,
                                                const ConservativeConfig& cons) {
  if (name == "performance") return std::make_unique<StaticGovernor>(StaticGovernor::performance());
  if (name == "powersave") return std::make_unique<StaticGovernor>(StaticGovernor::powersave());
  if (name == "ondemand") return std::make_unique<OndemandGovernor>(od);
  if (name == "conservative") return std::make_unique<ConservativeGovernor>(cons);
  if (name == "schedutil_like") return std::make_unique<SchedutilLikeGovernor>();
  throw std::invalid_argument("unknown governor '" + name + "'");
}

}  // namespace dvfs
