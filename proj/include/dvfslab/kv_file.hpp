#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dvfs {

/// Thrown for malformed or incomplete configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` text with optional `[section]` headers and
/// `#` comments. Keys may repeat; get_all() returns every value in order.
class KvFile {
 public:
  static KvFile parse(const std::string& text);
  static KvFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key) const;

  std::string get_string_or(const std::string& section, const std::string& key, std::string fallback) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long long get_int_or(const std::string& section, const std::string& key, long long fallback) const;

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

 private:
  // (section, key) -> values with their source line numbers
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, int>>> entries_;
};

}  // namespace dvfs
