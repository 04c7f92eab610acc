#include "dvfslab/kv_file.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dvfslab/text_util.hpp"

namespace dvfs {

KvFile KvFile::parse(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv.entries_[{section, key}].emplace_back(trim(t.substr(eq + 1)), lineno);
  }
  return kv;
}

KvFile KvFile::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool KvFile::has(const std::string& section, const std::string& key) const {
  return entries_.count({section, key}) > 0;
}

std::optional<std::string> KvFile::get(const std::string& section, const std::string& key) const {
  const auto it = entries_.find({section, key});
  if (it == entries_.end()) return std::nullopt;
  return it->second.back().first;
}

std::vector<std::string> KvFile::get_all(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  const auto it = entries_.find({section, key});
  if (it != entries_.end())
    for (const auto& [v, line] : it->second) out.push_back(v);
  return out;
}

namespace {
std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}
}  // namespace

std::string KvFile::get_string(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) throw ConfigError("missing required key '" + where(section, key) + "'");
  return *v;
}

double KvFile::get_double(const std::string& section, const std::string& key) const {
  const auto s = get_string(section, key);
  try {
    return parse_double(s);
  } catch (const std::invalid_argument&) {
    throw ConfigError("key '" + where(section, key) + "' is not a number: '" + s + "'");
  }
}

long long KvFile::get_int(const std::string& section, const std::string& key) const {
  const auto s = get_string(section, key);
  try {
    return parse_int(s);
  } catch (const std::invalid_argument&) {
    throw ConfigError("key '" + where(section, key) + "' is not an integer: '" + s + "'");
  }
}

std::string KvFile::get_string_or(const std::string& section, const std::string& key, std::string fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double KvFile::get_double_or(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long KvFile::get_int_or(const std::string& section, const std::string& key, long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<std::string> KvFile::sections() const {
  std::set<std::string> s;
  for (const auto& [k, v] : entries_) s.insert(k.first);
  return {s.begin(), s.end()};
}

std::vector<std::string> KvFile::keys(const std::string& section) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k.first == section) out.push_back(k.second);
  return out;
}

}  // namespace dvfs
