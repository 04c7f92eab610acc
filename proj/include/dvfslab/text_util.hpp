#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dvfs {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Strict numeric parsing; throws std::invalid_argument on trailing garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Shortest decimal form that round-trips through parse_double.
std::string format_double(double v);

/// Fixed-point rendering with `digits` decimals.
std::string format_fixed(double v, int digits);

}  // namespace dvfs
