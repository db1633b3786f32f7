#pragma once

#include <string>
#include <string_view>

namespace vrgq {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse; throws ParameterError on trailing junk or empty input.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

} // namespace vrgq
