#pragma once

#include <string>
#include <string_view>

namespace pex {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a full string as double; throws pex::Error otherwise.
double parse_double(std::string_view s);

long long parse_int(std::string_view s);

}  // namespace pex
