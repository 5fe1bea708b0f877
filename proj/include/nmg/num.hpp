#pragma once

#include <string>
#include <string_view>

namespace nmg {

// Shortest decimal representation that parses back to the identical double.
// Used for every floating-point value written to CSV so that reloading a
// trace reproduces the in-memory values bit for bit.
std::string format_double(double x);

// Strict parse of the full string; throws std::invalid_argument on trailing
// garbage or empty input.
double parse_double(std::string_view s);

long long parse_int(std::string_view s);

}  // namespace nmg
