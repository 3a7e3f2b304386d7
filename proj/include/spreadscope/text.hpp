#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spreadscope::text {

std::string_view trim(std::string_view s);

/// Splits one CSV record on commas. Quoted fields are not supported; the
/// FRED exports and every file this library writes never need them.
std::vector<std::string_view> split_fields(std::string_view line);

/// Strict decimal parse of the whole field; nullopt on garbage or overflow.
std::optional<double> parse_double(std::string_view field);

/// Reads the next line, stripping a trailing '\r'. Returns false at EOF.
bool next_line(std::istream& in, std::string& line);

/// Shortest representation that round-trips to the same double.
std::string number(double v);

/// Ten significant digits, trailing zeros dropped: hides the last-bit noise
/// of midpoints and differences in human-facing output.
std::string compact(double v);

/// Fixed-point rendering with the given number of decimals.
std::string fixed(double v, int decimals);

}  // namespace spreadscope::text
