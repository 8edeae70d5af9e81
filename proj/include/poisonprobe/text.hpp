#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace poisonprobe {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);
std::optional<double> parse_double(std::string_view s);

/// Splits on runs of spaces and tabs.
std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split_on(std::string_view s, char sep);

}  // namespace poisonprobe
