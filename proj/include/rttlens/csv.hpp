#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rttlens::csv {

/// Strips surrounding whitespace and a trailing CR (CRLF tolerance).
std::string_view trim(std::string_view s);

/// Splits on commas, trimming each field. The file formats used here carry no
/// quoting; fields never contain commas.
std::vector<std::string> split_line(std::string_view line);

std::string join(const std::vector<std::string>& fields);

std::optional<double> to_double(std::string_view s);
std::optional<long long> to_int(std::string_view s);

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

}  // namespace rttlens::csv
