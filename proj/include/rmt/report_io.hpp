#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rmt
{

inline constexpr int report_schema_version = 1;
inline constexpr const char *lab_version = "1.0.0";

// Shortest decimal that parses back to the same double.
std::string format_double(double x);

double parse_double(std::string_view text);

// Comma-separated line of shortest round-trip decimals.
std::string csv_row(const std::vector<double> &values);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace rmt
