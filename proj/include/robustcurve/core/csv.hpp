#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace robustcurve::core {

/// Splits one comma-separated line. Quoting is not supported; fields are
/// trimmed of surrounding spaces and a trailing '\r'.
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Strict parse of a full field as a double; nullopt-like failure is reported
/// by returning false.
bool parse_number(std::string_view text, double& out);

}  // namespace robustcurve::core
