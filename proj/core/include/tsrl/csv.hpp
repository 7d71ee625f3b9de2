#pragma once

#include <string>
#include <vector>

namespace tsrl {

/// Shortest decimal representation that round-trips the exact double
/// (std::to_chars). Used for every numeric value written to CSV or
/// checkpoint files so artifacts re-parse bit-identically.
std::string format_double(double value);

/// Strict double parse of a whole field; throws std::invalid_argument.
double parse_double(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

std::string join_csv(const std::vector<std::string>& fields);

}  // namespace tsrl
