#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace guidesim::csv {

/// Fixed six-decimal rendering used by every CSV the tools write; NaN is "nan".
std::string real(double value);

/// Splits one CSV line on commas; fields are trimmed of surrounding blanks.
std::vector<std::string> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

/// Strict numeric parsing; throws ParseError naming `what` on failure.
double to_double(std::string_view field, std::string_view what);
long long to_int(std::string_view field, std::string_view what);

/// Splits text into lines, dropping a trailing '\r' on each.
std::vector<std::string> lines(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace guidesim::csv
