#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small helpers shared by every delimited-text reader and writer.
namespace adx::text {

// Fixed 12-significant-digit rendering used by every file the toolkit writes.
std::string real(double value);

std::vector<std::string> split(std::string_view line, char delimiter);

std::string_view trim(std::string_view value);

// Strict parses: the whole field must be consumed. Throw InputError naming
// `field` on failure.
double parse_real(std::string_view value, std::string_view field);
long long parse_int(std::string_view value, std::string_view field);

} // namespace adx::text
