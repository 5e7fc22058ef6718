#include "adx/text.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "adx/errors.hpp"

namespace adx::text {

std::string real(double value) {
    if (value == 0.0) return "0"; // folds -0
    return fmt::format("{:.12g}", value);
}

std::vector<std::string> split(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string_view trim(std::string_view value) {
    const auto first = value.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = value.find_last_not_of(" \t\r\n");
    return value.substr(first, last - first + 1);
}

double parse_real(std::string_view value, std::string_view field) {
    const auto trimmed = trim(value);
    double parsed = 0.0;
    const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), parsed);
    if (trimmed.empty() || ec != std::errc() || ptr != trimmed.data() + trimmed.size() || !std::isfinite(parsed)) {
        throw InputError(fmt::format("malformed number '{}' in field {}", value, field));
    }
    return parsed;
}

long long parse_int(std::string_view value, std::string_view field) {
    const auto trimmed = trim(value);
    long long parsed = 0;
    const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), parsed);
    if (trimmed.empty() || ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
        throw InputError(fmt::format("malformed integer '{}' in field {}", value, field));
    }
    return parsed;
}

} // namespace adx::text
