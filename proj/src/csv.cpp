#include "guidesim/csv.hpp"

#include "guidesim/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace guidesim::csv {

std::string real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    // Avoid printing "-0.000000" for tiny negatives.
    auto s = fmt::format("{:.6f}", value);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        const auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        out.emplace_back(trim(piece));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(std::string_view field, std::string_view what) {
    const auto s = trim(field);
    if (s.empty()) throw ParseError(fmt::format("{}: empty value", what));
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(fmt::format("{}: '{}' is not a number", what, s));
    }
    return value;
}

long long to_int(std::string_view field, std::string_view what) {
    const auto s = trim(field);
    if (s.empty()) throw ParseError(fmt::format("{}: empty value", what));
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(fmt::format("{}: '{}' is not an integer", what, s));
    }
    return value;
}

std::vector<std::string> lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        auto piece = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!piece.empty() && piece.back() == '\r') piece.remove_suffix(1);
        if (pos == std::string_view::npos) {
            if (!piece.empty()) out.emplace_back(piece);
            break;
        }
        out.emplace_back(piece);
        start = pos + 1;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path));
}

} // namespace guidesim::csv
