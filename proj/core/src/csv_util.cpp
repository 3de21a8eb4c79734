#include "csv_util.hpp"

#include <charconv>
#include <cmath>

namespace pbfrec::csv {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (true) {
        std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(begin));
            break;
        }
        out.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view field, double& out) {
    field = trim(field);
    if (field.empty()) return false;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) return false;
    return std::isfinite(out);
}

bool parse_uint64(std::string_view field, std::uint64_t& out) {
    field = trim(field);
    if (field.empty()) return false;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out, 10);
    return ec == std::errc{} && ptr == last;
}

std::string format_double(double v) {
    char buf[40];
    // 17 significant digits round-trip any IEEE double.
    int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::string s(buf, static_cast<std::size_t>(n));
    // Prefer the shortest representation that still reloads exactly.
    for (int digits = 1; digits < 17; ++digits) {
        char probe[40];
        int m = std::snprintf(probe, sizeof(probe), "%.*g", digits, v);
        double back = 0.0;
        auto [ptr, ec] = std::from_chars(probe, probe + m, back);
        if (ec == std::errc{} && ptr == probe + m && back == v)
            return std::string(probe, static_cast<std::size_t>(m));
    }
    return s;
}

}  // namespace pbfrec::csv
