#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "berezin/error.hpp"

namespace berezin::detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline bool try_parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    if (!try_parse_double(s, v)) throw ConfigError("expected a number, got '" + std::string(s) + "'");
    return v;
}

inline long parse_int(std::string_view s) {
    s = trim(s);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("expected an integer, got '" + std::string(s) + "'");
    return v;
}

// Number, optionally suffixed by "pi" ("pi", "0.5pi", "-1.5pi").
inline double parse_scalar(std::string_view s) {
    constexpr double pi = 3.14159265358979323846;
    s = trim(s);
    if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
        auto head = trim(s.substr(0, s.size() - 2));
        if (head.empty() || head == "+") return pi;
        if (head == "-") return -pi;
        if (head.back() == '*') head.remove_suffix(1);
        return parse_double(head) * pi;
    }
    return parse_double(s);
}

inline std::vector<double> parse_scalars(std::string_view s) {
    std::vector<double> out;
    for (auto& t : split(s, ',')) out.push_back(parse_scalar(t));
    return out;
}

}  // namespace berezin::detail
