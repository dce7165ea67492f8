#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace ddspin {

/// Shortest round-trippable decimal form; "nan" for missing values. Keeps
/// persisted files byte-stable across runs.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    const auto end = std::to_chars(buf, buf + sizeof(buf), v).ptr;
    return std::string(buf, end);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s) {
    if (s == "nan" || s.empty()) return std::nan("");
    return std::stod(s);
}

} // namespace ddspin
