#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "floodml/common.hpp"

namespace floodml::csv {

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(std::string("bad number for ") + col + ": '" + s + "'", line_no);
    return v;
}

inline std::int64_t parse_int(const std::string& s, std::size_t line_no, const char* col) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(std::string("bad integer for ") + col + ": '" + s + "'", line_no);
    return v;
}

/// Reads a CSV with a mandatory header line, invoking `row` per data line with
/// the line number (1-based, counting the header).
inline void read_file(const std::filesystem::path& path, const std::string& expected_header,
                      const std::function<void(const std::vector<std::string>&, std::size_t)>& row) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty file " + path.string(), 0);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw ParseError("expected header '" + expected_header + "', got '" + line + "' in " +
                             path.string(),
                         line_no);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        row(split_line(line), line_no);
    }
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw Error("cannot write " + path.string());
    }
    void header(const std::string& h) { out_ << h << '\n'; }
    void raw_line(const std::string& line) { out_ << line << '\n'; }
    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ",") << field_str(fields), first = false), ...);
        out_ << '\n';
    }

private:
    static std::string field_str(double v) { return format_double(v); }
    static std::string field_str(int v) { return std::to_string(v); }
    static std::string field_str(std::int64_t v) { return std::to_string(v); }
    static std::string field_str(std::size_t v) { return std::to_string(v); }
    static std::string field_str(const std::string& s) { return s; }
    static std::string field_str(const char* s) { return s; }
    std::ofstream out_;
};

}  // namespace floodml::csv
