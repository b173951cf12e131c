#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "semsnr/error.hpp"

namespace semsnr::csv {

/// Version line written first in every CSV this project emits.
inline constexpr std::string_view version_line = "# semsnr-csv v1";

/// Round-trippable number text ("inf", "nan" for non-finite values).
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Short form for human-facing summaries.
inline std::string num6(double v) {
    if (!std::isfinite(v)) return num(v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline double parse_num(const std::string& s) {
    if (s == "nan" || s.empty()) return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(Errc::parse, "not a number: '" + s + "'");
}

/// Splits one record; fields may be double-quoted with "" as an escaped quote.
inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c != '"') out.back() += c;
            else if (i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
            else quoted = false;
        } else if (c == '"') {
            quoted = true;
        } else if (c == sep) {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    if (quoted) fail(Errc::parse, "unterminated quote in CSV record");
    return out;
}

inline std::string quote(const std::string& field) {
    if (field.find_first_of(",\"") == std::string::npos) return field;
    std::string q = "\"";
    for (char c : field) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + '"';
}

/// Header plus rows; comment lines (leading '#') are kept separately.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        fail(Errc::parse, "missing column '" + std::string(name) + "'");
    }
};

inline Table parse(std::istream& in, const std::string& what) {
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        auto fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            fail(Errc::parse, what + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                                  std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(t.header.size()));
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) fail(Errc::parse, what + ": no header row");
    return t;
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io, "cannot open '" + path + "'");
    return parse(in, path);
}

/// Checks the version comment and the exact header.
inline void expect_schema(const Table& t, const std::vector<std::string>& header, const std::string& what) {
    if (t.comments.empty() || t.comments.front() != version_line)
        fail(Errc::parse, what + ": missing '" + std::string(version_line) + "' line");
    if (t.header != header) fail(Errc::parse, what + ": unexpected header");
}

class Writer {
public:
    Writer(std::ostream& os, const std::vector<std::string>& header) : os_(os) {
        os_ << version_line << '\n';
        row(header);
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i].find_first_of("\r\n") != std::string::npos)
                fail(Errc::domain, "CSV field contains a line break: '" + fields[i] + "'");
            if (i) os_ << ',';
            os_ << quote(fields[i]);
        }
        os_ << '\n';
    }

private:
    std::ostream& os_;
};

}  // namespace semsnr::csv
