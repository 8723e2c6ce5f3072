#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hjb/errors.hpp"

namespace hjb::csv {

/// Round-trip-safe decimal: 17 significant digits.
inline std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return c;
        }
        throw InvalidData("csv: missing column '" + std::string(name) + "'");
    }

    bool has_column(std::string_view name) const {
        for (const auto& h : header) {
            if (h == name) return true;
        }
        return false;
    }

    std::vector<double> values(std::string_view name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidData("csv: cannot open '" + path + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw InvalidData("csv: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw InvalidData("csv: '" + path + "' line " + std::to_string(line_no) +
                              " has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(t.header.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw InvalidData("csv: '" + path + "' line " + std::to_string(line_no) +
                                  ": not a number: '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Writes header and rows with LF line endings.
class Writer {
public:
    Writer(const std::string& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) throw InvalidData("csv: cannot write '" + path + "'");
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c) out_ << ',';
            out_ << header[c];
        }
        out_ << '\n';
    }

    void row(std::initializer_list<double> cells) {
        bool first = true;
        for (double v : cells) {
            if (!first) out_ << ',';
            out_ << format(v);
            first = false;
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out_ << ',';
            out_ << format(cells[c]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

}  // namespace hjb::csv
