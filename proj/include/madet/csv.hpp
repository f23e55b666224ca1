#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "madet/util.hpp"

namespace madet {

// Minimal CSV: comma separated, first row is the header, no quoting. Fields
// written by this project never contain commas (run-length blobs use ';').
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return int(i);
        return -1;
    }
    int require_column(const std::string& name, const std::string& file) const {
        int c = column(name);
        if (c < 0) throw input_error(file + ": missing column '" + name + "'");
        return c;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
        auto cells = split(line, ',');
        if (first) {
            for (auto& c : cells) t.header.push_back(trim(c));
            first = false;
        } else {
            for (auto& c : cells) c = trim(c);
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw input_error(path + ": empty CSV");
    return t;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
    if (!out) throw input_error("write failed: " + path);
}

}  // namespace madet
