#pragma once

// Minimal CSV table with a header row. All pipeline artifacts are CSV.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coughml {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return int(i);
        return -1;
    }
    const std::string& cell(size_t row, int col) const {
        static const std::string empty;
        if (col < 0 || size_t(col) >= rows[row].size()) return empty;
        return rows[row][size_t(col)];
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open CSV: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(f, line))
        throw std::runtime_error(path + ": empty file, expected header row");
    t.header = split_csv_line(line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_csv_line(line));
    }
    return t;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write CSV: " + path);
    for (size_t i = 0; i < t.header.size(); ++i)
        f << (i ? "," : "") << csv_escape(t.header[i]);
    f << '\n';
    for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i)
            f << (i ? "," : "") << csv_escape(row[i]);
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

// Fixed-format numeric cell so identical runs are byte-identical.
inline std::string csv_num(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

}  // namespace coughml
