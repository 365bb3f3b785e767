// CSV emission and parsing. Files are RFC-4180-style, UTF-8, LF line
// endings, header row first; numbers carry 17 significant digits so values
// round-trip bit-exactly.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybridsim {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Rectangular numeric table with string headers.
struct CsvTable {
  std::vector<std::string> headers;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < headers.size(); ++i) {
      if (headers[i] == name) return i;
    }
    throw std::out_of_range("csv column not found: " + name);
  }
};

inline void emit_csv(const std::string& path, const std::vector<std::string>& headers,
                     const std::vector<std::vector<double>>& rows) {
  for (const auto& r : rows) {
    if (r.size() != headers.size()) {
      throw std::invalid_argument("emit_csv: ragged rows in " + path);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (i) out << ',';
    out << headers[i];
  }
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << format_double(r[i]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) table.headers.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.headers.size()) {
      throw std::runtime_error("read_csv: ragged row in " + path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace hybridsim
