#pragma once

// Deterministic text artifacts.  Every number renders through "%.12g" and
// nothing here reads the clock, so identical inputs give byte-identical
// files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gexp::io {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string num(long v) { return std::to_string(v); }

// Minimal CSV quoting: only when a cell contains a separator or quote.
inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}

  void row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
      throw std::logic_error("csv row arity mismatch");
    rows.push_back(std::move(cells));
  }

  std::string render() const {
    std::string out;
    for (size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += csv_cell(columns[c]);
    }
    out += '\n';
    for (const auto& r : rows) {
      for (size_t c = 0; c < r.size(); ++c) {
        if (c) out += ',';
        out += csv_cell(r[c]);
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text(const std::filesystem::path& p,
                       const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
  f << content;
  if (content.empty() || content.back() != '\n') f << '\n';
  f.close();
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace gexp::io
