#pragma once

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vaot/types.hpp"

namespace vaot::io {

/// Splits one CSV line on commas; no quoting (all files here are numeric).
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& cell, const std::string& path, long line) {
  const std::string t = trim(cell);
  if (t.empty()) throw ParseError(path, line, "empty field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) throw ParseError(path, line, "not a number: '" + t + "'");
  return v;
}

inline long long parse_integer(const std::string& cell, const std::string& path, long line) {
  const std::string t = trim(cell);
  if (t.empty()) throw ParseError(path, line, "empty field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE) throw ParseError(path, line, "not an integer: '" + t + "'");
  return v;
}

/// Rows of string cells, header separated out when requested.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;  // 1-based source line of each row
  std::string path;
};

inline CsvTable read_csv(const std::string& path, bool has_header) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  CsvTable t;
  t.path = path;
  std::string line;
  long lineno = 0;
  bool header_done = !has_header;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(trim(line));
    if (!header_done) {
      for (auto& c : cells) c = trim(c);
      t.header = std::move(cells);
      header_done = true;
      continue;
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (!header_done) throw ParseError(path, 1, "missing header row");
  return t;
}

/// Numeric matrix from a CSV file; every row must have the same width.
inline Matrix read_matrix_csv(const std::string& path, bool has_header = true) {
  const CsvTable t = read_csv(path, has_header);
  if (t.rows.empty()) throw ParseError(path, has_header ? 2 : 1, "no data rows");
  const std::size_t width = has_header && !t.header.empty() ? t.header.size() : t.rows.front().size();
  Matrix m(static_cast<Index>(t.rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != width) {
      throw ParseError(path, t.line_numbers[r],
                       "expected " + std::to_string(width) + " fields, found " + std::to_string(t.rows[r].size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(t.rows[r][c], path, t.line_numbers[r]);
    }
  }
  return m;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  return os;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
  if (!header.empty() && static_cast<Index>(header.size()) != m.cols()) {
    throw DimensionError("write_matrix_csv: header width does not match " + shape_string(m));
  }
  auto os = open_for_write(path);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  if (!header.empty()) os << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
  if (!os) throw IoError("failed while writing " + path);
}

inline std::vector<std::string> numbered_header(const std::string& prefix, Index n) {
  std::vector<std::string> h;
  for (Index i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

}  // namespace vaot::io
