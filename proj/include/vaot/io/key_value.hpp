#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vaot/io/csv.hpp"

namespace vaot::io {

/// Ordered `key = value` entries.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
inline KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::istringstream is(text);
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    for (const auto& [k, v] : out)
      if (k == key) throw ParseError(source, lineno, "duplicate key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline KeyValues read_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str(), path);
}

inline void write_key_values(const std::string& path, const KeyValues& kv) {
  auto os = open_for_write(path);
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
  if (!os) throw IoError("failed while writing " + path);
}

}  // namespace vaot::io
