#pragma once

// Small text-format helpers shared by the dataset directory format, CSV
// emission, and config files: shortest round-trip double formatting and
// `key = value` line parsing.

#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "graphuq/errors.hpp"

namespace graphuq {

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw IoError(context + ": cannot parse real number from '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
  long long v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw IoError(context + ": cannot parse integer from '" + std::string(s) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Parses `key = value` lines (also accepts `key=value`); blank lines and
// lines starting with '#' are skipped.  Later keys override earlier ones.
inline std::map<std::string, std::string> parse_kv_text(std::istream& in,
                                                        const std::string& context) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string_view::npos)
      throw IoError(context + ": expected 'key = value', got '" + std::string(t) + "'");
    const std::string key{trim(t.substr(0, eq))};
    const std::string value{trim(t.substr(eq + 1))};
    if (key.empty()) throw IoError(context + ": empty key in '" + std::string(t) + "'");
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_kv_text(in, path);
}

}  // namespace graphuq
