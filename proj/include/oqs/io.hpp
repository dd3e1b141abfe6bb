#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "oqs/common.hpp"

namespace oqs {

// All numeric output funnels through one fixed conversion so runs are
// byte-identical across repeats.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

inline std::string fmt_int(long x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%ld", x);
  return std::string(buf);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void row(std::vector<std::string> r) {
    if (r.size() != columns.size()) throw NumericError("table row width mismatch");
    rows.push_back(std::move(r));
  }
};

inline void write_csv(std::ostream& os, const Table& t) {
  for (size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << "\n";
  for (const auto& r : t.rows) {
    for (size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << "\n";
  }
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += ch;
    }
  }
  return out;
}

// Cells holding finite decimal tokens are emitted as bare json numbers,
// everything else as strings.
inline bool bare_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(v);
}

}  // namespace detail

inline void write_json(std::ostream& os, const Table& t, const std::string& command,
                       const std::string& hash) {
  os << "{\"version\":\"" << kVersion << "\",\"command\":\"" << detail::json_escape(command)
     << "\",\"config_hash\":\"" << hash << "\",\"columns\":[";
  for (size_t c = 0; c < t.columns.size(); ++c)
    os << (c ? "," : "") << '"' << detail::json_escape(t.columns[c]) << '"';
  os << "],\"rows\":[";
  for (size_t r = 0; r < t.rows.size(); ++r) {
    os << (r ? ",\n" : "\n") << '[';
    for (size_t c = 0; c < t.rows[r].size(); ++c) {
      const std::string& cell = t.rows[r][c];
      os << (c ? "," : "");
      if (detail::bare_number(cell))
        os << cell;
      else
        os << '"' << detail::json_escape(cell) << '"';
    }
    os << ']';
  }
  os << "\n]}\n";
}

}  // namespace oqs
