#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "spade/errors.hpp"

namespace spade {

inline std::string trim_copy(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double_strict(const std::string& text, const char* what) {
  const std::string t = trim_copy(text);
  if (t.empty()) throw InvalidArgument(std::string("empty ") + what);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument(std::string("cannot parse ") + what + ": '" + t + "'");
  }
  if (pos != t.size()) {
    throw InvalidArgument(std::string("trailing junk in ") + what + ": '" + t + "'");
  }
  return v;
}

// Angles accept decimal radians or "pi/<k>" literals (k any positive number).
inline double parse_angle(const std::string& text) {
  const std::string t = trim_copy(text);
  if (t == "pi") return M_PI;
  if (t.rfind("pi/", 0) == 0) {
    const double k = parse_double_strict(t.substr(3), "angle divisor");
    if (!(k > 0.0)) throw InvalidArgument("angle divisor must be > 0");
    return M_PI / k;
  }
  return parse_double_strict(t, "angle");
}

inline std::vector<std::string> split_csv_field(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::vector<double> parse_angle_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_csv_field(text)) out.push_back(parse_angle(p));
  if (out.empty()) throw InvalidArgument("empty angle list");
  return out;
}

struct ScanRange {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
  double at(int i) const {
    if (n == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  }
};

// "lo:hi:n" with n >= 1 points, lo <= hi.
inline ScanRange parse_scan(const std::string& text) {
  const auto p1 = text.find(':');
  const auto p2 = text.rfind(':');
  if (p1 == std::string::npos || p2 == p1) {
    throw InvalidArgument("scan range must be lo:hi:n");
  }
  ScanRange r;
  r.lo = parse_double_strict(text.substr(0, p1), "scan lo");
  r.hi = parse_double_strict(text.substr(p1 + 1, p2 - p1 - 1), "scan hi");
  const double nf = parse_double_strict(text.substr(p2 + 1), "scan n");
  r.n = static_cast<int>(nf);
  if (r.n < 1 || static_cast<double>(r.n) != nf) {
    throw InvalidArgument("scan point count must be a positive integer");
  }
  if (!(r.hi >= r.lo)) throw InvalidArgument("scan range must have hi >= lo");
  return r;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Numeric CSV cell: shortest round-ish representation, negative zero folded
// into zero so equal values always print identically.
inline std::string fmt_num(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string fmt_full(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace spade
