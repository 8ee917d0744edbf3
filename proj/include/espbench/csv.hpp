#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "espbench/error.hpp"

namespace espbench::csv {

/// Splits on ',' keeping empty fields. No quoting: harness payloads never contain commas.
inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Int>
std::optional<Int> try_parse_int(std::string_view s) {
  Int v{};
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::string_view column) {
  auto v = try_parse_int<Int>(s);
  if (!v) throw type_error("column " + std::string(column) + ": not an integer: '" + std::string(s) + "'");
  return *v;
}

inline bool parse_bool(std::string_view s, std::string_view column) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw type_error("column " + std::string(column) + ": not a 0/1 boolean: '" + std::string(s) + "'");
}

inline std::optional<bool> parse_optional_bool(std::string_view s, std::string_view column) {
  if (s.empty()) return std::nullopt;
  return parse_bool(s, column);
}

inline void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

inline void append_uint(std::string& out, std::uint64_t v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

/// Formats an exact rational numerator/denominator with `places` decimals, rounding half up.
inline std::string format_ratio_half_up(std::int64_t numerator, std::int64_t denominator, int places) {
  std::int64_t scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  bool negative = (numerator < 0) != (denominator < 0);
  __int128 n = numerator < 0 ? -static_cast<__int128>(numerator) : numerator;
  __int128 d = denominator < 0 ? -static_cast<__int128>(denominator) : denominator;
  __int128 scaled = (2 * n * scale + d) / (2 * d);
  auto whole = static_cast<std::int64_t>(scaled / scale);
  auto frac = static_cast<std::int64_t>(scaled % scale);
  std::string out = negative && scaled != 0 ? "-" : "";
  append_int(out, whole);
  if (places > 0) {
    std::string f = std::to_string(frac);
    out += '.';
    out.append(static_cast<std::size_t>(places) - f.size(), '0');
    out += f;
  }
  return out;
}

/// Rounds a non-negative real to two decimals, half up, rendered as "x.yy".
inline std::string format_two_decimals_half_up(double value) {
  auto hundredths = static_cast<std::int64_t>(value * 100.0 + 0.5);
  return format_ratio_half_up(hundredths, 100, 2);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw storage_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw storage_error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw storage_error("write failed for " + path);
}

inline void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw storage_error("cannot write " + path);
  out << text;
  if (!out) throw storage_error("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw storage_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace espbench::csv
