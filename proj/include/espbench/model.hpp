#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "espbench/csv.hpp"
#include "espbench/error.hpp"

namespace espbench {

inline constexpr std::size_t sensor_field_count = 67;
inline constexpr std::size_t sensor_aux_count = 48;
inline constexpr std::size_t production_time_field_count = 4;

/// One machine measurement. Column order: ts, index, mf01-mf03, pc13-pc15,
/// pc25-pc27, res, bm05-bm10, 48 optional flags (pp01-pp36, pc01-pc06,
/// pc19-pc24), workplace_id.
struct sensor_record {
  std::int64_t ts = 0;  // ms since epoch
  std::uint64_t index = 0;
  std::uint32_t mf01 = 0;
  std::uint32_t mf02 = 0;
  std::uint32_t mf03 = 0;
  std::array<std::uint32_t, 3> pc13_15{};
  std::array<std::uint32_t, 3> pc25_27{};
  std::uint32_t res = 0;
  std::array<bool, 6> bm05_10{};
  std::array<std::optional<bool>, sensor_aux_count> aux{};
  std::uint32_t workplace_id = 1;

  friend bool operator==(const sensor_record&, const sensor_record&) = default;
};

struct production_time_record {
  std::uint32_t o_id = 0;
  std::uint32_t ol_number = 0;
  std::uint32_t pol_number = 0;
  bool is_end = false;

  friend bool operator==(const production_time_record&, const production_time_record&) = default;
};

/// Position of an input record in the broker: the record whose ingestion time anchors a latency.
struct input_anchor {
  std::string topic;
  std::uint64_t offset = 0;

  friend bool operator==(const input_anchor&, const input_anchor&) = default;
};

struct query_output_record {
  int query_id = 0;
  std::string payload;
  input_anchor anchor;
  std::int64_t result_ts = 0;

  friend bool operator==(const query_output_record&, const query_output_record&) = default;
};

inline std::string serialize_sensor(const sensor_record& r) {
  std::string out;
  out.reserve(200);
  auto field = [&out](std::uint64_t v) {
    csv::append_uint(out, v);
    out += ',';
  };
  csv::append_int(out, r.ts);
  out += ',';
  field(r.index);
  field(r.mf01);
  field(r.mf02);
  field(r.mf03);
  for (auto v : r.pc13_15) field(v);
  for (auto v : r.pc25_27) field(v);
  field(r.res);
  for (bool b : r.bm05_10) out += b ? "1," : "0,";
  for (const auto& a : r.aux) {
    if (a) out += *a ? '1' : '0';
    out += ',';
  }
  csv::append_uint(out, r.workplace_id);
  return out;
}

inline sensor_record parse_sensor(std::string_view line) {
  auto f = csv::split(line);
  if (f.size() != sensor_field_count) {
    throw field_count_error("sensor record has " + std::to_string(f.size()) + " fields, expected 67");
  }
  sensor_record r;
  r.ts = csv::parse_int<std::int64_t>(f[0], "ts");
  r.index = csv::parse_int<std::uint64_t>(f[1], "index");
  r.mf01 = csv::parse_int<std::uint32_t>(f[2], "mf01");
  r.mf02 = csv::parse_int<std::uint32_t>(f[3], "mf02");
  r.mf03 = csv::parse_int<std::uint32_t>(f[4], "mf03");
  for (std::size_t i = 0; i < 3; ++i) r.pc13_15[i] = csv::parse_int<std::uint32_t>(f[5 + i], "pc13-pc15");
  for (std::size_t i = 0; i < 3; ++i) r.pc25_27[i] = csv::parse_int<std::uint32_t>(f[8 + i], "pc25-pc27");
  r.res = csv::parse_int<std::uint32_t>(f[11], "res");
  for (std::size_t i = 0; i < 6; ++i) r.bm05_10[i] = csv::parse_bool(f[12 + i], "bm05-bm10");
  for (std::size_t i = 0; i < sensor_aux_count; ++i) r.aux[i] = csv::parse_optional_bool(f[18 + i], "aux");
  r.workplace_id = csv::parse_int<std::uint32_t>(f[66], "workplace_id");
  if (r.workplace_id == 0) throw type_error("column workplace_id: must be positive");
  return r;
}

inline std::string serialize_production_time(const production_time_record& r) {
  std::string out;
  csv::append_uint(out, r.o_id);
  out += ',';
  csv::append_uint(out, r.ol_number);
  out += ',';
  csv::append_uint(out, r.pol_number);
  out += r.is_end ? ",1" : ",0";
  return out;
}

inline production_time_record parse_production_time(std::string_view line) {
  auto f = csv::split(line);
  if (f.size() != production_time_field_count) {
    throw field_count_error("production time record has " + std::to_string(f.size()) + " fields, expected 4");
  }
  production_time_record r;
  r.o_id = csv::parse_int<std::uint32_t>(f[0], "pt_o_id");
  r.ol_number = csv::parse_int<std::uint32_t>(f[1], "pt_ol_number");
  r.pol_number = csv::parse_int<std::uint32_t>(f[2], "pt_pol_number");
  r.is_end = csv::parse_bool(f[3], "pt_is_end");
  return r;
}

}  // namespace espbench
