#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "espbench/clock.hpp"
#include "espbench/csv.hpp"
#include "espbench/datagen.hpp"
#include "espbench/error.hpp"
#include "espbench/sos.hpp"

namespace espbench {

struct run_config {
  std::string run_id = "r1";
  std::string topic_prefix = "esp";
  std::string output_dir = "runs";
  std::int64_t input_rate = 1000;
  std::int64_t duration_s = 60;
  std::set<int> queries{1, 2, 3, 4, 5};
  clock_mode clock = clock_mode::real;
  sos_params sos;
  std::int64_t q2_window_size = 500;
  bool sampling = false;
  std::int64_t sampling_interval_ms = 1000;
  gen_config gen;  // gen.sensor_count == 0 means input_rate * duration_s

  /// Generator settings with run-derived defaults filled in.
  gen_config effective_gen() const {
    gen_config g = gen;
    if (g.sensor_count <= 0) g.sensor_count = input_rate * duration_s;
    g.event_rate = input_rate;
    return g;
  }

  void validate() const {
    if (run_id.empty()) throw config_error("run_id must not be empty");
    for (char c : run_id) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
      if (!ok) throw config_error("run_id must match [A-Za-z0-9_.]+ (got '" + run_id + "')");
    }
    if (run_id == "." || run_id == "..") throw config_error("run_id must not be . or ..");
    if (topic_prefix.empty()) throw config_error("topic_prefix must not be empty");
    if (input_rate < 1) throw config_error("input_rate must be >= 1");
    if (duration_s < 1) throw config_error("duration_s must be >= 1");
    if (sampling_interval_ms < 1) throw config_error("sampling_interval_ms must be >= 1");
    if (q2_window_size < 2) throw config_error("q2_window_size must be >= 2");
    for (int q : queries) {
      if (q < 1 || q > 5) throw config_error("queries must be a subset of 1..5");
    }
    effective_gen().validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T config_number(std::string_view key, std::string_view value) {
  auto v = csv::try_parse_int<T>(value);
  if (!v) throw config_error(std::string(key) + ": not an integer: '" + std::string(value) + "'");
  return *v;
}

inline double config_real(std::string_view key, std::string_view value) {
  std::string s(value);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end) throw config_error(std::string(key) + ": not a number: '" + s + "'");
  return v;
}

inline std::string format_real(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

struct config_key {
  std::string name;
  std::function<void(run_config&, std::string_view)> set;
  std::function<std::string(const run_config&)> get;
};

inline const std::vector<config_key>& config_keys() {
  using rc = run_config;
  static const std::vector<config_key> keys = [] {
    std::vector<config_key> k;
    auto text = [&k](const char* name, std::string rc::*field) {
      k.push_back({name, [field](rc& c, std::string_view v) { c.*field = std::string(v); },
                   [field](const rc& c) { return c.*field; }});
    };
    auto integer = [&k](const char* name, auto getter) {
      k.push_back({name,
                   [getter, name](rc& c, std::string_view v) {
                     auto& ref = getter(c);
                     ref = config_number<std::remove_reference_t<decltype(ref)>>(name, v);
                   },
                   [getter](const rc& c) {
                     rc copy = c;
                     return std::to_string(getter(copy));
                   }});
    };
    auto real = [&k](const char* name, auto getter) {
      k.push_back({name, [getter, name](rc& c, std::string_view v) { getter(c) = config_real(name, v); },
                   [getter](const rc& c) {
                     rc copy = c;
                     return format_real(getter(copy));
                   }});
    };
    text("run_id", &rc::run_id);
    text("topic_prefix", &rc::topic_prefix);
    text("output_dir", &rc::output_dir);
    integer("seed", [](rc& c) -> std::uint64_t& { return c.gen.seed; });
    integer("scale_factor", [](rc& c) -> std::int64_t& { return c.gen.scale_factor; });
    integer("input_rate", [](rc& c) -> std::int64_t& { return c.input_rate; });
    integer("duration_s", [](rc& c) -> std::int64_t& { return c.duration_s; });
    k.push_back({"queries",
                 [](rc& c, std::string_view v) {
                   c.queries.clear();
                   for (auto part : csv::split(v)) {
                     part = trim(part);
                     if (part.empty()) continue;
                     c.queries.insert(config_number<int>("queries", part));
                   }
                 },
                 [](const rc& c) {
                   std::string s;
                   for (int q : c.queries) s += (s.empty() ? "" : ",") + std::to_string(q);
                   return s;
                 }});
    k.push_back({"clock",
                 [](rc& c, std::string_view v) {
                   if (v == "real") {
                     c.clock = clock_mode::real;
                   } else if (v == "logical") {
                     c.clock = clock_mode::logical;
                   } else {
                     throw config_error("clock must be real or logical");
                   }
                 },
                 [](const rc& c) { return std::string(to_string(c.clock)); }});
    real("sos_perplexity", [](rc& c) -> double& { return c.sos.perplexity; });
    real("sos_tolerance", [](rc& c) -> double& { return c.sos.tolerance; });
    integer("sos_max_iterations", [](rc& c) -> int& { return c.sos.max_iterations; });
    integer("q2_window_size", [](rc& c) -> std::int64_t& { return c.q2_window_size; });
    k.push_back({"sampling",
                 [](rc& c, std::string_view v) {
                   if (v == "on" || v == "true" || v == "1") {
                     c.sampling = true;
                   } else if (v == "off" || v == "false" || v == "0") {
                     c.sampling = false;
                   } else {
                     throw config_error("sampling must be on or off");
                   }
                 },
                 [](const rc& c) { return std::string(c.sampling ? "on" : "off"); }});
    integer("sampling_interval_ms", [](rc& c) -> std::int64_t& { return c.sampling_interval_ms; });
    integer("workplaces_per_sf", [](rc& c) -> std::int64_t& { return c.gen.workplaces_per_sf; });
    integer("customers_per_sf", [](rc& c) -> std::int64_t& { return c.gen.customers_per_sf; });
    integer("orders_per_sf", [](rc& c) -> std::int64_t& { return c.gen.orders_per_sf; });
    integer("lines_per_order", [](rc& c) -> std::int64_t& { return c.gen.lines_per_order; });
    integer("production_lines_per_order_line",
            [](rc& c) -> std::int64_t& { return c.gen.production_lines_per_order_line; });
    integer("items", [](rc& c) -> std::int64_t& { return c.gen.items; });
    integer("sensor_count", [](rc& c) -> std::int64_t& { return c.gen.sensor_count; });
    integer("start_ts_ms", [](rc& c) -> std::int64_t& { return c.gen.start_ts_ms; });
    integer("max_active_lines", [](rc& c) -> std::int64_t& { return c.gen.max_active_lines; });
    real("error_rate_mf01", [](rc& c) -> double& { return c.gen.error_rate_mf01; });
    real("low_rate_mf03", [](rc& c) -> double& { return c.gen.low_rate_mf03; });
    real("downtime_fraction", [](rc& c) -> double& { return c.gen.downtime_fraction; });
    return k;
  }();
  return keys;
}

}  // namespace detail

/// A run config whose sensor_count defaults to input_rate * duration_s.
inline run_config default_run_config() {
  run_config c;
  c.gen.sensor_count = 0;
  return c;
}

inline void set_config_value(run_config& cfg, std::string_view key, std::string_view value) {
  for (const auto& k : detail::config_keys()) {
    if (k.name == key) {
      k.set(cfg, detail::trim(value));
      return;
    }
  }
  throw config_error("unknown config key '" + std::string(key) + "'");
}

/// Flat `key = value` lines; `#` starts a comment.
inline void apply_config_text(run_config& cfg, std::string_view text) {
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto body = detail::trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(cfg, detail::trim(body.substr(0, eq)), body.substr(eq + 1));
  }
}

inline run_config parse_run_config(std::string_view text) {
  auto cfg = default_run_config();
  apply_config_text(cfg, text);
  return cfg;
}

inline std::string serialize_run_config(const run_config& cfg) {
  std::string out;
  for (const auto& k : detail::config_keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace espbench
