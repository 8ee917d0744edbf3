#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "espbench/csv.hpp"
#include "espbench/error.hpp"
#include "espbench/model.hpp"
#include "espbench/rng.hpp"
#include "espbench/store.hpp"

namespace espbench {

inline constexpr std::uint32_t mf01_error_threshold = 14963;
inline constexpr std::uint32_t mf03_low_threshold = 8105;

struct gen_config {
  std::uint64_t seed = 42;
  std::int64_t scale_factor = 3;
  std::int64_t workplaces_per_sf = 10;
  std::int64_t customers_per_sf = 30;
  std::int64_t orders_per_sf = 100;
  std::int64_t lines_per_order = 5;
  std::int64_t production_lines_per_order_line = 2;
  std::int64_t items = 1000;
  std::int64_t sensor_count = 60000;        // records per machine
  std::int64_t event_rate = 1000;           // sensor records per second of event time
  std::int64_t start_ts_ms = 1600000000000; // first sensor ts, epoch-aligned to a second
  std::int64_t max_active_lines = 8;        // production lines in a workplace at once
  double error_rate_mf01 = 0.005;
  double low_rate_mf03 = 0.09;
  double downtime_fraction = 0.5;

  void validate() const {
    auto positive = [](std::int64_t v, const char* name) {
      if (v < 1) throw config_error(std::string(name) + " must be >= 1");
    };
    positive(scale_factor, "scale_factor");
    positive(workplaces_per_sf, "workplaces_per_sf");
    positive(customers_per_sf, "customers_per_sf");
    positive(orders_per_sf, "orders_per_sf");
    positive(lines_per_order, "lines_per_order");
    positive(production_lines_per_order_line, "production_lines_per_order_line");
    positive(items, "items");
    positive(sensor_count, "sensor_count");
    positive(event_rate, "event_rate");
    positive(max_active_lines, "max_active_lines");
    auto probability = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw config_error(std::string(name) + " must be in [0,1]");
    };
    probability(error_rate_mf01, "error_rate_mf01");
    probability(low_rate_mf03, "low_rate_mf03");
    probability(downtime_fraction, "downtime_fraction");
  }

  std::int64_t workplace_count() const { return workplaces_per_sf * scale_factor; }

  /// Event-time span covered by each sensor stream: [start_ts_ms, run_end_ms()).
  std::int64_t run_end_ms() const { return start_ts_ms + sensor_ts_offset(sensor_count); }

  std::int64_t sensor_ts_offset(std::int64_t k) const { return k * 1000 / event_rate; }
};

/// Business tables as CSV text lines (header first), keyed by table name.
using business_files = std::map<std::string, std::vector<std::string>>;

namespace detail {
enum : std::uint64_t { seed_business = 1, seed_times = 2, seed_sensor_base = 16 };
}

inline business_files generate_business(const gen_config& cfg) {
  cfg.validate();
  rng r(mix_seed(cfg.seed, detail::seed_business));
  business_files files;
  auto schemas = business_schemas();
  for (const auto& s : schemas) files[s.name] = {s.header()};

  auto line = [](std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out += ',';
      out += f;
      first = false;
    }
    return out;
  };
  auto str = [](std::int64_t v) { return std::to_string(v); };

  const auto customers = cfg.customers_per_sf * cfg.scale_factor;
  const auto orders = cfg.orders_per_sf * cfg.scale_factor;
  const auto workplaces = cfg.workplace_count();

  for (std::int64_t c = 1; c <= customers; ++c) files["CUSTOMER"].push_back(line({str(c), "customer-" + str(c)}));
  for (std::int64_t i = 1; i <= cfg.items; ++i) {
    files["ITEM"].push_back(line({str(i), "item-" + str(i), str(r.uniform(100, 10000))}));
  }

  const std::int64_t window = std::max<std::int64_t>(cfg.run_end_ms() - cfg.start_ts_ms, 2);
  for (std::int64_t w = 1; w <= workplaces; ++w) {
    auto length = std::clamp<std::int64_t>(static_cast<std::int64_t>(cfg.downtime_fraction * static_cast<double>(window)),
                                           1, window);
    auto start = cfg.start_ts_ms + r.uniform(0, window - length);
    files["WORKPLACE"].push_back(line({str(w), "workplace-" + str(w), str(start), str(start + length)}));
  }

  for (std::int64_t o = 1; o <= orders; ++o) {
    auto entry_ts = cfg.start_ts_ms - r.uniform(86400000, 30 * 86400000LL);
    files["ORDER"].push_back(line({str(o), str(r.uniform(1, customers)), str(entry_ts)}));
    for (std::int64_t ol = 1; ol <= cfg.lines_per_order; ++ol) {
      files["ORDER_LINE"].push_back(line({str(o), str(ol), str(r.uniform(1, cfg.items)), str(r.uniform(1, 10))}));
      files["PRODUCTION_ORDER"].push_back(line({str(o), str(ol), str(cfg.start_ts_ms + r.uniform(0, 7 * 86400000LL))}));
      for (std::int64_t pol = 1; pol <= cfg.production_lines_per_order_line; ++pol) {
        files["PRODUCTION_ORDER_LINE"].push_back(line({str(o), str(ol), str(pol), str(r.uniform(1, workplaces)), "", ""}));
      }
    }
  }
  return files;
}

/// Begin/end events for every production order line, interleaved across lines:
/// at most `max_active_lines` lines are in progress at any point of the stream.
inline std::vector<production_time_record> generate_production_times(const gen_config& cfg, const business_db& db) {
  cfg.validate();
  rng r(mix_seed(cfg.seed, detail::seed_times));
  auto pending = db.production_line_keys();
  for (std::size_t i = pending.size(); i > 1; --i) {
    std::swap(pending[i - 1], pending[static_cast<std::size_t>(r.uniform(0, static_cast<std::int64_t>(i) - 1))]);
  }
  std::vector<production_time_record> out;
  out.reserve(pending.size() * 2);
  std::vector<production_line_key> active;
  std::size_t next = 0;
  auto record = [](const production_line_key& k, bool is_end) {
    return production_time_record{static_cast<std::uint32_t>(k.o_id), static_cast<std::uint32_t>(k.ol_number),
                                  static_cast<std::uint32_t>(k.pol_number), is_end};
  };
  while (next < pending.size() || !active.empty()) {
    bool can_begin = next < pending.size() && static_cast<std::int64_t>(active.size()) < cfg.max_active_lines;
    if (can_begin && (active.empty() || r.bernoulli(0.5))) {
      out.push_back(record(pending[next], false));
      active.push_back(pending[next++]);
    } else {
      auto idx = static_cast<std::size_t>(r.uniform(0, static_cast<std::int64_t>(active.size()) - 1));
      out.push_back(record(active[idx], true));
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(idx));
    }
  }
  return out;
}

/// Synthetic machine stream. mf01 and mf03 are piecewise uniform so the
/// thresholds 14,963 and 8,105 sit at exactly the configured tail probabilities.
inline std::vector<sensor_record> generate_sensor(const gen_config& cfg, std::uint32_t machine_id,
                                                  std::int64_t workplace_count) {
  cfg.validate();
  if (workplace_count < 1) throw config_error("sensor generation needs at least one workplace");
  rng r(mix_seed(cfg.seed, detail::seed_sensor_base + machine_id));
  std::vector<sensor_record> out;
  out.reserve(static_cast<std::size_t>(cfg.sensor_count));
  for (std::int64_t k = 0; k < cfg.sensor_count; ++k) {
    sensor_record s;
    s.ts = cfg.start_ts_ms + cfg.sensor_ts_offset(k);
    s.index = static_cast<std::uint64_t>(k);
    s.mf01 = static_cast<std::uint32_t>(r.bernoulli(cfg.error_rate_mf01) ? r.uniform(mf01_error_threshold + 1, 18000)
                                                                          : r.uniform(8000, mf01_error_threshold));
    s.mf02 = static_cast<std::uint32_t>(r.uniform(8000, 14963));
    s.mf03 = static_cast<std::uint32_t>(r.bernoulli(cfg.low_rate_mf03) ? r.uniform(0, mf03_low_threshold - 1)
                                                                        : r.uniform(mf03_low_threshold, 12000));
    for (auto& v : s.pc13_15) v = static_cast<std::uint32_t>(r.uniform(0, 100));
    for (auto& v : s.pc25_27) v = static_cast<std::uint32_t>(r.uniform(0, 100));
    s.res = 0;
    for (auto& b : s.bm05_10) b = r.bernoulli(0.5);
    for (std::size_t a = 0; a < sensor_aux_count; ++a) {
      if (a % 3 != 0) s.aux[a] = (a % 2) == 1;
    }
    s.workplace_id = static_cast<std::uint32_t>(r.uniform(1, workplace_count));
    out.push_back(s);
  }
  return out;
}

inline void write_business(const business_files& files, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (const auto& [table, lines] : files) csv::write_lines((directory / (table + ".csv")).string(), lines);
}

/// Writes `business/<TABLE>.csv` and `streams/{sensor1,sensor2,times}.csv` under `root`.
inline void generate_all(const gen_config& cfg, const std::filesystem::path& root) {
  auto business = generate_business(cfg);
  write_business(business, root / "business");
  business_db db;
  for (const auto& name : db.table_names()) db.import_csv(name, business.at(name));

  std::filesystem::create_directories(root / "streams");
  for (std::uint32_t machine : {1u, 2u}) {
    std::vector<std::string> lines;
    for (const auto& s : generate_sensor(cfg, machine, cfg.workplace_count())) lines.push_back(serialize_sensor(s));
    csv::write_lines((root / "streams" / ("sensor" + std::to_string(machine) + ".csv")).string(), lines);
  }
  std::vector<std::string> times;
  for (const auto& t : generate_production_times(cfg, db)) times.push_back(serialize_production_time(t));
  csv::write_lines((root / "streams" / "times.csv").string(), times);
}

}  // namespace espbench
