#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "espbench/broker.hpp"
#include "espbench/csv.hpp"
#include "espbench/engine.hpp"
#include "espbench/model.hpp"
#include "espbench/stats.hpp"
#include "espbench/store.hpp"
#include "espbench/vendor_json.hpp"

// The validator recomputes every query from the persisted input logs. It shares
// record parsing with the engine and nothing else: windows, SOS, merge order and
// number formatting are written again here so that agreement means something.

namespace espbench::validation {

inline constexpr std::uint32_t error_threshold = 14963;
inline constexpr std::uint32_t low_power_threshold = 8105;

struct expected_output {
  std::string payload;
  input_anchor anchor;
};

struct validator_params {
  engine_topics topics;
  sos_params sos;
  std::size_t q2_window_size = 500;
  std::int64_t q1_window_ms = 1000;
  clock_mode mode = clock_mode::real;
};

/// Dense reference SOS: full affinity matrix, each point's Gaussian width found by
/// bisection directly on sigma until the binding distribution's perplexity
/// (exp of its Shannon entropy) equals the target. Runs the bisection to
/// exhaustion rather than to a tolerance.
inline std::vector<double> dense_outlier_probabilities(const std::vector<std::pair<double, double>>& pts,
                                                       double perplexity) {
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  double max_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dx = pts[i].first - pts[j].first;
      double dy = pts[i].second - pts[j].second;
      d[i][j] = dx * dx + dy * dy;
      max_d = std::max(max_d, d[i][j]);
    }
  }

  std::vector<std::vector<double>> binding(n, std::vector<double>(n, 0.0));
  auto binding_row = [&](std::size_t i, double sigma, std::vector<double>& b) {
    // Subtracting the nearest dissimilarity leaves the normalised row unchanged but avoids underflow.
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) nearest = std::min(nearest, d[i][j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      b[j] = j == i ? 0.0 : std::exp(-(d[i][j] - nearest) / (2.0 * sigma * sigma));
      total += b[j];
    }
    for (auto& v : b) v /= total;
  };
  auto row_perplexity = [&](const std::vector<double>& b) {
    double h = 0.0;
    for (double v : b) {
      if (v > 0.0) h -= v * std::log(v);
    }
    return std::exp(h);
  };

  for (std::size_t i = 0; i < n; ++i) {
    auto& b = binding[i];
    double lo = 0.0;
    double hi = std::sqrt(max_d) + 1.0;
    for (int k = 0; k < 64; ++k) {
      binding_row(i, hi, b);
      if (row_perplexity(b) >= perplexity) break;
      hi *= 2.0;
    }
    for (int k = 0; k < 200; ++k) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      binding_row(i, mid, b);
      if (row_perplexity(b) < perplexity) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    if (lo > 0.0) {
      binding_row(i, 0.5 * (lo + hi), b);
    } else {
      // target not reachable from above: the limit sigma -> 0 spreads mass over the nearest ties only
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) nearest = std::min(nearest, d[i][j]);
      }
      double ties = 0.0;
      for (std::size_t j = 0; j < n; ++j) ties += (j != i && d[i][j] == nearest) ? 1.0 : 0.0;
      for (std::size_t j = 0; j < n; ++j) b[j] = (j != i && d[i][j] == nearest) ? 1.0 / ties : 0.0;
    }
  }

  std::vector<double> phi(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) phi[i] *= 1.0 - binding[j][i];
    }
  }
  return phi;
}

namespace detail {

inline std::string decimal(std::int64_t num, std::int64_t den, int places) {
  std::int64_t scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  __int128 scaled = (static_cast<__int128>(num) * scale * 2 + den) / (static_cast<__int128>(den) * 2);
  std::string whole = std::to_string(static_cast<std::int64_t>(scaled / scale));
  std::string frac = std::to_string(static_cast<std::int64_t>(scaled % scale));
  while (static_cast<int>(frac.size()) < places) frac.insert(frac.begin(), '0');
  return places ? whole + "." + frac : whole;
}

inline std::string two_decimals(double p) {
  return decimal(static_cast<std::int64_t>(std::floor(p * 100.0 + 0.5)), 100, 2);
}

inline std::vector<log_entry> entries_of(const topic_catalog& catalog, const std::string& topic) {
  if (!catalog.contains(topic)) throw missing_topic_error(topic);
  return catalog.get(topic).read_from(0);
}

}  // namespace detail

/// Expected final state of PRODUCTION_ORDER_LINE rows touched by the times stream.
struct q5_expectation {
  std::map<production_line_key, production_line_row> rows;
  std::map<production_line_key, input_anchor> last_event;
};

inline q5_expectation recompute_q5(const topic_catalog& catalog, const business_db& snapshot,
                                   const validator_params& p) {
  q5_expectation ex;
  for (const auto& e : detail::entries_of(catalog, p.topics.times)) {
    production_time_record r;
    try {
      r = parse_production_time(e.payload);
    } catch (const error&) {
      continue;
    }
    production_line_key key{r.o_id, r.ol_number, r.pol_number};
    auto it = ex.rows.find(key);
    if (it == ex.rows.end()) {
      auto row = snapshot.production_line(key);
      if (!row) continue;
      it = ex.rows.emplace(key, *row).first;
    }
    (r.is_end ? it->second.end_ts : it->second.start_ts) = e.ingestion_ts;
    ex.last_event[key] = {p.topics.times, e.offset};
  }
  return ex;
}

inline std::string production_line_csv(const production_line_row& r) {
  auto opt = [](const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); };
  return std::to_string(r.key.o_id) + "," + std::to_string(r.key.ol_number) + "," + std::to_string(r.key.pol_number) +
         "," + std::to_string(r.workplace_id) + "," + opt(r.start_ts) + "," + opt(r.end_ts);
}

inline std::vector<expected_output> recompute_expected(int query, const topic_catalog& catalog,
                                                       const business_db& snapshot, const validator_params& p) {
  std::vector<expected_output> out;
  const auto& t = p.topics;
  switch (query) {
    case 1: {
      struct bucket {
        std::uint64_t count = 0;
        std::int64_t sum = 0;
        std::uint32_t lo = std::numeric_limits<std::uint32_t>::max();
        std::uint32_t hi = 0;
        std::uint64_t last = 0;
      };
      std::map<std::int64_t, bucket> buckets;
      for (const auto& e : detail::entries_of(catalog, t.sensor1)) {
        sensor_record r;
        try {
          r = parse_sensor(e.payload);
        } catch (const error&) {
          continue;
        }
        auto key = static_cast<std::int64_t>(std::floor(static_cast<double>(r.ts) / static_cast<double>(p.q1_window_ms)));
        auto& b = buckets[key];
        ++b.count;
        b.sum += r.mf01;
        b.lo = std::min(b.lo, r.mf01);
        b.hi = std::max(b.hi, r.mf01);
        b.last = std::max(b.last, e.offset);
      }
      for (const auto& [_, b] : buckets) {
        out.push_back({detail::decimal(b.sum, static_cast<std::int64_t>(b.count), 3) + "," + std::to_string(b.lo) + "," +
                           std::to_string(b.hi) + "," + std::to_string(b.count),
                       {t.sensor1, b.last}});
      }
      break;
    }
    case 2: {
      auto entries = detail::entries_of(catalog, t.sensor1);
      std::vector<std::pair<const log_entry*, sensor_record>> parsed;
      for (const auto& e : entries) {
        try {
          parsed.emplace_back(&e, parse_sensor(e.payload));
        } catch (const error&) {
        }
      }
      const std::size_t w = p.q2_window_size;
      for (std::size_t start = 0; start + w <= parsed.size(); start += w) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = start; i < start + w; ++i) pts.emplace_back(parsed[i].second.mf01, parsed[i].second.mf02);
        auto phi = dense_outlier_probabilities(pts, p.sos.perplexity);
        input_anchor anchor{t.sensor1, parsed[start + w - 1].first->offset};
        for (std::size_t i = 0; i < w; ++i) {
          if (phi[i] >= 0.5) out.push_back({parsed[start + i].first->payload + "," + detail::two_decimals(phi[i]), anchor});
        }
      }
      break;
    }
    case 3: {
      for (const auto& e : detail::entries_of(catalog, t.sensor1)) {
        try {
          if (parse_sensor(e.payload).mf01 > error_threshold) out.push_back({e.payload, {t.sensor1, e.offset}});
        } catch (const error&) {
        }
      }
      break;
    }
    case 4: {
      struct tagged {
        std::int64_t ts;
        int stream;
        std::uint64_t offset;
        const std::string* payload;
      };
      auto s1 = detail::entries_of(catalog, t.sensor1);
      auto s2 = detail::entries_of(catalog, t.sensor2);
      std::vector<tagged> merged;
      for (const auto& e : s1) merged.push_back({e.ingestion_ts, 0, e.offset, &e.payload});
      for (const auto& e : s2) merged.push_back({e.ingestion_ts, 1, e.offset, &e.payload});
      std::sort(merged.begin(), merged.end(), [](const tagged& a, const tagged& b) {
        return std::tie(a.ts, a.stream, a.offset) < std::tie(b.ts, b.stream, b.offset);
      });
      std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> downtimes;
      for (const auto& [key, r] : snapshot.get(table_workplace).rows()) {
        downtimes[key[0]] = {std::get<std::int64_t>(r.cells[2]), std::get<std::int64_t>(r.cells[3])};
      }
      for (const auto& m : merged) {
        sensor_record r;
        try {
          r = parse_sensor(*m.payload);
        } catch (const error&) {
          continue;
        }
        auto it = downtimes.find(r.workplace_id);
        if (it == downtimes.end()) continue;
        auto [start, end] = it->second;
        bool planned = r.ts >= start && r.ts <= end;
        if (r.mf03 < low_power_threshold && !planned) {
          out.push_back({*m.payload, {m.stream == 0 ? t.sensor1 : t.sensor2, m.offset}});
        }
      }
      break;
    }
    case 5: {
      auto ex = recompute_q5(catalog, snapshot, p);
      for (const auto& [key, r] : ex.rows) out.push_back({production_line_csv(r), ex.last_event.at(key)});
      break;
    }
    default:
      throw config_error("unknown query " + std::to_string(query));
  }
  return out;
}

/// Actual Q5 output: every PRODUCTION_ORDER_LINE row that was updated or differs from the snapshot.
/// With the real clock, a timestamp is accepted (and rewritten to the expected value) when it
/// lies between the triggering record's ingestion time and the row's last update.
inline std::vector<std::string> actual_q5(const business_db& snapshot, const business_db& final_db,
                                          const std::vector<expected_output>& expected, clock_mode mode) {
  std::map<production_line_key, production_line_row> expected_rows;
  for (const auto& e : expected) {
    auto f = csv::split(e.payload);
    production_line_row r;
    r.key = {csv::parse_int<std::int64_t>(f[0], "o"), csv::parse_int<std::int64_t>(f[1], "ol"),
             csv::parse_int<std::int64_t>(f[2], "pol")};
    if (!f[4].empty()) r.start_ts = csv::parse_int<std::int64_t>(f[4], "start");
    if (!f[5].empty()) r.end_ts = csv::parse_int<std::int64_t>(f[5], "end");
    expected_rows[r.key] = r;
  }
  std::vector<std::string> out;
  for (const auto& key : final_db.production_line_keys()) {
    auto row = *final_db.production_line(key);
    auto before = snapshot.production_line(key);
    bool changed = !before || before->start_ts != row.start_ts || before->end_ts != row.end_ts ||
                   before->workplace_id != row.workplace_id;
    if (!row.update_ts && !changed) continue;
    if (mode == clock_mode::real) {
      auto it = expected_rows.find(key);
      if (it != expected_rows.end() && row.update_ts) {
        auto accept = [&](std::optional<std::int64_t>& actual, const std::optional<std::int64_t>& want) {
          if (actual && want && *actual >= *want && *actual <= *row.update_ts) actual = want;
        };
        accept(row.start_ts, it->second.start_ts);
        accept(row.end_ts, it->second.end_ts);
      }
    }
    row.update_ts.reset();
    out.push_back(production_line_csv(row));
  }
  return out;
}

struct mismatch {
  std::size_t index = 0;
  std::optional<std::string> expected;
  std::optional<std::string> actual;
};

struct validation_entry {
  int query = 0;
  std::size_t expected_count = 0;
  std::size_t actual_count = 0;
  std::size_t matched_count = 0;
  std::vector<mismatch> mismatches;  // first few only
  bool pass = false;
};

inline constexpr std::size_t max_reported_mismatches = 10;

namespace detail {

/// Q2 lines end in ",<probability>"; both sides are compared after rounding to two decimals.
inline bool q2_equal(const std::string& expected, const std::string& actual) {
  auto ce = expected.rfind(',');
  auto ca = actual.rfind(',');
  if (ce == std::string::npos || ca == std::string::npos) return expected == actual;
  if (expected.compare(0, ce, actual, 0, ca) != 0 || ce != ca) return false;
  char* end = nullptr;
  std::string es = expected.substr(ce + 1), as = actual.substr(ca + 1);
  double ev = std::strtod(es.c_str(), &end);
  if (es.empty() || *end) return false;
  double av = std::strtod(as.c_str(), &end);
  if (as.empty() || *end) return false;
  return two_decimals(ev) == two_decimals(av);
}

}  // namespace detail

/// Order-sensitive, element-wise comparison.
inline validation_entry compare(const std::vector<std::string>& expected, const std::vector<std::string>& actual,
                                int query) {
  validation_entry v;
  v.query = query;
  v.expected_count = expected.size();
  v.actual_count = actual.size();
  auto n = std::max(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    bool have_e = i < expected.size(), have_a = i < actual.size();
    bool same = have_e && have_a && (query == 2 ? detail::q2_equal(expected[i], actual[i]) : expected[i] == actual[i]);
    if (same) {
      ++v.matched_count;
    } else if (v.mismatches.size() < max_reported_mismatches) {
      v.mismatches.push_back({i, have_e ? std::optional(expected[i]) : std::nullopt,
                              have_a ? std::optional(actual[i]) : std::nullopt});
    }
  }
  v.pass = v.matched_count == v.expected_count && v.matched_count == v.actual_count;
  return v;
}

inline std::vector<std::string> payloads(const std::vector<expected_output>& xs) {
  std::vector<std::string> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.payload);
  return out;
}

struct latency_sample {
  int query = 0;
  std::uint64_t anchor_offset = 0;
  std::int64_t input_ts = 0;
  std::int64_t result_ts = 0;
  std::int64_t latency_ms = 0;
};

/// One sample per output. Q1-Q4 take the result time from the result topic;
/// Q5 takes it from the row update, cross-checked against scan_updates().
inline std::vector<latency_sample> compute_latencies(int query, const topic_catalog& catalog,
                                                     const std::vector<output_anchor>& anchors,
                                                     const business_db& final_db, const engine_topics& topics) {
  std::vector<latency_sample> out;
  auto resolve = [&](const input_anchor& a) {
    if (!catalog.contains(a.topic)) throw dangling_anchor_error("anchor topic missing: " + a.topic);
    const auto& log = catalog.get(a.topic);
    if (a.offset >= log.size()) {
      throw dangling_anchor_error(a.topic + " has no offset " + std::to_string(a.offset));
    }
    return log.at(a.offset);
  };
  auto sample = [&](std::uint64_t offset, std::int64_t in_ts, std::int64_t res_ts) {
    if (res_ts < in_ts) {
      throw dangling_anchor_error("result precedes its input at offset " + std::to_string(offset));
    }
    out.push_back({query, offset, in_ts, res_ts, res_ts - in_ts});
  };

  if (query >= 1 && query <= 4) {
    const auto& result_topic = topics.results[static_cast<std::size_t>(query - 1)];
    if (!catalog.contains(result_topic)) throw missing_topic_error(result_topic);
    const auto& results = catalog.get(result_topic);
    if (anchors.size() != results.size()) {
      throw dangling_anchor_error(result_topic + ": " + std::to_string(results.size()) + " outputs but " +
                                  std::to_string(anchors.size()) + " anchors");
    }
    for (const auto& a : anchors) {
      if (a.output_index >= results.size()) throw dangling_anchor_error("no output at " + std::to_string(a.output_index));
      auto input = resolve(a.input);
      sample(a.input.offset, input.ingestion_ts, results.at(a.output_index).ingestion_ts);
    }
    return out;
  }

  std::map<production_line_key, std::int64_t> last_update;
  for (const auto& a : anchors) {
    auto input = resolve(a.input);
    auto r = parse_production_time(input.payload);
    last_update[{r.o_id, r.ol_number, r.pol_number}] = a.result_ts;
    sample(a.input.offset, input.ingestion_ts, a.result_ts);
  }
  for (const auto& r : final_db.scan_updates(table_production_order_line, std::numeric_limits<std::int64_t>::min())) {
    auto row = business_db::to_production_line(r);
    auto it = last_update.find(row.key);
    if (it == last_update.end() || it->second != *row.update_ts) {
      throw dangling_anchor_error("row update at " + std::to_string(*row.update_ts) + " has no matching anchor");
    }
  }
  return out;
}

struct query_report {
  validation_entry validation;
  std::vector<latency_sample> samples;
  std::optional<latency_stats> latency;  // empty when there were no outputs
};

struct run_report {
  std::map<int, query_report> queries;

  bool all_pass() const {
    return std::all_of(queries.begin(), queries.end(), [](const auto& kv) { return kv.second.validation.pass; });
  }
};

/// Seconds with three decimals from an exact millisecond ratio.
inline std::string seconds(std::int64_t ms_num, std::int64_t ms_den = 1) { return detail::decimal(ms_num, ms_den * 1000, 3); }

inline nlohmann::ordered_json summary_json(const run_report& report) {
  nlohmann::ordered_json j;
  j["verdict"] = report.all_pass() ? "PASS" : "FAIL";
  j["queries"] = nlohmann::ordered_json::object();
  for (const auto& [q, r] : report.queries) {
    nlohmann::ordered_json qj;
    const auto& v = r.validation;
    qj["verdict"] = v.pass ? "PASS" : "FAIL";
    qj["expected"] = v.expected_count;
    qj["actual"] = v.actual_count;
    qj["matched"] = v.matched_count;
    qj["mismatches"] = nlohmann::ordered_json::array();
    for (const auto& m : v.mismatches) {
      qj["mismatches"].push_back({{"index", m.index},
                                  {"expected", m.expected ? nlohmann::ordered_json(*m.expected) : nullptr},
                                  {"actual", m.actual ? nlohmann::ordered_json(*m.actual) : nullptr}});
    }
    if (r.latency) {
      const auto& l = *r.latency;
      qj["latency"] = {{"samples", l.count},
                       {"min_s", seconds(l.min_ms)},
                       {"max_s", seconds(l.max_ms)},
                       {"mean_s", seconds(l.sum_ms, static_cast<std::int64_t>(l.count))},
                       {"p90_s", seconds(l.p90_ms)}};
    } else {
      qj["latency"] = "n/a";
    }
    j["queries"]["q" + std::to_string(q)] = qj;
  }
  return j;
}

inline std::string summary_table(const run_report& report) {
  std::string out = "query  verdict  expected  actual  matched  min_s     max_s     mean_s    p90_s\n";
  char buf[256];
  for (const auto& [q, r] : report.queries) {
    const auto& v = r.validation;
    std::string mn = "n/a", mx = "n/a", me = "n/a", p9 = "n/a";
    if (r.latency) {
      mn = seconds(r.latency->min_ms);
      mx = seconds(r.latency->max_ms);
      me = seconds(r.latency->sum_ms, static_cast<std::int64_t>(r.latency->count));
      p9 = seconds(r.latency->p90_ms);
    }
    std::snprintf(buf, sizeof(buf), "q%-5d %-8s %-9zu %-7zu %-8zu %-9s %-9s %-9s %s\n", q, v.pass ? "PASS" : "FAIL",
                  v.expected_count, v.actual_count, v.matched_count, mn.c_str(), mx.c_str(), me.c_str(), p9.c_str());
    out += buf;
  }
  out += std::string("overall: ") + (report.all_pass() ? "PASS" : "FAIL") + "\n";
  return out;
}

/// Writes `latencies-q{n}.csv` per query plus `summary.json` and `summary.txt`.
inline std::vector<std::filesystem::path> emit_reports(const run_report& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw storage_error("cannot create " + directory.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& [q, r] : report.queries) {
    std::vector<std::string> lines{"anchor_offset,input_ts_ms,result_ts_ms,latency_ms"};
    for (const auto& s : r.samples) {
      lines.push_back(std::to_string(s.anchor_offset) + "," + std::to_string(s.input_ts) + "," +
                      std::to_string(s.result_ts) + "," + std::to_string(s.latency_ms));
    }
    auto path = directory / ("latencies-q" + std::to_string(q) + ".csv");
    csv::write_lines(path.string(), lines);
    paths.push_back(path);
  }
  auto json_path = directory / "summary.json";
  csv::write_text(json_path.string(), summary_json(report).dump(2) + "\n");
  auto txt_path = directory / "summary.txt";
  csv::write_text(txt_path.string(), summary_table(report));
  paths.push_back(json_path);
  paths.push_back(txt_path);
  return paths;
}

/// Inputs of one validation pass, all loaded from a run directory or held in memory.
struct validation_inputs {
  const topic_catalog* catalog = nullptr;
  const business_db* snapshot = nullptr;  // pre-run state (Q4 reads, Q5 baseline)
  const business_db* final_db = nullptr;  // post-run state (Q5 writes)
  std::map<int, std::vector<output_anchor>> anchors;
};

inline run_report validate(const std::set<int>& queries, const validation_inputs& in, const validator_params& p) {
  run_report report;
  for (int q : queries) {
    query_report r;
    auto expected = recompute_expected(q, *in.catalog, *in.snapshot, p);
    std::vector<std::string> actual;
    if (q == 5) {
      actual = actual_q5(*in.snapshot, *in.final_db, expected, p.mode);
    } else {
      const auto& topic = p.topics.results[static_cast<std::size_t>(q - 1)];
      for (const auto& e : detail::entries_of(*in.catalog, topic)) actual.push_back(e.payload);
    }
    r.validation = compare(payloads(expected), actual, q);
    auto it = in.anchors.find(q);
    static const std::vector<output_anchor> none;
    r.samples = compute_latencies(q, *in.catalog, it == in.anchors.end() ? none : it->second, *in.final_db, p.topics);
    if (!r.samples.empty()) {
      std::vector<std::int64_t> ms;
      for (const auto& s : r.samples) ms.push_back(s.latency_ms);
      r.latency = aggregate(ms);
    }
    report.queries[q] = std::move(r);
  }
  return report;
}

}  // namespace espbench::validation
