#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "espbench/broker.hpp"
#include "espbench/clock.hpp"
#include "espbench/csv.hpp"
#include "espbench/datagen.hpp"
#include "espbench/model.hpp"
#include "espbench/sos.hpp"
#include "espbench/store.hpp"
#include "espbench/vendor_json.hpp"

namespace espbench {

inline constexpr int query_count = 5;

/// Epoch-aligned event-time window [start, start + width).
struct window_aggregate {
  std::int64_t window_start = 0;
  std::uint64_t count = 0;
  std::int64_t sum = 0;
  std::uint32_t min = 0;
  std::uint32_t max = 0;
  std::uint64_t last_offset = 0;  // last contributing input
};

/// Tumbling window over event time. A window closes when a record at or past
/// its end arrives, or at flush(). Records older than the open window are late
/// and dropped.
class tumbling_window_aggregator {
 public:
  explicit tumbling_window_aggregator(std::int64_t width_ms = 1000) : width_(width_ms) {}

  std::optional<window_aggregate> add(std::int64_t ts, std::uint32_t value, std::uint64_t offset) {
    auto start = window_start_of(ts);
    std::optional<window_aggregate> closed;
    if (open_) {
      if (start < open_->window_start) {
        ++late_;
        return std::nullopt;
      }
      if (start > open_->window_start) {
        closed = open_;
        open_.reset();
      }
    }
    if (!open_) open_ = window_aggregate{start, 0, 0, value, value, offset};
    auto& w = *open_;
    ++w.count;
    w.sum += value;
    w.min = std::min(w.min, value);
    w.max = std::max(w.max, value);
    w.last_offset = offset;
    return closed;
  }

  std::optional<window_aggregate> flush() { return std::exchange(open_, std::nullopt); }

  std::uint64_t late() const noexcept { return late_; }

  std::int64_t window_start_of(std::int64_t ts) const {
    auto q = ts / width_;
    if (ts % width_ != 0 && ts < 0) --q;
    return q * width_;
  }

 private:
  std::int64_t width_;
  std::optional<window_aggregate> open_;
  std::uint64_t late_ = 0;
};

/// "avg,min,max,count"; the mean has three decimals, rounded half up.
inline std::string format_q1(const window_aggregate& w) {
  std::string out = csv::format_ratio_half_up(w.sum, static_cast<std::int64_t>(w.count), 3);
  out += ',';
  csv::append_uint(out, w.min);
  out += ',';
  csv::append_uint(out, w.max);
  out += ',';
  csv::append_uint(out, w.count);
  return out;
}

/// Non-overlapping batches of exactly `size` items in arrival order.
template <typename T>
class count_window {
 public:
  explicit count_window(std::size_t size) : size_(size) { items_.reserve(size); }

  std::optional<std::vector<T>> add(T item) {
    items_.push_back(std::move(item));
    if (items_.size() < size_) return std::nullopt;
    std::vector<T> full;
    full.swap(items_);
    items_.reserve(size_);
    return full;
  }

  std::size_t pending() const noexcept { return items_.size(); }

 private:
  std::size_t size_;
  std::vector<T> items_;
};

inline bool is_error_reading(const sensor_record& r) { return r.mf01 > mf01_error_threshold; }

inline bool is_unplanned_low_power(const sensor_record& r, const downtime& d) {
  return r.mf03 < mf03_low_threshold && (r.ts > d.end_ms || r.ts < d.start_ms);
}

inline std::string format_q2(const std::string& sensor_line, double probability) {
  return sensor_line + "," + csv::format_two_decimals_half_up(probability);
}

struct engine_topics {
  std::string sensor1;
  std::string sensor2;
  std::string times;
  std::array<std::string, 4> results;  // q1-out .. q4-out

  static engine_topics named(const std::string& prefix, const std::string& run_id) {
    engine_topics t;
    t.sensor1 = topic_name(prefix, run_id, "sensor1");
    t.sensor2 = topic_name(prefix, run_id, "sensor2");
    t.times = topic_name(prefix, run_id, "times");
    for (int q = 1; q <= 4; ++q) t.results[q - 1] = topic_name(prefix, run_id, "q" + std::to_string(q) + "-out");
    return t;
  }
};

struct engine_params {
  engine_topics topics;
  sos_params sos;
  std::size_t q2_window_size = 500;
  std::int64_t q1_window_ms = 1000;
  clock_mode mode = clock_mode::real;
};

/// Links one query output to the input whose ingestion time anchors its latency.
struct output_anchor {
  std::uint64_t output_index = 0;  // result topic offset (Q1-Q4) or update sequence number (Q5)
  input_anchor input;
  std::int64_t result_ts = 0;

  friend bool operator==(const output_anchor&, const output_anchor&) = default;
};

struct query_summary {
  std::uint64_t inputs = 0;
  std::uint64_t outputs = 0;
  std::uint64_t dead_letters = 0;
  std::uint64_t degenerate_windows = 0;
  std::uint64_t late_records = 0;
  std::map<std::string, std::uint64_t> consumed;  // topic -> next unread offset
  std::vector<output_anchor> anchors;
};

struct engine_summary {
  std::map<int, query_summary> queries;

  std::string to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [q, s] : queries) {
      j["q" + std::to_string(q)] = {{"inputs", s.inputs},
                                    {"outputs", s.outputs},
                                    {"dead_letters", s.dead_letters},
                                    {"degenerate_windows", s.degenerate_windows},
                                    {"late_records", s.late_records},
                                    {"consumed", s.consumed}};
    }
    return j.dump(2);
  }
};

inline std::vector<std::string> anchors_to_csv(const std::vector<output_anchor>& anchors) {
  std::vector<std::string> lines{"output_index,input_topic,input_offset,result_ts_ms"};
  for (const auto& a : anchors) {
    lines.push_back(std::to_string(a.output_index) + "," + a.input.topic + "," + std::to_string(a.input.offset) + "," +
                    std::to_string(a.result_ts));
  }
  return lines;
}

inline std::vector<output_anchor> anchors_from_csv(const std::vector<std::string>& lines) {
  if (lines.empty() || lines.front() != "output_index,input_topic,input_offset,result_ts_ms") {
    throw schema_error("anchor file has an unexpected header");
  }
  std::vector<output_anchor> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = csv::split(lines[i]);
    if (f.size() != 4) throw field_count_error("anchor line " + std::to_string(i + 1));
    out.push_back({csv::parse_int<std::uint64_t>(f[0], "output_index"),
                   {std::string(f[1]), csv::parse_int<std::uint64_t>(f[2], "input_offset")},
                   csv::parse_int<std::int64_t>(f[3], "result_ts_ms")});
  }
  return out;
}

/// Reads a topic from offset 0 until it is drained and its producer has finished.
class topic_cursor {
 public:
  topic_cursor(const topic_log& log, const std::atomic<bool>& producers_done)
      : log_(&log), done_(&producers_done) {}

  /// Next unconsumed entry, blocking while the producer may still append. nullptr at end of stream.
  const log_entry* peek() {
    while (buffer_.empty()) {
      auto batch = log_->read_from(next_, 4096);
      if (!batch.empty()) {
        next_ += batch.size();
        for (auto& e : batch) buffer_.push_back(std::move(e));
        break;
      }
      if (done_->load(std::memory_order_acquire)) {
        if (log_->size() == next_) return nullptr;
        continue;
      }
      log_->wait_for_entry(next_, std::chrono::milliseconds(5));
    }
    return &buffer_.front();
  }

  void pop() {
    buffer_.pop_front();
    ++consumed_;
  }

  std::uint64_t consumed() const noexcept { return consumed_; }
  const std::string& topic() const { return log_->name(); }

 private:
  const topic_log* log_;
  const std::atomic<bool>* done_;
  std::deque<log_entry> buffer_;
  std::uint64_t next_ = 0;
  std::uint64_t consumed_ = 0;
};

/// Reference system under test. Each selected query runs as its own consumer
/// thread over the shared input logs; Q5 is the only store writer.
class streaming_engine {
 public:
  explicit streaming_engine(engine_params params) : params_(std::move(params)) {
    for (auto& c : consumed_) c.store(0);
  }

  /// Inputs consumed so far by query `q` (1-based). Safe to call while run() is active.
  std::uint64_t consumed(int q) const { return consumed_.at(static_cast<std::size_t>(q - 1)).load(); }

  engine_summary run(const std::set<int>& queries, const topic_catalog& catalog, business_db& db,
                     const std::atomic<bool>& inputs_done) {
    for (int q : queries) {
      if (q < 1 || q > query_count) throw config_error("unknown query " + std::to_string(q));
    }
    if (queries.count(2)) params_.sos.validate(params_.q2_window_size);

    engine_summary summary;
    for (int q : queries) summary.queries[q] = {};
    std::vector<std::exception_ptr> failures(query_count);
    {
      std::vector<std::jthread> workers;
      for (int q : queries) {
        auto& s = summary.queries[q];
        workers.emplace_back([&, q] {
          try {
            run_query(q, catalog, db, inputs_done, s);
          } catch (...) {
            failures[static_cast<std::size_t>(q - 1)] = std::current_exception();
          }
        });
      }
    }
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
    return summary;
  }

 private:
  class query_clock {
   public:
    explicit query_clock(clock_mode mode) : mode_(mode) {}
    void observe(std::int64_t ingestion_ts) {
      if (mode_ == clock_mode::logical) logical_.advance_to(ingestion_ts);
    }
    clock& get() { return mode_ == clock_mode::logical ? static_cast<clock&>(logical_) : real_; }

   private:
    clock_mode mode_;
    manual_clock logical_{0};
    system_clock real_;
  };

  void run_query(int q, const topic_catalog& catalog, business_db& db, const std::atomic<bool>& done,
                 query_summary& s) {
    const auto& t = params_.topics;
    query_clock qc(params_.mode);
    auto& progress = consumed_[static_cast<std::size_t>(q - 1)];

    auto emit = [&](const std::string& payload, const input_anchor& anchor) {
      auto& out = catalog.get(t.results[static_cast<std::size_t>(q - 1)]);
      auto [offset, ts] = out.append_stamped(payload, qc.get());
      s.anchors.push_back({offset, anchor, ts});
      ++s.outputs;
    };
    auto consume = [&](topic_cursor& c) {
      c.pop();
      ++s.inputs;
      progress.fetch_add(1, std::memory_order_release);
    };

    switch (q) {
      case 1: {
        topic_cursor in(catalog.get(t.sensor1), done);
        tumbling_window_aggregator windows(params_.q1_window_ms);
        auto emit_window = [&](const window_aggregate& w) { emit(format_q1(w), {t.sensor1, w.last_offset}); };
        while (const auto* e = in.peek()) {
          qc.observe(e->ingestion_ts);
          try {
            auto r = parse_sensor(e->payload);
            if (auto closed = windows.add(r.ts, r.mf01, e->offset)) emit_window(*closed);
          } catch (const error&) {
            ++s.dead_letters;
          }
          consume(in);
        }
        if (auto last = windows.flush()) emit_window(*last);
        s.late_records = windows.late();
        s.consumed[t.sensor1] = in.consumed();
        break;
      }
      case 2: {
        topic_cursor in(catalog.get(t.sensor1), done);
        struct item {
          std::string payload;
          std::uint64_t offset;
          point2 p;
        };
        count_window<item> batches(params_.q2_window_size);
        while (const auto* e = in.peek()) {
          qc.observe(e->ingestion_ts);
          try {
            auto r = parse_sensor(e->payload);
            auto full = batches.add({e->payload, e->offset, {static_cast<double>(r.mf01), static_cast<double>(r.mf02)}});
            if (full) {
              std::vector<point2> pts;
              pts.reserve(full->size());
              for (const auto& it : *full) pts.push_back(it.p);
              auto sos = stochastic_outlier_selection(pts, params_.sos);
              if (sos.degenerate) {
                ++s.degenerate_windows;
              } else {
                input_anchor anchor{t.sensor1, full->back().offset};
                for (std::size_t i = 0; i < full->size(); ++i) {
                  if (sos.outlier_probability[i] >= 0.5) emit(format_q2((*full)[i].payload, sos.outlier_probability[i]), anchor);
                }
              }
            }
          } catch (const error&) {
            ++s.dead_letters;
          }
          consume(in);
        }
        s.consumed[t.sensor1] = in.consumed();
        break;
      }
      case 3: {
        topic_cursor in(catalog.get(t.sensor1), done);
        while (const auto* e = in.peek()) {
          qc.observe(e->ingestion_ts);
          try {
            if (is_error_reading(parse_sensor(e->payload))) emit(e->payload, {t.sensor1, e->offset});
          } catch (const error&) {
            ++s.dead_letters;
          }
          consume(in);
        }
        s.consumed[t.sensor1] = in.consumed();
        break;
      }
      case 4: {
        std::array<topic_cursor, 2> in{topic_cursor(catalog.get(t.sensor1), done),
                                       topic_cursor(catalog.get(t.sensor2), done)};
        while (true) {
          // Merge by (ingestion_ts, stream): deterministic whatever the thread timing.
          const auto* a = in[0].peek();
          const auto* b = in[1].peek();
          if (!a && !b) break;
          std::size_t pick = (!b || (a && a->ingestion_ts <= b->ingestion_ts)) ? 0 : 1;
          const auto* e = pick == 0 ? a : b;
          qc.observe(e->ingestion_ts);
          try {
            auto r = parse_sensor(e->payload);
            if (is_unplanned_low_power(r, db.lookup_downtime(r.workplace_id))) emit(e->payload, {in[pick].topic(), e->offset});
          } catch (const error&) {
            ++s.dead_letters;
          }
          consume(in[pick]);
        }
        s.consumed[t.sensor1] = in[0].consumed();
        s.consumed[t.sensor2] = in[1].consumed();
        break;
      }
      case 5: {
        topic_cursor in(catalog.get(t.times), done);
        std::uint64_t sequence = 0;
        while (const auto* e = in.peek()) {
          qc.observe(e->ingestion_ts);
          try {
            auto r = parse_production_time(e->payload);
            auto& c = qc.get();
            auto update_ts = db.set_production_time({r.o_id, r.ol_number, r.pol_number}, r.is_end, c.now_ms(), c);
            s.anchors.push_back({sequence++, {t.times, e->offset}, update_ts});
            ++s.outputs;
          } catch (const error&) {
            ++s.dead_letters;
          }
          consume(in);
        }
        s.consumed[t.times] = in.consumed();
        break;
      }
      default:
        break;
    }
  }

  engine_params params_;
  std::array<std::atomic<std::uint64_t>, query_count> consumed_;
};

inline engine_summary run_queries(const std::set<int>& queries, const topic_catalog& catalog, business_db& db,
                                  const engine_params& params, const std::atomic<bool>& inputs_done) {
  streaming_engine engine(params);
  return engine.run(queries, catalog, db, inputs_done);
}

}  // namespace espbench
