#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "espbench/broker.hpp"
#include "espbench/clock.hpp"
#include "espbench/csv.hpp"
#include "espbench/pacer.hpp"
#include "espbench/store.hpp"
#include "espbench/vendor_json.hpp"

namespace espbench {

struct stream_route {
  std::string name;  // "sensor1", "sensor2", "times"
  std::filesystem::path file;
  std::string topic;
};

struct sender_config {
  std::int64_t input_rate = 1000;  // messages per second, per stream
  std::int64_t duration_s = 60;
  std::vector<stream_route> streams;
  clock_mode mode = clock_mode::real;
  std::int64_t logical_start_ms = 0;  // first ingestion time in logical mode

  void validate() const {
    if (input_rate < 1) throw config_error("input_rate must be >= 1");
    if (duration_s < 1) throw config_error("duration must be >= 1");
  }

  std::uint64_t max_records() const { return static_cast<std::uint64_t>(input_rate * duration_s); }

  /// Logical ingestion time of the k-th record of a stream.
  std::int64_t logical_ts(std::uint64_t k) const {
    return logical_start_ms + static_cast<std::int64_t>(k * 1000 / static_cast<std::uint64_t>(input_rate));
  }
};

struct stream_summary {
  std::uint64_t sent = 0;
  double achieved_rate = 0.0;  // records per second
};

struct send_summary {
  std::map<std::string, stream_summary> streams;
  double wall_time_s = 0.0;

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["wall_time_s"] = wall_time_s;
    for (const auto& [name, s] : streams) {
      j["streams"][name] = {{"sent", s.sent}, {"achieved_rate", s.achieved_rate}};
    }
    return j.dump();
  }
};

/// Loads every business table from `directory` into the store.
inline std::map<std::string, std::size_t> import_business(business_db& db, const std::filesystem::path& directory) {
  return import_directory(db, directory);
}

/// Publishes each stream file to its topic, one pacing thread per stream.
/// Stops per stream after rate*duration records or at end of file.
inline send_summary stream(const sender_config& cfg, const topic_catalog& catalog) {
  cfg.validate();
  std::vector<topic_log*> logs;
  std::vector<std::vector<std::string>> inputs;
  for (const auto& s : cfg.streams) {
    logs.push_back(&catalog.get(s.topic));
    inputs.push_back(csv::read_lines(s.file.string()));
    while (!inputs.back().empty() && inputs.back().back().empty()) inputs.back().pop_back();
  }

  send_summary summary;
  std::vector<stream_summary> results(cfg.streams.size());
  auto wall_start = std::chrono::steady_clock::now();
  {
    std::vector<std::jthread> pacers;
    for (std::size_t i = 0; i < cfg.streams.size(); ++i) {
      pacers.emplace_back([&, i] {
        auto& log = *logs[i];
        auto& lines = inputs[i];
        auto count = std::min<std::uint64_t>(cfg.max_records(), lines.size());
        auto started = std::chrono::steady_clock::now();
        if (cfg.mode == clock_mode::logical) {
          manual_clock ts(cfg.logical_start_ms);
          for (std::uint64_t k = 0; k < count; ++k) {
            ts.advance_to(cfg.logical_ts(k));
            log.append(std::move(lines[k]), ts);
          }
          results[i].sent = count;
          results[i].achieved_rate = static_cast<double>(cfg.input_rate);
          return;
        }
        system_clock ts;
        token_bucket bucket(static_cast<double>(cfg.input_rate), started);
        for (std::uint64_t k = 0; k < count; ++k) {
          bucket.acquire(k);
          log.append(std::move(lines[k]), ts);
        }
        std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
        results[i].sent = count;
        // rate over the paced span: the first record goes out at t=0
        results[i].achieved_rate =
            count > 1 ? static_cast<double>(count - 1) / elapsed.count() : static_cast<double>(count);
      });
    }
  }
  std::chrono::duration<double> wall = std::chrono::steady_clock::now() - wall_start;
  summary.wall_time_s = cfg.mode == clock_mode::logical ? static_cast<double>(cfg.duration_s) : wall.count();
  for (std::size_t i = 0; i < cfg.streams.size(); ++i) summary.streams[cfg.streams[i].name] = results[i];
  return summary;
}

}  // namespace espbench
