#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "espbench/clock.hpp"
#include "espbench/error.hpp"

namespace espbench {

struct log_entry {
  std::uint64_t offset = 0;
  std::int64_t ingestion_ts = 0;
  std::string payload;

  friend bool operator==(const log_entry&, const log_entry&) = default;
};

/// Single-partition append-only log. The broker, not the producer, stamps each
/// entry with its ingestion time.
class topic_log {
 public:
  explicit topic_log(std::string name) : name_(std::move(name)) {}

  topic_log(const topic_log&) = delete;
  topic_log& operator=(const topic_log&) = delete;

  const std::string& name() const noexcept { return name_; }

  std::uint64_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  /// Stamps with `ts_source` while holding the append lock, so offset order and
  /// timestamp order agree even across concurrent producers.
  std::uint64_t append(std::string payload, clock& ts_source) {
    return append_stamped(std::move(payload), ts_source).first;
  }

  /// As append(), also returning the ingestion timestamp that was assigned.
  std::pair<std::uint64_t, std::int64_t> append_stamped(std::string payload, clock& ts_source) {
    std::uint64_t offset;
    std::int64_t ts;
    {
      std::unique_lock lock(mutex_);
      ts = ts_source.now_ms();
      if (!entries_.empty() && ts < entries_.back().ingestion_ts) ts = entries_.back().ingestion_ts;
      offset = entries_.size();
      entries_.push_back(log_entry{offset, ts, std::move(payload)});
    }
    grown_.notify_all();
    return {offset, ts};
  }

  std::vector<log_entry> read_from(std::uint64_t offset,
                                   std::uint64_t max = std::numeric_limits<std::uint64_t>::max()) const {
    std::shared_lock lock(mutex_);
    if (offset > entries_.size()) {
      throw offset_out_of_range_error(name_ + ": offset " + std::to_string(offset) + " > length " +
                                      std::to_string(entries_.size()));
    }
    auto n = std::min<std::uint64_t>(max, entries_.size() - offset);
    std::vector<log_entry> out;
    out.reserve(n);
    for (std::uint64_t i = offset; i < offset + n; ++i) out.push_back(entries_[i]);
    return out;
  }

  log_entry at(std::uint64_t offset) const {
    std::shared_lock lock(mutex_);
    if (offset >= entries_.size()) {
      throw offset_out_of_range_error(name_ + ": no entry at offset " + std::to_string(offset));
    }
    return entries_[offset];
  }

  /// Blocks until the log is longer than `offset` or the timeout elapses.
  bool wait_for_entry(std::uint64_t offset, std::chrono::milliseconds timeout) const {
    std::shared_lock lock(mutex_);
    return grown_.wait_for(lock, timeout, [&] { return entries_.size() > offset; });
  }

  /// Restores a persisted entry verbatim; only used while loading.
  void restore(std::int64_t ingestion_ts, std::string payload) {
    std::unique_lock lock(mutex_);
    entries_.push_back(log_entry{entries_.size(), ingestion_ts, std::move(payload)});
  }

 private:
  std::string name_;
  mutable std::shared_mutex mutex_;
  mutable std::condition_variable_any grown_;
  std::deque<log_entry> entries_;
};

inline std::string topic_name(const std::string& prefix, const std::string& run_id, const std::string& stream) {
  return prefix + "-" + run_id + "-" + stream;
}

class topic_catalog {
 public:
  topic_catalog() = default;
  topic_catalog(const topic_catalog&) = delete;
  topic_catalog& operator=(const topic_catalog&) = delete;
  topic_catalog(topic_catalog&&) = default;
  topic_catalog& operator=(topic_catalog&&) = default;

  topic_log& create_topic(const std::string& name) {
    std::unique_lock lock(*mutex_);
    if (topics_.count(name)) throw duplicate_topic_error("topic already exists: " + name);
    auto [it, _] = topics_.emplace(name, std::make_unique<topic_log>(name));
    return *it->second;
  }

  bool contains(const std::string& name) const {
    std::shared_lock lock(*mutex_);
    return topics_.count(name) != 0;
  }

  topic_log& get(const std::string& name) const {
    std::shared_lock lock(*mutex_);
    auto it = topics_.find(name);
    if (it == topics_.end()) throw missing_topic_error("no such topic: " + name);
    return *it->second;
  }

  std::vector<std::string> names() const {
    std::shared_lock lock(*mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : topics_) out.push_back(name);
    return out;
  }

  /// One `<topic>.log` file per topic: repeated [u32 length][u64 ingestion_ts][payload], little-endian.
  void persist(const std::filesystem::path& directory) const {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw storage_error("cannot create " + directory.string() + ": " + ec.message());
    for (const auto& name : names()) {
      auto path = directory / (name + ".log");
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw storage_error("cannot write " + path.string());
      for (const auto& e : get(name).read_from(0)) {
        put_le(out, static_cast<std::uint32_t>(e.payload.size()), 4);
        put_le(out, static_cast<std::uint64_t>(e.ingestion_ts), 8);
        out.write(e.payload.data(), static_cast<std::streamsize>(e.payload.size()));
      }
      if (!out) throw storage_error("write failed for " + path.string());
    }
  }

  static topic_catalog load(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
      throw storage_error("topic directory not found: " + directory.string());
    }
    topic_catalog catalog;
    std::vector<std::filesystem::path> files;
    for (const auto& de : std::filesystem::directory_iterator(directory)) {
      if (de.is_regular_file() && de.path().extension() == ".log") files.push_back(de.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      auto& log = catalog.create_topic(path.stem().string());
      std::ifstream in(path, std::ios::binary);
      if (!in) throw storage_error("cannot open " + path.string());
      while (in.peek() != std::char_traits<char>::eof()) {
        std::uint64_t len = 0, ts = 0;
        if (!get_le(in, len, 4) || !get_le(in, ts, 8)) throw storage_error("truncated header in " + path.string());
        std::string payload(len, '\0');
        if (!in.read(payload.data(), static_cast<std::streamsize>(len))) {
          throw storage_error("truncated payload in " + path.string());
        }
        log.restore(static_cast<std::int64_t>(ts), std::move(payload));
      }
    }
    return catalog;
  }

 private:
  static void put_le(std::ostream& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  static bool get_le(std::istream& in, std::uint64_t& v, int bytes) {
    v = 0;
    for (int i = 0; i < bytes; ++i) {
      int c = in.get();
      if (c == std::char_traits<char>::eof()) return false;
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return true;
  }

  std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
  std::map<std::string, std::unique_ptr<topic_log>> topics_;
};

}  // namespace espbench
