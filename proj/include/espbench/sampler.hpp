#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "espbench/error.hpp"

namespace espbench {

struct resource_sample {
  std::int64_t cpu_user_ms = 0;
  std::int64_t cpu_system_ms = 0;
  std::int64_t rss_kb = 0;
};

/// Process CPU time and resident set size from /proc/self. Zeros where /proc is unavailable.
inline resource_sample read_process_resources() {
  resource_sample s;
  std::ifstream stat("/proc/self/stat");
  std::string content;
  if (std::getline(stat, content)) {
    // fields after the parenthesised command name; utime and stime are fields 14 and 15
    auto close = content.rfind(')');
    if (close != std::string::npos) {
      std::istringstream rest(content.substr(close + 2));
      std::string field;
      long ticks = sysconf(_SC_CLK_TCK);
      for (int i = 3; i <= 15 && rest >> field; ++i) {
        if (i == 14) s.cpu_user_ms = std::stoll(field) * 1000 / ticks;
        if (i == 15) s.cpu_system_ms = std::stoll(field) * 1000 / ticks;
      }
    }
  }
  std::ifstream statm("/proc/self/statm");
  std::int64_t size = 0, resident = 0;
  if (statm >> size >> resident) s.rss_kb = resident * sysconf(_SC_PAGESIZE) / 1024;
  return s;
}

/// Samples the harness process at a fixed interval into a CSV file until stopped.
class resource_sampler {
 public:
  resource_sampler(std::filesystem::path path, std::chrono::milliseconds interval)
      : out_(path, std::ios::trunc), interval_(interval) {
    if (!out_) throw storage_error("cannot write " + path.string());
    out_ << "elapsed_ms,cpu_user_ms,cpu_system_ms,rss_kb\n";
    start_ = std::chrono::steady_clock::now();
    worker_ = std::jthread([this](std::stop_token stop) { loop(stop); });
  }

  resource_sampler(const resource_sampler&) = delete;
  resource_sampler& operator=(const resource_sampler&) = delete;

  ~resource_sampler() { stop(); }

  void stop() {
    if (!worker_.joinable()) return;
    worker_.request_stop();
    wake_.notify_all();
    worker_.join();
    sample();
    out_.flush();
  }

 private:
  void loop(std::stop_token stop) {
    std::unique_lock lock(mutex_);
    while (!stop.stop_requested()) {
      sample();
      wake_.wait_for(lock, stop, interval_, [] { return false; });
    }
  }

  void sample() {
    auto r = read_process_resources();
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
    out_ << elapsed.count() << ',' << r.cpu_user_ms << ',' << r.cpu_system_ms << ',' << r.rss_kb << '\n';
  }

  std::ofstream out_;
  std::chrono::milliseconds interval_;
  std::chrono::steady_clock::time_point start_;
  std::mutex mutex_;
  std::condition_variable_any wake_;
  std::jthread worker_;
};

}  // namespace espbench
