#pragma once

#include <chrono>
#include <cstdint>
#include <thread>

namespace espbench {

/// Token bucket of depth one: one token per 1/rate seconds, each record waits
/// for its own token. Tokens missed while the caller was descheduled are
/// honoured late, so the long-run rate holds without ever running ahead.
class token_bucket {
 public:
  using steady = std::chrono::steady_clock;

  explicit token_bucket(double rate_per_second, steady::time_point start = steady::now())
      : interval_(std::chrono::duration<double>(1.0 / rate_per_second)), start_(start) {}

  /// Blocks until token `k` (0-based) is available.
  void acquire(std::uint64_t k) const {
    auto due = release_time(k);
    if (steady::now() < due) std::this_thread::sleep_until(due);
  }

  steady::time_point release_time(std::uint64_t k) const {
    return start_ + std::chrono::duration_cast<steady::duration>(interval_ * static_cast<double>(k));
  }

 private:
  std::chrono::duration<double> interval_;
  steady::time_point start_;
};

}  // namespace espbench
