#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string_view>

namespace espbench {

/// Millisecond time source injected into every component that stamps records.
class clock {
 public:
  virtual ~clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class system_clock final : public clock {
 public:
  std::int64_t now_ms() override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
  }
};

/// Logical clock: time only moves when the owner moves it, and never backwards.
class manual_clock final : public clock {
 public:
  explicit manual_clock(std::int64_t start_ms = 0) : now_(start_ms) {}

  std::int64_t now_ms() override { return now_.load(std::memory_order_acquire); }

  void advance_to(std::int64_t ms) {
    auto cur = now_.load(std::memory_order_relaxed);
    while (cur < ms && !now_.compare_exchange_weak(cur, ms, std::memory_order_acq_rel)) {
    }
  }

  void advance_by(std::int64_t delta_ms) { now_.fetch_add(delta_ms, std::memory_order_acq_rel); }

 private:
  std::atomic<std::int64_t> now_;
};

enum class clock_mode { real, logical };

inline std::string_view to_string(clock_mode m) { return m == clock_mode::real ? "real" : "logical"; }

}  // namespace espbench
