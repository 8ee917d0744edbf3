#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "espbench/error.hpp"

namespace espbench {

struct latency_stats {
  std::uint64_t count = 0;
  std::int64_t min_ms = 0;
  std::int64_t max_ms = 0;
  std::int64_t p90_ms = 0;
  std::int64_t sum_ms = 0;  // mean = sum_ms / count, kept exact

  double mean_ms() const { return count ? static_cast<double>(sum_ms) / static_cast<double>(count) : 0.0; }

  friend bool operator==(const latency_stats&, const latency_stats&) = default;
};

/// 1-based nearest rank ceil(p/100 * n), computed in integers.
inline std::size_t nearest_rank(std::size_t n, unsigned percent) {
  auto rank = (static_cast<std::uint64_t>(percent) * n + 99) / 100;
  return static_cast<std::size_t>(std::max<std::uint64_t>(rank, 1));
}

inline latency_stats aggregate(std::span<const std::int64_t> samples_ms) {
  if (samples_ms.empty()) throw empty_samples_error("no latency samples");
  std::vector<std::int64_t> sorted(samples_ms.begin(), samples_ms.end());
  std::sort(sorted.begin(), sorted.end());
  latency_stats s;
  s.count = sorted.size();
  s.min_ms = sorted.front();
  s.max_ms = sorted.back();
  s.p90_ms = sorted[nearest_rank(sorted.size(), 90) - 1];
  for (auto v : sorted) s.sum_ms += v;
  return s;
}

}  // namespace espbench
