#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "espbench/error.hpp"

namespace espbench {

struct point2 {
  double x = 0.0;
  double y = 0.0;
};

struct sos_params {
  double perplexity = 30.0;
  double tolerance = 1e-5;  // on the entropy (nats) of each binding distribution
  int max_iterations = 100;

  void validate(std::size_t window_size) const {
    if (!(perplexity > 1.0)) throw config_error("SOS perplexity must be > 1");
    if (window_size > 1 && !(perplexity < static_cast<double>(window_size))) {
      throw config_error("SOS perplexity must be smaller than the window size");
    }
    if (!(tolerance > 0.0)) throw config_error("SOS tolerance must be positive");
    if (max_iterations < 1) throw config_error("SOS max_iterations must be >= 1");
  }
};

struct sos_result {
  std::vector<double> outlier_probability;
  bool degenerate = false;  // every pairwise dissimilarity is zero
};

/// Stochastic outlier selection over 2-D points.
///
/// Dissimilarity is squared Euclidean distance. Each point i gets Gaussian
/// affinities exp(-beta_i * d_ij) to the others, with beta_i found by bisection
/// on log(beta_i) until the entropy of the normalised row (the binding
/// probabilities b_ij) equals log(perplexity). The outlier probability of i is
/// the chance no other point binds to it: prod_{j != i} (1 - b_ji).
inline sos_result stochastic_outlier_selection(std::span<const point2> points, const sos_params& params) {
  const std::size_t n = points.size();
  sos_result result;
  result.outlier_probability.assign(n, 0.0);
  if (n < 2) {
    result.outlier_probability.assign(n, 1.0);
    return result;
  }

  std::vector<double> dist(n * n, 0.0);
  bool any_nonzero = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = points[i].x - points[j].x;
      double dy = points[i].y - points[j].y;
      double d = dx * dx + dy * dy;
      dist[i * n + j] = d;
      dist[j * n + i] = d;
      any_nonzero = any_nonzero || d > 0.0;
    }
  }
  if (!any_nonzero) {
    result.degenerate = true;
    return result;
  }

  const double target_entropy = std::log(params.perplexity);
  std::vector<double> log_not_bound(n, 0.0);  // sum_j log(1 - b_ji), accumulated per i
  std::vector<double> affinity(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &dist[i * n];
    double nearest = INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) nearest = std::min(nearest, row[j]);
    }

    // Entropy is shift invariant, so affinities are taken relative to the nearest neighbour.
    auto entropy_at = [&](double log_beta) {
      const double beta = std::exp(log_beta);
      double sum = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          affinity[j] = 0.0;
          continue;
        }
        double shifted = row[j] - nearest;
        double a = std::exp(-beta * shifted);
        affinity[j] = a;
        sum += a;
        weighted += shifted * a;
      }
      return std::make_pair(std::log(sum) + beta * weighted / sum, sum);
    };

    double lo = -200.0, hi = 200.0;
    double log_beta = 0.0;
    auto [entropy, sum] = entropy_at(log_beta);
    for (int it = 0; it < params.max_iterations; ++it) {
      if (std::abs(entropy - target_entropy) < params.tolerance) break;
      if (entropy > target_entropy) {
        lo = log_beta;  // too flat: sharpen
      } else {
        hi = log_beta;
      }
      log_beta = 0.5 * (lo + hi);
      std::tie(entropy, sum) = entropy_at(log_beta);
    }

    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double binding = affinity[j] / sum;
      log_not_bound[j] += binding >= 1.0 ? -INFINITY : std::log1p(-binding);
    }
  }

  for (std::size_t i = 0; i < n; ++i) result.outlier_probability[i] = std::exp(log_not_bound[i]);
  return result;
}

}  // namespace espbench
