#pragma once

// Test-only reference computations for k-means, independent of the
// implementation under test.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

inline double squared_distance(const float* p, const double* c, std::size_t dim) {
  double d = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double diff = static_cast<double>(p[i]) - c[i];
    d += diff * diff;
  }
  return d;
}

// Minimum SSE over every labelling of the points with at most k labels,
// each cluster represented by its mean.
inline double optimal_sse(std::span<const float> points, std::size_t dim, std::size_t k) {
  const std::size_t n = points.size() / dim;
  std::vector<std::size_t> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) sums[label[i] * dim + d] += points[i * dim + d];
      ++counts[label[i]];
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double mean = sums[label[i] * dim + d] / static_cast<double>(counts[label[i]]);
        const double diff = points[i * dim + d] - mean;
        sse += diff * diff;
      }
    }
    if (sse < best) best = sse;

    std::size_t pos = 0;
    while (pos < n && ++label[pos] == k) label[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

// True when every point's assigned centroid is at minimal distance and ties
// go to the lowest index.
inline bool nearest_assignments(std::span<const float> points, std::size_t dim, std::span<const double> centroids,
                                std::span<const std::uint32_t> assignments) {
  const std::size_t k = centroids.size() / dim;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const float* p = points.data() + i * dim;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = squared_distance(p, centroids.data() + c * dim, dim);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (assignments[i] != best) return false;
  }
  return true;
}

}  // namespace oracle
