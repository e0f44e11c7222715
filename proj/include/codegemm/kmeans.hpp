#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace codegemm {

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;           // k x dim, row-major
  std::vector<std::uint32_t> assignments;  // one per point
  double sse = 0.0;                        // within-cluster sum of squares
  std::vector<double> sse_history;         // after seeding, then after each iteration
  int iterations = 0;                      // Lloyd update steps performed

  std::span<const double> centroid(std::size_t i) const { return {centroids.data() + i * dim, dim}; }
};

// Lloyd's algorithm with k-means++ seeding drawn from a mt19937_64 seeded
// with `seed`.
//
// `points` holds n = points.size() / dim vectors back to back. Assignment
// is to the nearest centroid under squared Euclidean distance, ties going
// to the lowest centroid index. Each iteration recomputes centroids as
// cluster means (summing points in index order), re-seeds any empty cluster
// at the point currently farthest from its centroid, and reassigns. Stops
// after `max_iters` iterations or when assignments stop changing. The SSE
// is checked to be non-increasing after every iteration; a violation throws
// std::logic_error.
//
// The result does not depend on `threads`.
KMeansResult kmeans_fit(std::span<const float> points, std::size_t dim, std::size_t k, std::uint64_t seed,
                        int max_iters, int threads = 0);

}  // namespace codegemm
