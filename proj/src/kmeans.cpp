#include "codegemm/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "codegemm/error.hpp"
#include "codegemm/parallel.hpp"

namespace codegemm {
namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// Uniform in [0, 1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)));
}

class Lloyd {
 public:
  Lloyd(std::span<const float> points, std::size_t dim, std::size_t k, int threads)
      : n_(points.size() / dim), dim_(dim), k_(k), threads_(resolve_threads(threads)),
        points_(points.begin(), points.end()), centroids_(k * dim), assign_(n_), dist_(n_) {}

  void seed_plus_plus(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> best(n_);
    std::size_t pick = uniform_index(rng, n_);
    for (std::size_t c = 0; c < k_; ++c) {
      if (c > 0) {
        double total = 0.0;
        for (double d : best) total += d;
        if (total > 0.0) {
          const double target = unit_uniform(rng) * total;
          double cumulative = 0.0;
          pick = n_;
          std::size_t last_positive = 0;
          for (std::size_t i = 0; i < n_; ++i) {
            if (best[i] > 0.0) last_positive = i;
            cumulative += best[i];
            if (cumulative > target) {
              pick = i;
              break;
            }
          }
          if (pick == n_) pick = last_positive;
        } else {
          pick = uniform_index(rng, n_);
        }
      }
      std::copy_n(point(pick), dim_, centroid(c));
      const double* chosen = centroid(c);
      for (std::size_t i = 0; i < n_; ++i) {
        const double d = squared_distance(point(i), chosen, dim_);
        best[i] = c == 0 ? d : std::min(best[i], d);
      }
    }
  }

  // Returns the number of points whose assignment changed.
  std::size_t assign() {
    const auto n = static_cast<std::ptrdiff_t>(n_);
    std::size_t changed = 0;
#pragma omp parallel for num_threads(threads_) schedule(static) reduction(+ : changed)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double* p = point(static_cast<std::size_t>(i));
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k_; ++c) {
        const double d = squared_distance(p, centroid(c), dim_);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      if (assign_[i] != best) ++changed;
      assign_[i] = best;
      dist_[i] = best_d;
    }
    return changed;
  }

  double sse() const {
    double total = 0.0;
    for (double d : dist_) total += d;
    return total;
  }

  void update() {
    std::vector<double> sums(k_ * dim_, 0.0);
    std::vector<std::size_t> counts(k_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      double* s = sums.data() + assign_[i] * dim_;
      const double* p = point(i);
      for (std::size_t d = 0; d < dim_; ++d) s[d] += p[d];
      ++counts[assign_[i]];
    }
    bool any_empty = false;
    for (std::size_t c = 0; c < k_; ++c) {
      if (counts[c] == 0) {
        any_empty = true;
        continue;
      }
      const auto count = static_cast<double>(counts[c]);
      for (std::size_t d = 0; d < dim_; ++d) centroid(c)[d] = sums[c * dim_ + d] / count;
    }
    if (!any_empty) return;

    std::vector<double> own(n_);
    for (std::size_t i = 0; i < n_; ++i) own[i] = squared_distance(point(i), centroid(assign_[i]), dim_);
    for (std::size_t c = 0; c < k_; ++c) {
      if (counts[c] != 0) continue;
      const auto far = static_cast<std::size_t>(std::max_element(own.begin(), own.end()) - own.begin());
      std::copy_n(point(far), dim_, centroid(c));
      own[far] = 0.0;
    }
  }

  KMeansResult take(int iterations, std::vector<double> history) {
    KMeansResult r;
    r.k = k_;
    r.dim = dim_;
    r.centroids = std::move(centroids_);
    r.assignments = std::move(assign_);
    r.sse = history.back();
    r.sse_history = std::move(history);
    r.iterations = iterations;
    return r;
  }

 private:
  const double* point(std::size_t i) const noexcept { return points_.data() + i * dim_; }
  double* centroid(std::size_t c) noexcept { return centroids_.data() + c * dim_; }
  const double* centroid(std::size_t c) const noexcept { return centroids_.data() + c * dim_; }

  std::size_t n_;
  std::size_t dim_;
  std::size_t k_;
  int threads_;
  std::vector<double> points_;
  std::vector<double> centroids_;
  std::vector<std::uint32_t> assign_;
  std::vector<double> dist_;
};

}  // namespace

KMeansResult kmeans_fit(std::span<const float> points, std::size_t dim, std::size_t k, std::uint64_t seed,
                        int max_iters, int threads) {
  if (dim == 0) throw ConfigError("k-means point dimension must be >= 1");
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  if (points.size() % dim != 0) throw ShapeError("k-means point buffer is not a multiple of dim");
  if (points.empty()) throw InvariantError("k-means needs at least one point");
  if (k > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("k-means k is too large");

  Lloyd lloyd(points, dim, k, threads);
  lloyd.seed_plus_plus(seed);
  lloyd.assign();
  std::vector<double> history{lloyd.sse()};

  int it = 0;
  while (it < max_iters) {
    lloyd.update();
    const std::size_t changed = lloyd.assign();
    ++it;
    const double current = lloyd.sse();
    const double previous = history.back();
    if (current > previous * (1.0 + 1e-12) + 1e-300) {
      throw std::logic_error("k-means objective increased at iteration " + std::to_string(it));
    }
    history.push_back(current);
    if (changed == 0) break;
  }
  return lloyd.take(it, std::move(history));
}

}  // namespace codegemm
