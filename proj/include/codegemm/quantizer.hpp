#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "codegemm/grid.hpp"
#include "codegemm/quant_config.hpp"

namespace codegemm {

// 2^b centroids of length v, stored back to back.
struct Codebook {
  std::size_t v = 0;
  std::vector<Half> entries;

  std::size_t size() const noexcept { return v == 0 ? 0 : entries.size() / v; }
  std::span<const Half> centroid(std::size_t i) const { return {entries.data() + i * v, v}; }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

// rows x (K / g_eff) scale factors.
using ScalePlane = Grid<Half>;

// rows x (K / v) codes, each < 2^b.
using CodePlane = Grid<std::uint16_t>;

// Compressed form of one rows x cols weight matrix:
//   W[r, j*v + k] ~= scale(r, j) * sum_t books[t].centroid(planes[t](r, j))[k]
struct QuantizedLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  QuantConfig config;
  ScalePlane scales{1, 1};
  std::vector<CodePlane> planes;
  std::vector<Codebook> books;

  std::size_t segments_per_row() const noexcept { return cols / config.v; }
  std::size_t group_width() const noexcept { return config.group_width(cols); }
  std::size_t groups_per_row() const noexcept { return cols / group_width(); }
  // Scale column covering segment j.
  std::size_t group_of_segment(std::size_t j) const noexcept { return j * config.v / group_width(); }

  // Checks dimensional consistency, codes < 2^b, finite positive scales and
  // finite centroids. Throws InvariantError / ConfigError.
  void validate() const;
};

// Equality of the compressed payload and the persisted header fields
// (kmeans_iters is a fitting knob and is not compared).
bool same_encoding(const QuantizedLayer& a, const QuantizedLayer& b);

// Per-group max-abs, rounded to binary16; all-zero groups get 1.0.
ScalePlane compute_scales(const Matrix& w, std::int64_t g);

// W / scale element-wise in binary32.
Grid<float> normalize(const Matrix& w, const ScalePlane& scales);

// (rows*cols/v) x v: vector (r, j) is row r*(cols/v) + j.
template <class T>
Grid<T> partition_vectors(const Grid<T>& normalized, std::size_t v) {
  if (v == 0 || normalized.cols() % v != 0) {
    throw ConfigError("matrix width is not divisible by the vector length");
  }
  auto flat = normalized.data();
  return Grid<T>(normalized.size() / v, v, std::vector<T>(flat.begin(), flat.end()));
}

// Residual sum of squares of the normalized weights, before any stage
// (entry 0) and after each of the m stages.
struct QuantizeTrace {
  std::vector<double> residual_sse;
  std::vector<double> kmeans_sse;
  std::vector<int> kmeans_iterations;
};

// Greedy residual codebook quantization. Stage t (1-based) fits 2^b
// centroids to the current residual vectors with kmeans_fit seeded by
// cfg.seed ^ t, rounds them to binary16, assigns every vector to its
// nearest stored centroid and subtracts it. Throws std::logic_error if a
// stage ever increases the residual SSE.
QuantizedLayer quantize_layer(const Matrix& w, const QuantConfig& cfg, QuantizeTrace* trace = nullptr,
                              int threads = 0);

// W_hat[r, j*v+k] = scale * sum_t centroid_t[k], in binary32, stored binary16.
Matrix reconstruct(const QuantizedLayer& q);

// ||W - W_hat||_F / ||W||_F in binary64.
double quant_error(const Matrix& w, const Matrix& w_hat);

}  // namespace codegemm
