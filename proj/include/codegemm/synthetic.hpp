#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "codegemm/grid.hpp"
#include "codegemm/quantizer.hpp"

namespace codegemm {

// Seeded generator with platform-independent uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  double normal();  // Box-Muller, standard normal

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// rows x cols binary16 matrix of N(0, stddev^2) draws.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double stddev = 1.0);

// A valid QuantizedLayer with Gaussian centroids, uniform codes and the
// max-abs scales of a Gaussian weight proxy, without running k-means.
// Used for benchmark shapes where fitting would dominate the run time;
// engine timing does not depend on the weight values.
QuantizedLayer synthetic_layer(std::size_t rows, std::size_t cols, const QuantConfig& cfg, std::uint64_t seed);

}  // namespace codegemm
