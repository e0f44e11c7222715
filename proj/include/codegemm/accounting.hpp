#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <boost/rational.hpp>

#include "codegemm/quant_config.hpp"

namespace codegemm {

using Rational = boost::rational<std::int64_t>;

double to_double(const Rational& r) noexcept;

// Average bits per weight, split by what the bits store:
//   q_code     = b*m*(K/v)*M   / (M*K)
//   q_codebook = 16*m*2^b*v    / (M*K)
//   q_norm     = 16*M*(K/g)    / (M*K)   (g = -1: one scale per row)
struct BitBreakdown {
  Rational q_code;
  Rational q_codebook;
  Rational q_norm;
  Rational q_bar;
  std::uint64_t code_bits = 0;
  std::uint64_t codebook_bits = 0;
  std::uint64_t norm_bits = 0;
  std::uint64_t total_bits = 0;
};

BitBreakdown bit_breakdown(const QuantConfig& cfg, std::size_t rows, std::size_t cols);

// Operation counts of one rows x K by K x N product.
struct ComplexityPrediction {
  std::uint64_t c_build = 0;  // m * 2^b * K * N
  std::uint64_t c_read = 0;   // m * rows * (K/v) * N
  std::uint64_t c_dense = 0;  // rows * N * K
  Rational reduction_factor;  // c_read / c_dense = m / v
  std::uint64_t psumbook_entries_per_tile = 0;  // m * 2^b * t_w / v
  std::uint64_t codebook_elements = 0;          // m * 2^b * v

  // c_build / (c_build + c_read) = 2^b v / (2^b v + rows)
  Rational build_fraction() const;
};

ComplexityPrediction predict_complexity(const QuantConfig& cfg, std::size_t rows, std::size_t n, std::size_t k,
                                        std::size_t tile_width);

struct ConfigSpace {
  std::vector<std::size_t> v{1, 2, 4, 8, 16, 32};
  std::vector<std::size_t> m{1, 2, 3, 4};
  std::vector<unsigned> b{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  std::vector<std::int64_t> g{kRowWiseGroup, 8, 16, 32, 64, 128, 256};
};

struct ConfigCandidate {
  QuantConfig config;
  BitBreakdown bits;
  Rational reduction_factor;  // m / v
};

// Every valid configuration of the space (divisibility against rows x cols
// included) whose q_bar lies in [target - tol, target + tol], sorted by
// q_bar, then reduction factor, then (v, m, b, g).
std::vector<ConfigCandidate> enumerate_configs(double target, double tol, std::size_t rows, std::size_t cols,
                                               const ConfigSpace& space = {});

// Bytes of m codebooks with 2^b binary16 centroids of length v. Throws
// ConfigError for b outside [1, 16] or zero m / v.
std::uint64_t aqlm_codebook_bytes(std::size_t m, unsigned b, std::size_t v);

}  // namespace codegemm
