#include "codegemm/accounting.hpp"

#include <algorithm>
#include <tuple>

#include "codegemm/error.hpp"

namespace codegemm {
namespace {

constexpr std::uint64_t kHalfBits = 16;

std::int64_t as_int(std::uint64_t x) {
  if (x > static_cast<std::uint64_t>(INT64_MAX)) throw ConfigError("bit count exceeds 64-bit range");
  return static_cast<std::int64_t>(x);
}

}  // namespace

double to_double(const Rational& r) noexcept { return boost::rational_cast<double>(r); }

BitBreakdown bit_breakdown(const QuantConfig& cfg, std::size_t rows, std::size_t cols) {
  cfg.validate_for(rows, cols);
  const std::uint64_t weights = std::uint64_t{rows} * cols;
  const std::uint64_t entries = std::uint64_t{1} << cfg.b;

  BitBreakdown out;
  out.codebook_bits = kHalfBits * cfg.m * entries * cfg.v;
  out.code_bits = std::uint64_t{cfg.b} * cfg.m * rows * (cols / cfg.v);
  out.norm_bits = kHalfBits * rows * (cols / cfg.group_width(cols));
  out.total_bits = out.codebook_bits + out.code_bits + out.norm_bits;

  const std::int64_t denom = as_int(weights);
  out.q_code = Rational(as_int(out.code_bits), denom);
  out.q_codebook = Rational(as_int(out.codebook_bits), denom);
  out.q_norm = Rational(as_int(out.norm_bits), denom);
  out.q_bar = out.q_code + out.q_codebook + out.q_norm;
  return out;
}

Rational ComplexityPrediction::build_fraction() const {
  const std::uint64_t total = c_build + c_read;
  if (total == 0) throw InvariantError("build fraction of an empty product");
  return Rational(as_int(c_build), as_int(total));
}

ComplexityPrediction predict_complexity(const QuantConfig& cfg, std::size_t rows, std::size_t n, std::size_t k,
                                        std::size_t tile_width) {
  cfg.validate_for(rows, k);
  if (n == 0) throw ConfigError("N must be >= 1");
  if (tile_width == 0 || tile_width % cfg.v != 0) throw ConfigError("tile width must be a positive multiple of v");
  const std::uint64_t entries = std::uint64_t{1} << cfg.b;

  ComplexityPrediction p;
  p.c_build = cfg.m * entries * k * n;
  p.c_read = cfg.m * rows * (k / cfg.v) * n;
  p.c_dense = std::uint64_t{rows} * n * k;
  p.reduction_factor = Rational(as_int(p.c_read), as_int(p.c_dense));
  p.psumbook_entries_per_tile = cfg.m * entries * (tile_width / cfg.v);
  p.codebook_elements = cfg.m * entries * cfg.v;
  return p;
}

std::vector<ConfigCandidate> enumerate_configs(double target, double tol, std::size_t rows, std::size_t cols,
                                               const ConfigSpace& space) {
  std::vector<ConfigCandidate> out;
  const double lo = target - tol;
  const double hi = target + tol;
  for (std::size_t v : space.v) {
    for (std::size_t m : space.m) {
      for (unsigned b : space.b) {
        for (std::int64_t g : space.g) {
          QuantConfig cfg;
          cfg.v = v;
          cfg.m = m;
          cfg.b = b;
          cfg.g = g;
          try {
            cfg.validate_for(rows, cols);
          } catch (const ConfigError&) {
            continue;
          }
          BitBreakdown bits = bit_breakdown(cfg, rows, cols);
          const double q = to_double(bits.q_bar);
          if (q < lo || q > hi) continue;
          out.push_back({cfg, bits, Rational(static_cast<std::int64_t>(m), static_cast<std::int64_t>(v))});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ConfigCandidate& a, const ConfigCandidate& b) {
    if (a.bits.q_bar != b.bits.q_bar) return a.bits.q_bar < b.bits.q_bar;
    if (a.reduction_factor != b.reduction_factor) return a.reduction_factor < b.reduction_factor;
    return std::tie(a.config.v, a.config.m, a.config.b, a.config.g) <
           std::tie(b.config.v, b.config.m, b.config.b, b.config.g);
  });
  return out;
}

std::uint64_t aqlm_codebook_bytes(std::size_t m, unsigned b, std::size_t v) {
  if (m == 0 || v == 0) throw ConfigError("codebook count and vector length must be >= 1");
  if (b < 1 || b > 16) throw ConfigError("bits per code must be in [1, 16]");
  return std::uint64_t{m} * (std::uint64_t{1} << b) * v * 2;
}

}  // namespace codegemm
