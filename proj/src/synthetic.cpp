#include "codegemm/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace codegemm {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  Matrix out(rows, cols);
  for (Half& h : out.data()) h = f16_encode(stddev * rng.normal());
  return out;
}

QuantizedLayer synthetic_layer(std::size_t rows, std::size_t cols, const QuantConfig& cfg, std::uint64_t seed) {
  cfg.validate_for(rows, cols);
  Rng rng(seed);
  QuantizedLayer q;
  q.rows = rows;
  q.cols = cols;
  q.config = cfg;

  // The max of |N(0, 0.02^2)| over a group, like a real weight matrix would give.
  const std::size_t width = cfg.group_width(cols);
  q.scales = ScalePlane(rows, cols / width);
  for (Half& s : q.scales.data()) {
    double max_abs = 0.0;
    const std::size_t draws = std::min<std::size_t>(width, 64);
    for (std::size_t i = 0; i < draws; ++i) max_abs = std::max(max_abs, std::fabs(0.02 * rng.normal()));
    s = f16_encode(max_abs > 0.0 ? max_abs : 1.0);
    if (s.bits == 0) s = f16_encode(1.0);
  }

  const std::size_t entries = cfg.codebook_entries();
  const double spread = 0.5 / std::sqrt(static_cast<double>(cfg.m));
  for (std::size_t t = 0; t < cfg.m; ++t) {
    Codebook book{cfg.v, std::vector<Half>(entries * cfg.v)};
    for (Half& h : book.entries) h = f16_encode(spread * rng.normal());
    q.books.push_back(std::move(book));
  }
  const std::size_t segments = cols / cfg.v;
  for (std::size_t t = 0; t < cfg.m; ++t) {
    CodePlane plane(rows, segments);
    for (auto& code : plane.data()) code = static_cast<std::uint16_t>(rng.below(entries));
    q.planes.push_back(std::move(plane));
  }
  return q;
}

}  // namespace codegemm
