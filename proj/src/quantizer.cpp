#include "codegemm/quantizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "codegemm/kmeans.hpp"
#include "codegemm/parallel.hpp"

namespace codegemm {
namespace {

double sum_of_squares(std::span<const float> values) {
  double total = 0.0;
  for (float x : values) total += static_cast<double>(x) * static_cast<double>(x);
  return total;
}

// Nearest stored centroid per vector, ties to the lowest index.
std::vector<std::uint16_t> assign_to_stored(std::span<const float> vectors, std::span<const float> centroids,
                                            std::size_t v, std::size_t k, int threads) {
  const auto n = static_cast<std::ptrdiff_t>(vectors.size() / v);
  std::vector<std::uint16_t> codes(static_cast<std::size_t>(n));
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const float* p = vectors.data() + static_cast<std::size_t>(i) * v;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const float* q = centroids.data() + c * v;
      double d = 0.0;
      for (std::size_t e = 0; e < v; ++e) {
        const double diff = static_cast<double>(p[e]) - static_cast<double>(q[e]);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    codes[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(best);
  }
  return codes;
}

bool positive_finite(Half h) noexcept { return f16_is_finite(h) && (h.bits & 0x8000) == 0 && h.bits != 0; }

}  // namespace

void QuantizedLayer::validate() const {
  config.validate_for(rows, cols);
  if (scales.rows() != rows || scales.cols() != groups_per_row()) {
    throw InvariantError("scale plane shape does not match the layer");
  }
  for (Half s : scales.data()) {
    if (!positive_finite(s)) throw InvariantError("scales must be finite and strictly positive");
  }
  if (planes.size() != config.m || books.size() != config.m) {
    throw InvariantError("layer must carry exactly m code planes and m codebooks");
  }
  const std::size_t entries = config.codebook_entries();
  for (const auto& plane : planes) {
    if (plane.rows() != rows || plane.cols() != segments_per_row()) {
      throw InvariantError("code plane shape does not match the layer");
    }
    for (std::uint16_t code : plane.data()) {
      if (code >= entries) throw InvariantError("code " + std::to_string(code) + " exceeds 2^b - 1");
    }
  }
  for (const auto& book : books) {
    if (book.v != config.v || book.entries.size() != entries * config.v) {
      throw InvariantError("codebook must hold 2^b centroids of length v");
    }
    for (Half h : book.entries) {
      if (!f16_is_finite(h)) throw InvariantError("codebook entries must be finite");
    }
  }
}

bool same_encoding(const QuantizedLayer& a, const QuantizedLayer& b) {
  const auto& ca = a.config;
  const auto& cb = b.config;
  return a.rows == b.rows && a.cols == b.cols && ca.v == cb.v && ca.m == cb.m && ca.b == cb.b && ca.g == cb.g &&
         ca.seed == cb.seed && a.scales == b.scales && a.planes == b.planes && a.books == b.books;
}

ScalePlane compute_scales(const Matrix& w, std::int64_t g) {
  if (g != kRowWiseGroup && g < 1) throw ConfigError("group size must be positive or -1");
  const std::size_t width = g == kRowWiseGroup ? w.cols() : static_cast<std::size_t>(g);
  if (w.cols() % width != 0) {
    throw ConfigError("K=" + std::to_string(w.cols()) + " is not divisible by g=" + std::to_string(width));
  }
  const std::size_t groups = w.cols() / width;
  ScalePlane scales(w.rows(), groups);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto row = w.row(r);
    for (std::size_t gi = 0; gi < groups; ++gi) {
      double max_abs = 0.0;
      for (std::size_t c = gi * width; c < (gi + 1) * width; ++c) {
        const double x = f16_decode(row[c]);
        if (!std::isfinite(x)) throw InvariantError("weights must be finite");
        max_abs = std::max(max_abs, std::fabs(x));
      }
      scales(r, gi) = max_abs == 0.0 ? f16_encode(1.0) : f16_encode(max_abs);
    }
  }
  return scales;
}

Grid<float> normalize(const Matrix& w, const ScalePlane& scales) {
  if (scales.rows() != w.rows() || w.cols() % scales.cols() != 0) {
    throw ShapeError("scale plane does not tile the weight matrix");
  }
  const std::size_t width = w.cols() / scales.cols();
  Grid<float> out(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) {
      out(r, c) = f16_to_float(w(r, c)) / f16_to_float(scales(r, c / width));
    }
  }
  return out;
}

QuantizedLayer quantize_layer(const Matrix& w, const QuantConfig& cfg, QuantizeTrace* trace, int threads) {
  cfg.validate_for(w.rows(), w.cols());
  threads = resolve_threads(threads);

  QuantizedLayer q;
  q.rows = w.rows();
  q.cols = w.cols();
  q.config = cfg;
  q.scales = compute_scales(w, cfg.g);

  const std::size_t v = cfg.v;
  const std::size_t k = cfg.codebook_entries();
  const std::size_t segments = q.segments_per_row();
  Grid<float> residual = partition_vectors(normalize(w, q.scales), v);
  auto r = residual.data();

  double previous = sum_of_squares(r);
  if (trace) *trace = QuantizeTrace{{previous}, {}, {}};

  for (std::size_t t = 1; t <= cfg.m; ++t) {
    const KMeansResult fit = kmeans_fit(r, v, k, cfg.seed ^ t, cfg.kmeans_iters, threads);

    Codebook book{v, std::vector<Half>(k * v)};
    for (std::size_t i = 0; i < book.entries.size(); ++i) book.entries[i] = f16_encode(fit.centroids[i]);
    const std::vector<float> stored = widen(book.entries);

    std::vector<std::uint16_t> codes = assign_to_stored(r, stored, v, k, threads);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const float* c = stored.data() + std::size_t{codes[i]} * v;
      for (std::size_t e = 0; e < v; ++e) r[i * v + e] -= c[e];
    }

    const double current = sum_of_squares(r);
    if (current > previous) {
      throw std::logic_error("residual SSE increased at stage " + std::to_string(t));
    }
    if (trace) {
      trace->residual_sse.push_back(current);
      trace->kmeans_sse.push_back(fit.sse);
      trace->kmeans_iterations.push_back(fit.iterations);
    }
    previous = current;

    q.books.push_back(std::move(book));
    q.planes.emplace_back(q.rows, segments, std::move(codes));
  }
  return q;
}

Matrix reconstruct(const QuantizedLayer& q) {
  const std::size_t v = q.config.v;
  const std::size_t segments = q.segments_per_row();
  std::vector<std::vector<float>> books;
  books.reserve(q.books.size());
  for (const auto& book : q.books) books.push_back(widen(book.entries));

  Matrix out(q.rows, q.cols);
  for (std::size_t r = 0; r < q.rows; ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < segments; ++j) {
      const float scale = f16_to_float(q.scales(r, q.group_of_segment(j)));
      for (std::size_t e = 0; e < v; ++e) {
        float sum = books[0][std::size_t{q.planes[0](r, j)} * v + e];
        for (std::size_t t = 1; t < books.size(); ++t) sum += books[t][std::size_t{q.planes[t](r, j)} * v + e];
        row[j * v + e] = f16_encode(scale * sum);
      }
    }
  }
  return out;
}

double quant_error(const Matrix& w, const Matrix& w_hat) {
  if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols()) throw ShapeError("quant_error operands differ in shape");
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = f16_decode(w.data()[i]);
    const double b = f16_decode(w_hat.data()[i]);
    diff += (a - b) * (a - b);
    norm += a * a;
  }
  if (norm == 0.0) throw InvariantError("relative error is undefined for an all-zero reference");
  return std::sqrt(diff) / std::sqrt(norm);
}

}  // namespace codegemm
