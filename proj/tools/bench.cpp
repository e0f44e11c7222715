#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "codegemm/accounting.hpp"
#include "codegemm/error.hpp"
#include "codegemm/parallel.hpp"
#include "codegemm/quantizer.hpp"
#include "codegemm/synthetic.hpp"

namespace codegemm::cli {
namespace {

struct SuiteLayer {
  std::size_t n;
  std::size_t k;
  std::size_t multiplicity;
};

// Per decoder block: q and o projections share (d, d), gate and up share
// (ffn, d), down is (d, ffn). The narrower k/v projections of grouped-query
// attention are left out.
std::vector<SuiteLayer> block_layers(std::size_t d, std::size_t ffn) {
  return {{d, d, 2}, {ffn, d, 2}, {d, ffn, 1}};
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return c != ' ' && c != '\t' && c != '\r'; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t parse_positive(const std::string& cell, std::size_t line_no) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || value == 0) {
    throw FormatError(FormatErrc::invariant_violation,
                      "shape csv line " + std::to_string(line_no) + ": '" + cell + "' is not a positive integer");
  }
  return value;
}

struct Timing {
  double median_us;
  double min_us;
};

template <class Fn>
Timing time_engine(int warmup, int repeats, Fn&& fn) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
  }
  // A clock tick coarser than the call still reports a positive time.
  for (double& s : samples) s = std::max(s, 1e-3);
  return {median(samples), *std::min_element(samples.begin(), samples.end())};
}

void check_counters(const BenchRecord& rec, const ComplexityPrediction& p) {
  const OpCounters& c = rec.counters;
  bool ok = true;
  if (rec.engine == Engine::codegemm) {
    ok = c.mac_build == p.c_build && c.mac_read_adds == p.c_read && c.lookups == p.c_read && c.mac_dense == 0;
  } else {
    ok = c.mac_build == 0 && c.mac_read_adds == 0 && c.lookups == 0 && c.mac_dense == p.c_dense;
  }
  if (!ok) throw InvariantError(engine_name(rec.engine) + " counters disagree with the complexity prediction");
}

}  // namespace

Engine parse_engine(const std::string& name) {
  if (name == "dense") return Engine::dense;
  if (name == "dequant") return Engine::dequant;
  if (name == "dequant-mirrored") return Engine::dequant_mirrored;
  if (name == "codegemm") return Engine::codegemm;
  throw ConfigError("unknown engine '" + name + "' (expected dense, dequant, dequant-mirrored or codegemm)");
}

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::dense: return "dense";
    case Engine::dequant: return "dequant";
    case Engine::dequant_mirrored: return "dequant-mirrored";
    case Engine::codegemm: return "codegemm";
  }
  return "?";
}

std::vector<BenchShape> suite_shapes(const std::string& suite, const std::vector<std::size_t>& batches) {
  std::vector<SuiteLayer> layers;
  if (suite == "llama8b" || suite == "llama70b") layers = block_layers(4096, 14336);
  if (suite == "llama70b") {
    const auto big = block_layers(8192, 28672);
    layers.insert(layers.end(), big.begin(), big.end());
  }
  if (layers.empty()) throw ConfigError("unknown suite '" + suite + "' (expected llama8b, llama70b or a .csv file)");
  if (batches.empty()) throw ConfigError("at least one batch size is required");

  std::vector<BenchShape> out;
  for (std::size_t batch : batches) {
    if (batch == 0) throw ConfigError("batch sizes must be positive");
  }
  for (const auto& l : layers) {
    for (std::size_t batch : batches) out.push_back({batch, l.n, l.k, l.multiplicity});
  }
  return out;
}

std::vector<BenchShape> parse_shape_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split(trim(line));
  }
  const bool with_mult = header == std::vector<std::string>{"M", "N", "K", "multiplicity"};
  if (header != std::vector<std::string>{"M", "N", "K"} && !with_mult) {
    throw FormatError(FormatErrc::invariant_violation, "shape csv must start with the header M,N,K");
  }

  std::vector<BenchShape> out;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError(FormatErrc::invariant_violation, "shape csv line " + std::to_string(line_no) + " has " +
                                                             std::to_string(cells.size()) + " fields, expected " +
                                                             std::to_string(header.size()));
    }
    BenchShape s{parse_positive(cells[0], line_no), parse_positive(cells[1], line_no),
                 parse_positive(cells[2], line_no), 1};
    if (with_mult) s.multiplicity = parse_positive(cells[3], line_no);
    out.push_back(s);
  }
  if (out.empty()) throw FormatError(FormatErrc::truncated, "shape csv has no rows");
  return out;
}

std::vector<BenchShape> load_shape_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  return parse_shape_csv(in);
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw InvariantError("median of no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::vector<BenchRecord> run_bench(const std::vector<BenchShape>& shapes, const BenchOptions& opts) {
  if (opts.repeats < 1) throw ConfigError("--repeats must be at least 1");
  if (opts.warmup < 0) throw ConfigError("--warmup must be non-negative");
  if (opts.engines.empty()) throw ConfigError("no engines selected");
  if (opts.tiles.empty()) throw ConfigError("no tile settings selected");
  opts.cfg.validate();
  const int threads = resolve_threads(opts.threads);

  // Consecutive shapes with the same (N, K) reuse the layer. Only one is
  // kept alive; the largest suite layers run to hundreds of megabytes.
  std::optional<QuantizedLayer> layer;
  std::optional<Matrix> w_hat;
  std::vector<BenchRecord> out;
  for (const auto& shape : shapes) {
    opts.cfg.validate_for(shape.N, shape.K);
    for (const auto& tiles : opts.tiles) tiles.validate(opts.cfg);

    if (!layer || layer->rows != shape.N || layer->cols != shape.K) {
      w_hat.reset();
      layer.reset();
      layer = synthetic_layer(shape.N, shape.K, opts.cfg, opts.seed);
    }
    const QuantizedLayer& q = *layer;
    const Matrix x = gaussian_matrix(shape.K, shape.M, opts.seed + 1);
    const double q_bar = to_double(bit_breakdown(opts.cfg, shape.N, shape.K).q_bar);

    for (const auto& tiles : opts.tiles) {
      const ComplexityPrediction p = predict_complexity(opts.cfg, shape.N, shape.M, shape.K, tiles.width);
      for (Engine engine : opts.engines) {
        BenchRecord rec;
        rec.shape = shape;
        rec.engine = engine;
        rec.cfg = opts.cfg;
        rec.tiles = tiles;
        rec.threads = threads;
        rec.q_bar = q_bar;
        rec.mac_dense = p.c_dense;

        std::optional<GemmResult> last;
        Timing t{};
        switch (engine) {
          case Engine::dense: {
            if (!w_hat) w_hat = reconstruct(q);
            t = time_engine(opts.warmup, opts.repeats, [&] {
              OpCounters c;
              Grid<float> y = dense_gemm<float>(*w_hat, x, &c, threads);
              last.emplace(GemmResult{std::move(y), c, 0, 0});
            });
            break;
          }
          case Engine::dequant:
            t = time_engine(opts.warmup, opts.repeats,
                            [&] { last = dequant_gemm(q, x, DequantOrder::naive, threads); });
            break;
          case Engine::dequant_mirrored:
            t = time_engine(opts.warmup, opts.repeats,
                            [&] { last = dequant_gemm(q, x, DequantOrder::mirrored, threads); });
            break;
          case Engine::codegemm:
            t = time_engine(opts.warmup, opts.repeats, [&] { last = codegemm_gemm(q, x, tiles, threads); });
            break;
        }
        rec.wall_us_median = t.median_us;
        rec.wall_us_min = t.min_us;
        rec.counters = last->counters;
        if (engine == Engine::codegemm) rec.build_fraction = to_double(p.build_fraction());
        check_counters(rec, p);
        out.push_back(rec);
      }
    }
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kBenchCsvHeader << '\n';
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%s,%zu,%zu,%u,%lld,%zu,%zu,%d,%.3f,%.3f,%llu,%llu,%llu,%llu,%.9f,%.6f\n",
                  r.shape.M, r.shape.N, r.shape.K, engine_name(r.engine).c_str(), r.cfg.v, r.cfg.m, r.cfg.b,
                  static_cast<long long>(r.cfg.g), r.tiles.width, r.tiles.height, r.threads, r.wall_us_median,
                  r.wall_us_min, static_cast<unsigned long long>(r.counters.mac_build),
                  static_cast<unsigned long long>(r.counters.mac_read_adds),
                  static_cast<unsigned long long>(r.mac_dense), static_cast<unsigned long long>(r.counters.lookups),
                  r.build_fraction, r.q_bar);
    out << buf;
  }
}

}  // namespace codegemm::cli
