#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "codegemm/engines.hpp"
#include "codegemm/op_counters.hpp"
#include "codegemm/quant_config.hpp"

namespace codegemm::cli {

// Benchmark shapes use the kernel-latency convention: M is the batch (input
// columns), N the output features (weight rows), K the reduction length.
struct BenchShape {
  std::size_t M = 1;
  std::size_t N = 0;
  std::size_t K = 0;
  std::size_t multiplicity = 1;  // occurrences per decoder block
  friend bool operator==(const BenchShape&, const BenchShape&) = default;
};

enum class Engine { dense, dequant, dequant_mirrored, codegemm };

Engine parse_engine(const std::string& name);
std::string engine_name(Engine e);

// Built-in suites: "llama8b" and "llama70b". Throws ConfigError for any
// other name.
std::vector<BenchShape> suite_shapes(const std::string& suite, const std::vector<std::size_t>& batches);

// Shape CSV with header "M,N,K" and an optional fourth column
// "multiplicity". Throws FormatError on malformed input.
std::vector<BenchShape> parse_shape_csv(std::istream& in);
std::vector<BenchShape> load_shape_csv(const std::filesystem::path& path);

struct BenchRecord {
  BenchShape shape;
  Engine engine = Engine::codegemm;
  QuantConfig cfg;
  TileConfig tiles;
  int threads = 1;
  double wall_us_median = 0.0;
  double wall_us_min = 0.0;
  OpCounters counters;
  std::uint64_t mac_dense = 0;  // M*N*K, the dense reference count
  double build_fraction = 0.0;
  double q_bar = 0.0;
};

struct BenchOptions {
  QuantConfig cfg;
  std::vector<Engine> engines{Engine::codegemm, Engine::dequant};
  std::vector<TileConfig> tiles{TileConfig{}};
  int repeats = 20;
  int warmup = 3;
  int threads = 0;
  std::uint64_t seed = 0;
};

double median(std::vector<double> samples);

// One record per shape x tile setting x engine. Layers come from
// synthetic_layer(N, K, cfg, seed) and inputs from a Gaussian proxy, so the
// non-timing fields depend only on the options. Throws InvariantError if an
// engine's counters disagree with the analytic prediction.
std::vector<BenchRecord> run_bench(const std::vector<BenchShape>& shapes, const BenchOptions& opts);

inline constexpr const char* kBenchCsvHeader =
    "M,N,K,engine,v,m,b,g,tw,th,threads,wall_us_median,wall_us_min,mac_build,mac_read,mac_dense,lookups,"
    "build_fraction,q_bar";

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records);

}  // namespace codegemm::cli
