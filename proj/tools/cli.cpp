#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "codegemm/accounting.hpp"
#include "codegemm/error.hpp"
#include "codegemm/layer_file.hpp"
#include "codegemm/parallel.hpp"
#include "codegemm/quantizer.hpp"
#include "codegemm/synthetic.hpp"
#include "codegemm/tensor_io.hpp"

namespace codegemm::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json rational_json(const Rational& r) {
  std::ostringstream exact;
  exact << r;
  return {{"exact", exact.str()}, {"value", to_double(r)}};
}

json config_json(const QuantConfig& cfg) {
  return {{"v", cfg.v}, {"m", cfg.m}, {"b", cfg.b}, {"g", cfg.g}};
}

json bits_json(const BitBreakdown& bits) {
  return {{"q_code", rational_json(bits.q_code)},
          {"q_codebook", rational_json(bits.q_codebook)},
          {"q_norm", rational_json(bits.q_norm)},
          {"q_bar", rational_json(bits.q_bar)},
          {"code_bits", bits.code_bits},
          {"codebook_bits", bits.codebook_bits},
          {"norm_bits", bits.norm_bits},
          {"total_bits", bits.total_bits}};
}

void add_config_options(CLI::App* app, QuantConfig& cfg) {
  app->add_option("--v", cfg.v, "elements per vector")->capture_default_str();
  app->add_option("--m", cfg.m, "number of codebooks")->capture_default_str();
  app->add_option("--b", cfg.b, "bits per code")->capture_default_str();
  app->add_option("--g", cfg.g, "scale group width, -1 for one scale per row")->capture_default_str();
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw FormatError(FormatErrc::io, "cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw FormatError(FormatErrc::io, "write failed for " + path.string());
}

// Accepts a built-in suite name or a path to a shape CSV.
std::vector<BenchShape> resolve_shapes(const std::string& name, const std::vector<std::size_t>& batches) {
  const bool csv = name.size() > 4 && name.substr(name.size() - 4) == ".csv";
  if (csv || fs::is_regular_file(name)) return load_shape_csv(name);
  return suite_shapes(name, batches);
}

std::vector<Engine> parse_engines(const std::vector<std::string>& names) {
  std::vector<Engine> out;
  for (const auto& n : names) out.push_back(parse_engine(n));
  return out;
}

// Sum over a decoder block of median times, weighted by multiplicity.
json block_sums(const std::vector<BenchRecord>& records) {
  json sums = json::array();
  for (const auto& r : records) {
    auto it = std::find_if(sums.begin(), sums.end(), [&](const json& s) {
      return s["M"] == r.shape.M && s["engine"] == engine_name(r.engine) && s["tw"] == r.tiles.width &&
             s["th"] == r.tiles.height;
    });
    const double t = r.wall_us_median * static_cast<double>(r.shape.multiplicity);
    if (it == sums.end()) {
      sums.push_back({{"M", r.shape.M},
                      {"engine", engine_name(r.engine)},
                      {"tw", r.tiles.width},
                      {"th", r.tiles.height},
                      {"block_us", t}});
    } else {
      (*it)["block_us"] = (*it)["block_us"].get<double>() + t;
    }
  }
  return sums;
}

struct QuantizeArgs {
  std::string input;
  std::optional<std::size_t> rows;
  std::optional<std::size_t> cols;
  QuantConfig cfg;
  std::string out;
  std::string save_input;
  int threads = 0;
};

json cmd_quantize(const QuantizeArgs& a) {
  Matrix w = [&] {
    if (!a.input.empty()) return load_tensor(a.input);
    if (!a.rows || !a.cols) throw ConfigError("quantize needs --input or both --rows and --cols");
    return gaussian_matrix(*a.rows, *a.cols, a.cfg.seed);
  }();
  if (!a.save_input.empty()) save_tensor(w, a.save_input);

  QuantizeTrace trace;
  const QuantizedLayer q = quantize_layer(w, a.cfg, &trace, a.threads);
  serialize(q, a.out);
  const PayloadBits payload = payload_bits(q);

  return {{"command", "quantize"},
          {"out", a.out},
          {"rows", q.rows},
          {"cols", q.cols},
          {"config", config_json(q.config)},
          {"seed", q.config.seed},
          {"kmeans_iters", q.config.kmeans_iters},
          {"bits", bits_json(bit_breakdown(q.config, q.rows, q.cols))},
          {"payload_bits", payload.payload()},
          {"file_bytes", fs::file_size(a.out)},
          {"residual_sse", trace.residual_sse},
          {"relative_error", quant_error(w, reconstruct(q))}};
}

struct GemmArgs {
  std::string layer;
  std::string x;
  std::string engine;
  TileConfig tiles;
  std::string out;
  std::string counters;
  int threads = 0;
};

json cmd_gemm(const GemmArgs& a) {
  const Engine engine = parse_engine(a.engine);
  const QuantizedLayer q = deserialize(a.layer);
  const Matrix x = load_tensor(a.x);
  if (x.rows() != q.cols) {
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows, layer expects K=" + std::to_string(q.cols));
  }
  const int threads = resolve_threads(a.threads);

  GemmResult result = [&] {
    switch (engine) {
      case Engine::dense: {
        OpCounters c;
        Grid<float> y = dense_gemm<float>(reconstruct(q), x, &c, threads);
        return GemmResult{std::move(y), c, 0, 0};
      }
      case Engine::dequant: return dequant_gemm(q, x, DequantOrder::naive, threads);
      case Engine::dequant_mirrored: return dequant_gemm(q, x, DequantOrder::mirrored, threads);
      case Engine::codegemm: break;
    }
    a.tiles.validate(q.config);
    return codegemm_gemm(q, x, a.tiles, threads);
  }();
  save_tensor(to_half(result.y), a.out);

  const std::uint64_t dense_ref = std::uint64_t{q.rows} * x.cols() * q.cols;
  const OpCounters& c = result.counters;
  json counters = {{"engine", engine_name(engine)},
                   {"mac_build", c.mac_build},
                   {"mac_read", c.mac_read_adds},
                   {"lookups", c.lookups},
                   {"mac_dense", c.mac_dense},
                   {"dense_reference", dense_ref},
                   {"read_dense_ratio", rational_json(Rational(static_cast<std::int64_t>(c.mac_read_adds),
                                                               static_cast<std::int64_t>(dense_ref)))},
                   {"build_fraction", c.phase_build_fraction()},
                   {"psumbook_entries", result.psumbook_entries},
                   {"psumbooks_built", result.psumbooks_built}};
  if (engine == Engine::codegemm) {
    counters["tw"] = a.tiles.width;
    counters["th"] = a.tiles.height;
  }
  if (!a.counters.empty()) write_json_file(a.counters, counters);

  return {{"command", "gemm"},
          {"out", a.out},
          {"rows", result.y.rows()},
          {"cols", result.y.cols()},
          {"threads", threads},
          {"counters", counters}};
}

struct BitsArgs {
  QuantConfig cfg;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::optional<double> target;
  double tol = 0.05;
};

json cmd_bits(const BitsArgs& a) {
  if (!a.target) {
    return {{"command", "bits"},
            {"rows", a.rows},
            {"cols", a.cols},
            {"config", config_json(a.cfg)},
            {"bits", bits_json(bit_breakdown(a.cfg, a.rows, a.cols))}};
  }
  if (a.tol < 0) throw ConfigError("--tol must be non-negative");
  json list = json::array();
  for (const auto& c : enumerate_configs(*a.target, a.tol, a.rows, a.cols)) {
    json entry = config_json(c.config);
    entry["q_code"] = to_double(c.bits.q_code);
    entry["q_codebook"] = to_double(c.bits.q_codebook);
    entry["q_norm"] = to_double(c.bits.q_norm);
    entry["q_bar"] = to_double(c.bits.q_bar);
    entry["reduction_factor"] = rational_json(c.reduction_factor);
    list.push_back(entry);
  }
  return {{"command", "bits"},
          {"rows", a.rows},
          {"cols", a.cols},
          {"target", *a.target},
          {"tol", a.tol},
          {"count", list.size()},
          {"candidates", list}};
}

struct PredictArgs {
  QuantConfig cfg;
  std::size_t rows = 0;
  std::size_t n = 1;
  std::size_t k = 0;
  std::size_t tw = TileConfig{}.width;
};

json cmd_predict(const PredictArgs& a) {
  const ComplexityPrediction p = predict_complexity(a.cfg, a.rows, a.n, a.k, a.tw);
  return {{"command", "predict"},
          {"rows", a.rows},
          {"n", a.n},
          {"k", a.k},
          {"tw", a.tw},
          {"config", config_json(a.cfg)},
          {"c_build", p.c_build},
          {"c_read", p.c_read},
          {"c_dense", p.c_dense},
          {"reduction_factor", rational_json(p.reduction_factor)},
          {"build_fraction", rational_json(p.build_fraction())},
          {"psumbook_entries_per_tile", p.psumbook_entries_per_tile},
          {"psumbook_bytes_per_tile", p.psumbook_entries_per_tile * sizeof(float)},
          {"codebook_elements", p.codebook_elements},
          {"codebook_bytes", aqlm_codebook_bytes(a.cfg.m, a.cfg.b, a.cfg.v)}};
}

struct BenchArgs {
  std::string suite = "llama8b";
  std::vector<std::size_t> batch{1, 4, 8};
  std::vector<std::string> engines{"codegemm", "dequant"};
  std::vector<std::size_t> tw{TileConfig{}.width};
  std::vector<std::size_t> th{TileConfig{}.height};
  int repeats = 20;
  int warmup = 3;
  int threads = 0;
  std::string out;
  QuantConfig cfg{4, 1, 8, 128, 0, kDefaultKMeansIters};
};

std::optional<json> cmd_bench(const std::string& name, const BenchArgs& a, std::ostream& out) {
  BenchOptions opts;
  opts.cfg = a.cfg;
  opts.engines = parse_engines(a.engines);
  opts.tiles.clear();
  for (std::size_t w : a.tw) {
    for (std::size_t h : a.th) opts.tiles.push_back({w, h});
  }
  opts.repeats = a.repeats;
  opts.warmup = a.warmup;
  opts.threads = a.threads;
  opts.seed = a.cfg.seed;

  const auto records = run_bench(resolve_shapes(a.suite, a.batch), opts);
  if (a.out.empty()) {
    write_csv(out, records);
    return std::nullopt;
  }
  std::ofstream f(a.out);
  if (!f) throw FormatError(FormatErrc::io, "cannot write " + a.out);
  write_csv(f, records);
  if (!f) throw FormatError(FormatErrc::io, "write failed for " + a.out);
  return json{{"command", name},
              {"out", a.out},
              {"records", records.size()},
              {"threads", records.front().threads},
              {"block_sums", block_sums(records)}};
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << error_json(kind, message).dump() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Codebook-quantized GEMM laboratory", "codegemm"};
  app.require_subcommand(1);

  QuantizeArgs qa;
  auto* quantize = app.add_subcommand("quantize", "quantize a tensor (or a Gaussian proxy) into a layer file");
  auto* input_opt = quantize->add_option("--input", qa.input, "CGT1 weight tensor");
  quantize->add_option("--rows", qa.rows, "proxy rows")->excludes(input_opt);
  quantize->add_option("--cols", qa.cols, "proxy cols")->excludes(input_opt);
  add_config_options(quantize, qa.cfg);
  quantize->add_option("--seed", qa.cfg.seed, "k-means and proxy seed")->capture_default_str();
  quantize->add_option("--iters", qa.cfg.kmeans_iters, "Lloyd iterations")->capture_default_str();
  quantize->add_option("--out", qa.out, "layer file")->required();
  quantize->add_option("--save-input", qa.save_input, "also write the quantized input tensor");
  quantize->add_option("--threads", qa.threads);

  std::string rec_layer, rec_out;
  auto* recon = app.add_subcommand("reconstruct", "decode a layer file to a binary16 tensor");
  recon->add_option("--layer", rec_layer)->required();
  recon->add_option("--out", rec_out)->required();

  GemmArgs ga;
  auto* gemm = app.add_subcommand("gemm", "multiply a layer by an input tensor");
  gemm->add_option("--layer", ga.layer)->required();
  gemm->add_option("--x", ga.x, "CGT1 input, K x N")->required();
  gemm->add_option("--engine", ga.engine)
      ->required()
      ->check(CLI::IsMember({"dense", "dequant", "dequant-mirrored", "codegemm"}));
  gemm->add_option("--tw", ga.tiles.width)->capture_default_str();
  gemm->add_option("--th", ga.tiles.height)->capture_default_str();
  gemm->add_option("--out", ga.out, "output tensor, binary16")->required();
  gemm->add_option("--counters", ga.counters, "write the counter JSON here");
  gemm->add_option("--threads", ga.threads);

  BitsArgs ba;
  auto* bits = app.add_subcommand("bits", "average bits per weight, or configs near a target");
  add_config_options(bits, ba.cfg);
  bits->add_option("--rows", ba.rows)->required();
  bits->add_option("--cols", ba.cols)->required();
  bits->add_option("--target", ba.target, "list configs with q_bar within --tol of this");
  bits->add_option("--tol", ba.tol)->capture_default_str();

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "analytic operation counts");
  add_config_options(predict, pa.cfg);
  predict->add_option("--rows", pa.rows, "weight rows")->required();
  predict->add_option("--n", pa.n, "input columns")->capture_default_str();
  predict->add_option("--k", pa.k, "reduction length")->required();
  predict->add_option("--tw", pa.tw)->capture_default_str();

  std::string err_input, err_layer;
  auto* error = app.add_subcommand("error", "relative Frobenius error of a layer against its source");
  error->add_option("--input", err_input)->required();
  error->add_option("--layer", err_layer)->required();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "time engines over a shape suite");
  bench->add_option("--suite", bench_args.suite, "llama8b | llama70b | shapes.csv")->capture_default_str();
  bench->add_option("--batch", bench_args.batch, "batch sizes M")->delimiter(',')->capture_default_str();
  bench->add_option("--engines", bench_args.engines)->delimiter(',')->capture_default_str();
  bench->add_option("--repeats", bench_args.repeats)->capture_default_str();
  bench->add_option("--warmup", bench_args.warmup)->capture_default_str();
  bench->add_option("--tw", bench_args.tw.front())->capture_default_str();
  bench->add_option("--th", bench_args.th.front())->capture_default_str();
  bench->add_option("--threads", bench_args.threads);
  bench->add_option("--seed", bench_args.cfg.seed)->capture_default_str();
  bench->add_option("--out", bench_args.out, "CSV path, stdout when omitted");
  add_config_options(bench, bench_args.cfg);

  BenchArgs sweep_args;
  sweep_args.batch = {1};
  sweep_args.tw = {32, 64, 128};
  sweep_args.th = {2048, 4096};
  auto* sweep = app.add_subcommand("sweep", "bench over the cross product of tile settings");
  sweep->add_option("--shapes", sweep_args.suite, "llama8b | llama70b | shapes.csv")->capture_default_str();
  sweep->add_option("--batch", sweep_args.batch)->delimiter(',')->capture_default_str();
  sweep->add_option("--engines", sweep_args.engines)->delimiter(',')->capture_default_str();
  sweep->add_option("--tw", sweep_args.tw)->delimiter(',')->capture_default_str();
  sweep->add_option("--th", sweep_args.th)->delimiter(',')->capture_default_str();
  sweep->add_option("--repeats", sweep_args.repeats)->capture_default_str();
  sweep->add_option("--warmup", sweep_args.warmup)->capture_default_str();
  sweep->add_option("--threads", sweep_args.threads);
  sweep->add_option("--seed", sweep_args.cfg.seed)->capture_default_str();
  sweep->add_option("--out", sweep_args.out, "CSV path, stdout when omitted");
  add_config_options(sweep, sweep_args.cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, kUsage, "usage", e.what());
  }

  try {
    std::optional<json> summary;
    if (*quantize) {
      summary = cmd_quantize(qa);
    } else if (*recon) {
      save_tensor(reconstruct(deserialize(rec_layer)), rec_out);
      summary = json{{"command", "reconstruct"}, {"out", rec_out}};
    } else if (*gemm) {
      summary = cmd_gemm(ga);
    } else if (*bits) {
      summary = cmd_bits(ba);
    } else if (*predict) {
      summary = cmd_predict(pa);
    } else if (*error) {
      const Matrix w = load_tensor(err_input);
      summary = json{{"command", "error"}, {"relative_error", quant_error(w, reconstruct(deserialize(err_layer)))}};
    } else if (*bench) {
      summary = cmd_bench("bench", bench_args, out);
    } else if (*sweep) {
      summary = cmd_bench("sweep", sweep_args, out);
    }
    if (summary) out << summary->dump(2) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    return fail(err, kConfig, "config", e.what());
  } catch (const ShapeError& e) {
    return fail(err, kShape, "shape", e.what());
  } catch (const FormatError& e) {
    return fail(err, kFormat, "format", e.what());
  } catch (const InvariantError& e) {
    return fail(err, kInvariant, "invariant", e.what());
  } catch (const std::exception& e) {
    return fail(err, kFailure, "internal", e.what());
  }
}

}  // namespace codegemm::cli
