#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bench.hpp"
#include "cli.hpp"
#include "codegemm/accounting.hpp"
#include "codegemm/layer_file.hpp"
#include "codegemm/parallel.hpp"
#include "codegemm/synthetic.hpp"
#include "codegemm/tensor_io.hpp"

using namespace codegemm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("codegemm_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

using Row = std::vector<std::string>;

std::vector<Row> csv_rows(const std::string& text) {
  std::vector<Row> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    Row r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(cell);
    rows.push_back(r);
  }
  return rows;
}

std::size_t col(const std::vector<Row>& rows, const std::string& name) {
  for (std::size_t i = 0; i < rows.front().size(); ++i) {
    if (rows.front()[i] == name) return i;
  }
  FAIL("no column " << name);
  return 0;
}

std::uint64_t u64(const std::string& s) { return std::stoull(s); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("quantize on the 4x32 illustration config") {
  TempDir dir("quant");
  const auto r = call({"quantize", "--rows", "4", "--cols", "32", "--v", "8", "--m", "1", "--b", "2", "--g", "16",
                       "--seed", "3", "--out", dir / "l.cgmm"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  QuantConfig cfg{8, 1, 2, 16};
  const BitBreakdown bits = bit_breakdown(cfg, 4, 32);
  CHECK(j["bits"]["q_bar"]["value"].get<double>() == to_double(bits.q_bar));
  CHECK(j["payload_bits"].get<std::uint64_t>() == bits.total_bits);

  const QuantizedLayer q = deserialize(dir / "l.cgmm");
  CHECK(q.rows == 4);
  CHECK(q.cols == 32);
  CHECK(q.config.v == 8);
  CHECK(q.config.g == 16);
}

TEST_CASE("quantize rejects invalid configurations") {
  TempDir dir("bad");
  SUBCASE("v does not divide cols") {
    const auto r = call({"quantize", "--rows", "4", "--cols", "32", "--v", "3", "--out", dir / "x"});
    CHECK(r.code == cli::kConfig);
    CHECK(json::parse(r.err)["error"]["kind"] == "config");
  }
  SUBCASE("group narrower than a vector") {
    const auto r = call({"quantize", "--rows", "4", "--cols", "32", "--v", "16", "--g", "8", "--out", dir / "x"});
    CHECK(r.code == cli::kConfig);
  }
  SUBCASE("no input at all") {
    CHECK(call({"quantize", "--out", dir / "x"}).code == cli::kConfig);
  }
  SUBCASE("missing input file") {
    const auto r = call({"quantize", "--input", dir / "absent.cgt", "--out", dir / "x"});
    CHECK(r.code == cli::kFormat);
    CHECK(json::parse(r.err)["error"]["kind"] == "format");
  }
  CHECK_FALSE(fs::exists(dir / "x"));
}

TEST_CASE("gemm engines through files") {
  TempDir dir("gemm");
  REQUIRE(call({"quantize", "--rows", "48", "--cols", "64", "--v", "4", "--m", "2", "--b", "4", "--g", "16",
                "--iters", "4", "--out", dir / "l.cgmm"})
              .code == 0);
  save_tensor(gaussian_matrix(64, 3, 11), dir / "x.cgt");

  const auto gemm = [&](const std::string& engine) {
    return call({"gemm", "--layer", dir / "l.cgmm", "--x", dir / "x.cgt", "--engine", engine, "--tw", "16", "--out",
                 dir / ("y_" + engine + ".cgt"), "--counters", dir / ("c_" + engine + ".json")});
  };
  REQUIRE(gemm("codegemm").code == 0);
  REQUIRE(gemm("dequant-mirrored").code == 0);
  REQUIRE(gemm("dequant").code == 0);
  REQUIRE(gemm("dense").code == 0);

  CHECK(slurp(dir / "y_codegemm.cgt") == slurp(dir / "y_dequant-mirrored.cgt"));
  CHECK(load_tensor(dir / "y_dense.cgt") == load_tensor(dir / "y_dequant.cgt"));

  const json c = json::parse(slurp(dir / "c_codegemm.json"));
  CHECK(c["read_dense_ratio"]["exact"] == "1/2");
  CHECK(c["mac_build"].get<std::uint64_t>() == 2ull * 16 * 64 * 3);
  CHECK(c["psumbook_entries"].get<std::uint64_t>() == 2ull * 16 * 16 / 4);

  SUBCASE("shape mismatch") {
    save_tensor(gaussian_matrix(32, 3, 1), dir / "bad.cgt");
    const auto r = call({"gemm", "--layer", dir / "l.cgmm", "--x", dir / "bad.cgt", "--engine", "codegemm", "--out",
                         dir / "y.cgt"});
    CHECK(r.code == cli::kShape);
  }
  SUBCASE("tile width not a multiple of v") {
    const auto r = call({"gemm", "--layer", dir / "l.cgmm", "--x", dir / "x.cgt", "--engine", "codegemm", "--tw",
                         "6", "--out", dir / "y.cgt"});
    CHECK(r.code == cli::kConfig);
  }
}

TEST_CASE("gemm counters for m=1, v=4 give read/dense of one quarter") {
  TempDir dir("quarter");
  REQUIRE(call({"quantize", "--rows", "16", "--cols", "32", "--v", "4", "--m", "1", "--b", "3", "--iters", "2",
                "--out", dir / "l.cgmm"})
              .code == 0);
  save_tensor(gaussian_matrix(32, 2, 5), dir / "x.cgt");
  const auto r = call({"gemm", "--layer", dir / "l.cgmm", "--x", dir / "x.cgt", "--engine", "codegemm", "--out",
                       dir / "y.cgt"});
  REQUIRE(r.code == 0);
  const json c = json::parse(r.out)["counters"];
  CHECK(c["read_dense_ratio"]["exact"] == "1/4");
  CHECK(c["read_dense_ratio"]["value"].get<double>() == 0.25);
}

TEST_CASE("unknown engine is a usage error") {
  const auto r = call({"gemm", "--layer", "a", "--x", "b", "--engine", "bogus", "--out", "c"});
  CHECK(r.code == cli::kUsage);
  CHECK(json::parse(r.err)["error"]["kind"] == "usage");
}

TEST_CASE("bits reproduces the average-bits table rows") {
  struct RowCase {
    const char* v;
    const char* m;
    const char* g;
    double q_code, q_codebook, q_norm, q_bar;
  };
  const RowCase rows[] = {
      {"4", "1", "-1", 2.0, 0.001, 0.004, 2.005},  {"8", "2", "-1", 2.0, 0.004, 0.004, 2.008},
      {"16", "4", "-1", 2.0, 0.016, 0.004, 2.020}, {"8", "1", "16", 1.0, 0.002, 1.000, 2.002},
      {"16", "3", "32", 1.5, 0.012, 0.500, 2.012},
  };
  for (const auto& row : rows) {
    CAPTURE(row.v);
    CAPTURE(row.m);
    CAPTURE(row.g);
    const auto r = call({"bits", "--v", row.v, "--m", row.m, "--b", "8", "--g", row.g, "--rows", "4096", "--cols",
                         "4096"});
    REQUIRE(r.code == 0);
    const json bits = json::parse(r.out)["bits"];
    CHECK(std::abs(bits["q_code"]["value"].get<double>() - row.q_code) <= 0.0005);
    CHECK(std::abs(bits["q_codebook"]["value"].get<double>() - row.q_codebook) <= 0.0005);
    CHECK(std::abs(bits["q_norm"]["value"].get<double>() - row.q_norm) <= 0.0005);
    CHECK(std::abs(bits["q_bar"]["value"].get<double>() - row.q_bar) <= 0.0005);
  }
}

TEST_CASE("bits enumeration around two bits") {
  const auto r = call({"bits", "--rows", "4096", "--cols", "4096", "--target", "2.0", "--tol", "0.05"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["count"].get<std::size_t>() >= 5);
  const auto has = [&](std::size_t v, std::size_t m, unsigned b, std::int64_t g) {
    for (const auto& c : j["candidates"]) {
      if (c["v"] == v && c["m"] == m && c["b"] == b && c["g"] == g) return true;
    }
    return false;
  };
  CHECK(has(4, 1, 8, -1));
  CHECK(has(8, 2, 8, -1));
  CHECK(has(16, 4, 8, -1));
  CHECK(has(8, 1, 8, 16));
  CHECK(has(16, 3, 8, 32));
}

TEST_CASE("bits without --rows is a usage error") {
  const auto r = call({"bits", "--v", "8", "--cols", "4096"});
  CHECK(r.code == cli::kUsage);
}

TEST_CASE("predict matches the accounting module") {
  const auto r = call({"predict", "--v", "8", "--m", "2", "--b", "6", "--g", "64", "--rows", "256", "--n", "3", "--k",
                       "512", "--tw", "64"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  const auto p = predict_complexity(QuantConfig{8, 2, 6, 64}, 256, 3, 512, 64);
  CHECK(j["c_build"].get<std::uint64_t>() == p.c_build);
  CHECK(j["c_read"].get<std::uint64_t>() == p.c_read);
  CHECK(j["c_dense"].get<std::uint64_t>() == p.c_dense);
  CHECK(j["psumbook_entries_per_tile"].get<std::uint64_t>() == 2u * 64 * 64 / 8);
  CHECK(j["reduction_factor"]["exact"] == "1/4");
}

TEST_CASE("reconstruct and error subcommands") {
  TempDir dir("recon");
  REQUIRE(call({"quantize", "--rows", "8", "--cols", "32", "--v", "4", "--b", "4", "--iters", "3", "--out",
                dir / "l.cgmm", "--save-input", dir / "w.cgt"})
              .code == 0);
  REQUIRE(call({"reconstruct", "--layer", dir / "l.cgmm", "--out", dir / "r.cgt"}).code == 0);
  const QuantizedLayer q = deserialize(dir / "l.cgmm");
  CHECK(load_tensor(dir / "r.cgt") == reconstruct(q));

  const auto r = call({"error", "--input", dir / "w.cgt", "--layer", dir / "l.cgmm"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["relative_error"].get<double>() == quant_error(load_tensor(dir / "w.cgt"), reconstruct(q)));
}

TEST_CASE("identical flags give identical files") {
  TempDir dir("repeat");
  for (const char* name : {"a.cgmm", "b.cgmm"}) {
    REQUIRE(call({"quantize", "--rows", "16", "--cols", "64", "--v", "8", "--m", "2", "--b", "4", "--g", "32",
                  "--seed", "9", "--out", dir / name})
                .code == 0);
  }
  CHECK(slurp(dir / "a.cgmm") == slurp(dir / "b.cgmm"));

  save_tensor(gaussian_matrix(64, 2, 4), dir / "x.cgt");
  for (const char* name : {"ya", "yb"}) {
    REQUIRE(call({"gemm", "--layer", dir / "a.cgmm", "--x", dir / "x.cgt", "--engine", "codegemm", "--out",
                  dir / name, "--counters", dir / (std::string(name) + ".json")})
                .code == 0);
  }
  CHECK(slurp(dir / "ya") == slurp(dir / "yb"));
  CHECK(slurp(dir / "ya.json") == slurp(dir / "yb.json"));
}

TEST_CASE("built-in suites") {
  const auto s8 = cli::suite_shapes("llama8b", {1, 4, 8});
  CHECK(s8.size() == 9);
  const auto s70 = cli::suite_shapes("llama70b", {1});
  const cli::BenchShape table_workload{1, 28672, 8192, 2};
  CHECK(std::find(s70.begin(), s70.end(), table_workload) != s70.end());
  std::size_t weights = 0;
  for (const auto& s : cli::suite_shapes("llama8b", {1})) weights += s.multiplicity * s.N * s.K;
  CHECK(weights == 2 * 4096ull * 4096 + 3 * 14336ull * 4096);
  CHECK_THROWS_AS(cli::suite_shapes("llama3", {1}), ConfigError);
}

TEST_CASE("shape csv parsing") {
  SUBCASE("plain") {
    std::istringstream in("M,N,K\n1,64,128\n\n4, 32 ,256\n");
    const auto s = cli::parse_shape_csv(in);
    REQUIRE(s.size() == 2);
    CHECK(s[1] == cli::BenchShape{4, 32, 256, 1});
  }
  SUBCASE("with multiplicity") {
    std::istringstream in("M,N,K,multiplicity\n2,64,128,3\n");
    CHECK(cli::parse_shape_csv(in).front().multiplicity == 3);
  }
  SUBCASE("malformed") {
    for (const char* text : {"N,K\n1,2\n", "M,N,K\n1,2\n", "M,N,K\n1,x,3\n", "M,N,K\n0,2,4\n", "M,N,K\n", ""}) {
      CAPTURE(text);
      std::istringstream in(text);
      CHECK_THROWS_AS(cli::parse_shape_csv(in), FormatError);
    }
  }
}

TEST_CASE("median") {
  CHECK(cli::median({5.0}) == 5.0);
  CHECK(cli::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(cli::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(cli::median({}), InvariantError);
}

TEST_CASE("bench over a custom shape csv") {
  TempDir dir("bench");
  write_text(dir / "shapes.csv", "M,N,K\n1,64,256\n3,128,128\n");
  const auto r = call({"bench", "--suite", dir / "shapes.csv", "--engines", "codegemm,dequant,dequant-mirrored,dense",
                       "--repeats", "1", "--warmup", "0", "--out", dir / "out.csv"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(dir / "out.csv"));
  REQUIRE(rows.size() == 1 + 2 * 4);
  CHECK(slurp(dir / "out.csv").substr(0, std::string(cli::kBenchCsvHeader).size()) == cli::kBenchCsvHeader);

  const QuantConfig cfg{4, 1, 8, 128};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const Row& row = rows[i];
    CAPTURE(i);
    const std::size_t M = u64(row[0]), N = u64(row[1]), K = u64(row[2]);
    CHECK((i <= 4 ? M == 1 && N == 64 && K == 256 : M == 3 && N == 128 && K == 128));
    // one timing per row: median and minimum coincide
    CHECK(row[col(rows, "wall_us_median")] == row[col(rows, "wall_us_min")]);
    CHECK(std::stod(row[col(rows, "wall_us_median")]) > 0.0);

    const auto p = predict_complexity(cfg, N, M, K, 32);
    CHECK(u64(row[col(rows, "mac_dense")]) == p.c_dense);
    if (row[col(rows, "engine")] == "codegemm") {
      CHECK(u64(row[col(rows, "mac_build")]) == p.c_build);
      CHECK(u64(row[col(rows, "mac_read")]) == p.c_read);
      CHECK(u64(row[col(rows, "lookups")]) == p.c_read);
    } else {
      CHECK(u64(row[col(rows, "mac_build")]) == 0);
      CHECK(u64(row[col(rows, "mac_read")]) == 0);
    }
  }

  SUBCASE("malformed csv") {
    write_text(dir / "bad.csv", "M,N\n1,2\n");
    CHECK(call({"bench", "--suite", dir / "bad.csv"}).code == cli::kFormat);
  }
  SUBCASE("unknown suite") {
    CHECK(call({"bench", "--suite", "mistral"}).code == cli::kConfig);
  }
  SUBCASE("zero repeats") {
    CHECK(call({"bench", "--suite", dir / "shapes.csv", "--repeats", "0"}).code == cli::kConfig);
  }
}

TEST_CASE("sweep grid") {
  TempDir dir("sweep");
  write_text(dir / "shapes.csv", "M,N,K\n2,64,256\n");
  const auto r = call({"sweep", "--shapes", dir / "shapes.csv", "--engines", "codegemm,dequant", "--repeats", "1",
                       "--warmup", "0", "--out", dir / "out.csv"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(dir / "out.csv"));
  REQUIRE(rows.size() == 1 + 6 * 2);

  std::vector<std::pair<std::string, std::string>> grid;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][col(rows, "engine")] == "codegemm") grid.emplace_back(rows[i][col(rows, "tw")], rows[i][col(rows, "th")]);
  }
  const std::vector<std::pair<std::string, std::string>> expected{
      {"32", "2048"}, {"32", "4096"}, {"64", "2048"}, {"64", "4096"}, {"128", "2048"}, {"128", "4096"}};
  CHECK(grid == expected);

  // counters do not depend on the tile height
  const auto counters = [&](std::size_t i) {
    return std::vector<std::string>(rows[i].begin() + col(rows, "mac_build"), rows[i].end());
  };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t j = 1; j < rows.size(); ++j) {
      if (rows[i][col(rows, "tw")] == rows[j][col(rows, "tw")] && rows[i][3] == rows[j][3]) {
        CHECK(counters(i) == counters(j));
      }
    }
  }
}

TEST_CASE("bench non-timing fields are reproducible") {
  TempDir dir("bench_repeat");
  write_text(dir / "shapes.csv", "M,N,K\n2,32,128\n");
  std::vector<std::vector<Row>> runs;
  for (const char* name : {"a.csv", "b.csv"}) {
    REQUIRE(call({"bench", "--suite", dir / "shapes.csv", "--engines", "codegemm,dense", "--repeats", "2",
                  "--warmup", "0", "--out", dir / name})
                .code == 0);
    auto rows = csv_rows(slurp(dir / name));
    for (auto& row : rows) row.erase(row.begin() + 11, row.begin() + 13);
    runs.push_back(rows);
  }
  CHECK(runs[0] == runs[1]);
}

TEST_CASE("thread count falls back to the environment") {
  ::setenv("CODEGEMM_THREADS", "3", 1);
  CHECK(resolve_threads(0) == 3);
  CHECK(resolve_threads(2) == 2);
  cli::BenchOptions opts;
  opts.cfg = QuantConfig{4, 1, 4, 32};
  opts.repeats = 1;
  opts.warmup = 0;
  const auto records = cli::run_bench({{1, 16, 64, 1}}, opts);
  CHECK(records.front().threads == 3);
  ::unsetenv("CODEGEMM_THREADS");
}
