#include "doctest.h"
#include "test_util.hpp"

#include "commands.hpp"
#include "erstruct/genotype_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

using erstruct::testing::TempDir;
namespace cli = erstruct::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "erstruct");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_design(const std::filesystem::path& path, const std::string& body) { std::ofstream(path) << body; }

}  // namespace

TEST_CASE("cli: simulate then estimate recovers K = 4") {
  TempDir dir;
  write_design(dir / "design.json", R"({"format_version": 1, "p": 20000, "group_sizes": [40, 50, 50, 60],
    "noise_sigma2": 0.5, "mean": {"type": "uniform_frequencies", "low": 0.05, "high": 0.95}})");
  const std::string prefix = (dir / "sim").string();
  const Result sim = invoke({"simulate", "--design", (dir / "design.json").string(), "--seed", "3",
                             "--out", prefix});
  REQUIRE(sim.code == 0);
  CHECK(sim.out.find("K\t4") != std::string::npos);
  CHECK(std::filesystem::exists(prefix + ".bed"));
  CHECK(slurp(prefix + ".fam").rfind("g1 s1 ", 0) == 0);

  const Result est = invoke({"estimate", "--bfile", prefix, "--m", "1000", "--alpha", "0.01",
                             "--seed", "5", "--out", (dir / "run").string()});
  INFO(est.err);
  REQUIRE(est.code == 0);
  CHECK(est.out == "K_hat\t4\n");

  const auto report = nlohmann::json::parse(slurp(dir / "run.report.json"));
  CHECK(report["k_hat"] == 4);
  CHECK(report["steps"].size() == 20);
  CHECK(report["provenance"]["tool_version"] == cli::kToolVersion);
  CHECK(report["provenance"]["seeds"]["null_cache"] == 5);
  CHECK(report["provenance"]["config"]["alpha"] == 0.01);
  CHECK(report["spectrum_summary"]["n"] == 200);
  CHECK(std::filesystem::file_size(dir / "run.scree.tsv") > 0);

  // Same config, reused cache: identical decision trail.
  const std::string cache = (dir / "null.bin").string();
  REQUIRE(invoke({"null-cache", "--n", "200", "--m", "1000", "--seed", "5", "--out", cache}).code == 0);
  const Result reuse = invoke({"estimate", "--bfile", prefix, "--null-cache", cache, "--alpha", "0.01",
                               "--out", (dir / "reuse").string()});
  REQUIRE(reuse.code == 0);
  const auto again = nlohmann::json::parse(slurp(dir / "reuse.report.json"));
  CHECK(again["steps"] == report["steps"]);

  // k_coarse = 1 cannot get past the first spike: exit code 2.
  const Result failed = invoke({"estimate", "--bfile", prefix, "--null-cache", cache, "--k-coarse", "1",
                                "--out", (dir / "fail").string()});
  CHECK(failed.code == 2);
  CHECK(failed.out == "K_hat\tFAILED\n");
  CHECK(nlohmann::json::parse(slurp(dir / "fail.report.json"))["status"] == "failed");

  const Result wrong_cache_dir = invoke({"null-cache", "--n", "150", "--m", "20", "--seed", "1", "--out",
                                         (dir / "wrong.bin").string()});
  REQUIRE(wrong_cache_dir.code == 0);
  const Result mismatch = invoke({"estimate", "--bfile", prefix, "--null-cache", (dir / "wrong.bin").string(),
                                  "--out", (dir / "mm").string()});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("CacheDimensionMismatch") != std::string::npos);

  const Result maf = invoke({"estimate", "--bfile", prefix, "--maf-min", "0.6", "--out", (dir / "maf").string()});
  CHECK(maf.code == 1);
  CHECK(maf.err.find("AllMarkersDropped") != std::string::npos);
}

TEST_CASE("cli: simulate minimal zero-noise design to text") {
  TempDir dir;
  write_design(dir / "d.json", R"({"p": 5, "group_sizes": [3], "noise_sigma2": 0})");
  const Result r = invoke({"simulate", "--design", (dir / "d.json").string(), "--seed", "1", "--format", "text",
                           "--out", (dir / "t").string()});
  REQUIRE(r.code == 0);
  std::istringstream rows(slurp(dir / "t.txt"));
  std::string a, b, c;
  std::getline(rows, a);
  std::getline(rows, b);
  std::getline(rows, c);
  CHECK(a.size() == 9);
  CHECK(a == b);
  CHECK(b == c);
  CHECK(slurp(dir / "t.labels") == "g1\ng1\ng1\n");
  auto src = erstruct::open_matrix_text(dir / "t.txt");
  CHECK(src->samples() == 3);
}

TEST_CASE("cli: malformed design and missing seed") {
  TempDir dir;
  write_design(dir / "bad.json", R"({"p": 5, "group_sizes": [3,)");
  const Result r = invoke({"simulate", "--design", (dir / "bad.json").string(), "--seed", "1", "--out",
                           (dir / "x").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("InvalidDesign") != std::string::npos);
  CHECK(r.err.find("parse error") != std::string::npos);

  const Result no_seed = invoke({"simulate", "--design", (dir / "bad.json").string()});
  CHECK(no_seed.code == 1);
}

TEST_CASE("cli: null-cache determinism, warning and dimension check") {
  TempDir dir;
  const auto a = (dir / "a.bin").string(), b = (dir / "b.bin").string();
  const Result first = invoke({"null-cache", "--n", "200", "--m", "100", "--seed", "7", "--out", a, "--threads", "1"});
  const Result second = invoke({"null-cache", "--n", "200", "--m", "100", "--seed", "7", "--out", b, "--threads", "3"});
  REQUIRE(first.code == 0);
  REQUIRE(second.code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(first.err.find("warning: m * alpha") != std::string::npos);

  const Result quiet = invoke({"null-cache", "--n", "20", "--m", "2000", "--alpha", "0.01", "--seed", "7",
                               "--out", a});
  CHECK(quiet.err.find("warning") == std::string::npos);

  const Result tiny = invoke({"null-cache", "--n", "1", "--m", "10", "--seed", "7", "--out", a});
  CHECK(tiny.code == 1);
  CHECK(tiny.err.find("DimensionTooSmall") != std::string::npos);
}

TEST_CASE("cli: spectrum command and input validation") {
  TempDir dir;
  std::mt19937_64 rng(1);
  const auto g = erstruct::testing::random_genotypes(12, 200, rng, 0.05);
  erstruct::write_matrix_text(dir / "m.csv", g);
  const Result r = invoke({"spectrum", "--matrix", (dir / "m.csv").string(), "--out", (dir / "s").string(),
                           "--dump-gram", (dir / "g.bin").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const std::string scree = slurp(dir / "s.scree.tsv");
  CHECK(std::count(scree.begin(), scree.end(), '\n') == 12);
  CHECK(std::filesystem::file_size(dir / "g.bin") == 16 + 8 * 78);

  CHECK(invoke({"estimate", "--matrix", (dir / "missing.csv").string()}).code == 1);
  CHECK(invoke({"estimate", "--matrix", (dir / "m.csv").string(), "--alpha", "1.5"}).code == 1);
  CHECK(invoke({"estimate"}).code == 1);
  CHECK(invoke({"bogus"}).code == 1);
  CHECK(invoke({"--help"}).code == 0);
}
