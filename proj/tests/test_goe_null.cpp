#include "doctest.h"
#include "test_util.hpp"

#include "erstruct/error.hpp"
#include "erstruct/goe_null.hpp"
#include "erstruct/random.hpp"

#include <Eigen/Eigenvalues>

#include <fstream>
#include <iterator>

using namespace erstruct;
using erstruct::testing::TempDir;

TEST_CASE("2x2 GOE top eigenvalues match the closed form") {
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL, 123456789ULL}) {
    Rng rng(seed);
    const double d1 = std::sqrt(2.0) * rng.normal();
    const double o = rng.normal();
    const double d2 = std::sqrt(2.0) * rng.normal();
    const Eigen::MatrixXd w = sample_goe(2, seed);
    CHECK(w(0, 0) == d1);
    CHECK(w(0, 1) == o);
    CHECK(w(1, 1) == d2);

    const double mid = (d1 + d2) / 2.0;
    const double rad = std::sqrt((d1 - d2) * (d1 - d2) / 4.0 + o * o);
    const Top2 top = sample_goe_top2(2, seed);
    CHECK(top.w1 == doctest::Approx(mid + rad).epsilon(1e-12));
    CHECK(top.w2 == doctest::Approx(mid - rad).epsilon(1e-12));
  }
}

TEST_CASE("sampling is deterministic and symmetric") {
  const Top2 a = sample_goe_top2(50, 77);
  const Top2 b = sample_goe_top2(50, 77);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.w1 >= a.w2);
  const Eigen::MatrixXd w = sample_goe(60, 5);
  CHECK(w == w.transpose());
}

TEST_CASE("n < 2 is rejected") {
  try {
    sample_goe_top2(1, 0);
    FAIL("expected DimensionTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionTooSmall);
  }
  CHECK_THROWS_AS(build_null_cache(1, 10, 0), Error);
}

TEST_CASE("pooled entry moments") {
  double off_sum = 0, off_sq = 0, diag_sum = 0, diag_sq = 0;
  double off_count = 0, diag_count = 0;
  const Index n = 300;
  for (int r = 0; r < 25; ++r) {
    const Eigen::MatrixXd w = sample_goe(n, replicate_seed(2024, r));
    for (Index j = 0; j < n; ++j) {
      diag_sum += w(j, j);
      diag_sq += w(j, j) * w(j, j);
      diag_count += 1;
      for (Index i = 0; i < j; ++i) {
        off_sum += w(i, j);
        off_sq += w(i, j) * w(i, j);
        off_count += 1;
      }
    }
  }
  REQUIRE(off_count + diag_count >= 1e6);
  const double off_var = off_sq / off_count - std::pow(off_sum / off_count, 2);
  const double diag_var = diag_sq / diag_count - std::pow(diag_sum / diag_count, 2);
  CHECK(std::fabs(off_var - 1.0) < 0.05);
  CHECK(std::fabs(diag_var - 2.0) < 0.2);
}

TEST_CASE("build_null_cache: m = 1 and thread independence") {
  const NullCache one = build_null_cache(30, 1, 9);
  const Top2 direct = sample_goe_top2(30, replicate_seed(9, 0));
  CHECK(one.w1(0) == direct.w1);
  CHECK(one.w2(0) == direct.w2);

  const NullCache serial = build_null_cache(40, 64, 3, 1);
  const NullCache parallel = build_null_cache(40, 64, 3, 8);
  CHECK(serial.w1 == parallel.w1);
  CHECK(serial.w2 == parallel.w2);
  CHECK((serial.w1.array() >= serial.w2.array()).all());
}

TEST_CASE("semicircle edge: mean(w1)/sqrt(n) at n = 400") {
  const NullCache cache = build_null_cache(400, 200, 11);
  const double edge = cache.w1.mean() / std::sqrt(400.0);
  CHECK(edge >= 1.85);
  CHECK(edge <= 2.05);
}

TEST_CASE("full GOE spectrum follows the semicircle law") {
  const Index n = 500;
  const Eigen::MatrixXd w = sample_goe(n, replicate_seed(77, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd scaled = es.eigenvalues() / std::sqrt(static_cast<double>(n));
  const double ks = erstruct::testing::ks_distance(scaled, erstruct::testing::semicircle_cdf);
  CHECK(ks <= 0.05);
  // Quadrature oracle agrees with the closed-form CDF.
  const double x = 0.7;
  const double closed = 0.5 + x * std::sqrt(4 - x * x) / (4 * M_PI) + std::asin(x / 2) / M_PI;
  CHECK(erstruct::testing::semicircle_cdf(x) == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("lower quantile of w2/w1 is below 1 and grows with n") {
  double previous = -1.0;
  for (Index n : {100, 200, 400}) {
    const NullCache cache = build_null_cache(n, 2000, 5);
    Eigen::VectorXd ratio = cache.w2.array() / cache.w1.array();
    std::sort(ratio.begin(), ratio.end());
    const double q = ratio(static_cast<Index>(std::ceil(2000 * 0.05)) - 1);
    CHECK(q < 1.0);
    CHECK(q > previous);
    previous = q;
  }
}

TEST_CASE("null cache file round trip and byte identity") {
  TempDir dir;
  const NullCache a = build_null_cache(20, 17, 7, 1);
  const NullCache b = build_null_cache(20, 17, 7, 4);
  write_null_cache(dir / "a.bin", a);
  write_null_cache(dir / "b.bin", b);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  CHECK(std::filesystem::file_size(dir / "a.bin") == 4 + 24 + 17 * 16);

  const NullCache back = read_null_cache(dir / "a.bin");
  CHECK(back.n == 20);
  CHECK(back.m == 17);
  CHECK(back.seed == 7);
  CHECK(back.w1 == a.w1);
  CHECK(back.w2 == a.w2);

  std::filesystem::resize_file(dir / "a.bin", 40);
  CHECK_THROWS_AS(read_null_cache(dir / "a.bin"), Error);
}

TEST_CASE("replicate_count_low") {
  CHECK(replicate_count_low(5000, 0.001));
  CHECK_FALSE(replicate_count_low(5000, 0.01));
  CHECK(replicate_count_low(1000, 0.0001));
}
