#include "doctest.h"
#include "test_util.hpp"

#include "erstruct/error.hpp"
#include "erstruct/pipeline.hpp"
#include "erstruct/simulator.hpp"

using namespace erstruct;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an erstruct::Error");
  return ErrorCode::Io;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

SimulationDesign small_design() {
  SimulationDesign d;
  d.p = 300;
  d.group_sizes = {10, 15};
  d.noise_sigma2 = 0.5;
  return d;
}

}  // namespace

TEST_CASE("rounding_map truth table") {
  CHECK(rounding_map(-0.2) == 0);
  CHECK(rounding_map(0.0) == 0);
  CHECK(rounding_map(0.49999) == 0);
  CHECK(rounding_map(0.5) == 1);
  CHECK(rounding_map(1.0) == 1);
  CHECK(rounding_map(1.49999) == 1);
  CHECK(rounding_map(1.5) == 2);
  CHECK(rounding_map(3.7) == 2);
  CHECK(rounding_map(1.5f) == 2);
  static_assert(rounding_map(0.5) == 1 && rounding_map(0.4) == 0);
}

TEST_CASE("zero noise reproduces rounded group means") {
  SimulationDesign d = small_design();
  d.noise_sigma2 = 0.0;
  const SimulatedGenotypes sim = simulate(d, 3);
  REQUIRE(sim.matrix.rows() == 25);
  for (Index i = 0; i < 25; ++i) {
    const Index k = sim.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < d.p; ++j) CHECK(sim.matrix(i, j) == rounding_map(sim.means(k, j)));
  }
  CHECK(sim.labels.front() == 0);
  CHECK(sim.labels.back() == 1);
  CHECK(std::count(sim.labels.begin(), sim.labels.end(), 1) == 15);
}

TEST_CASE("binomial means take values in {0,1,2}, outputs in {0,1,2}") {
  const SimulatedGenotypes sim = simulate(small_design(), 8);
  CHECK(((sim.means.array() == 0) || (sim.means.array() == 1) || (sim.means.array() == 2)).all());
  CHECK((sim.matrix.array() >= 0).all());
  CHECK((sim.matrix.array() <= 2).all());
}

TEST_CASE("determinism and thread independence") {
  const SimulationDesign d = small_design();
  SimulationOptions one{false, 1}, many{false, 4};
  const SimulatedGenotypes a = simulate(d, 77, one);
  const SimulatedGenotypes b = simulate(d, 77, many);
  CHECK(a.matrix == b.matrix);
  CHECK(a.means == b.means);
  const SimulatedGenotypes c = simulate(d, 78, one);
  CHECK_FALSE(a.matrix == c.matrix);

  SimulationDesign ld = d;
  ld.ld_blocks = equicorrelation_ld(d.p, 2, 20, 0.4);
  CHECK(simulate(ld, 5, one).matrix == simulate(ld, 5, many).matrix);
}

TEST_CASE("two opposite homozygous groups give one spike") {
  SimulationDesign d;
  d.p = 20000;
  d.group_sizes = {30, 30};
  d.noise_sigma2 = 0.01;
  Eigen::MatrixXd means(2, d.p);
  means.row(0).setZero();
  means.row(1).setConstant(2.0);
  d.mean = ExplicitMeans{means};
  const SimulatedGenotypes sim = simulate(d, 1);
  MemorySource src(sim.matrix);
  Standardizer s = build_standardizer(marker_stats(src));
  const SymmetricGram gram = accumulate_gram(src, s);
  const Spectrum spec = eigen_decompose(gram);
  CHECK(spec.eigs(0) > 1.0);
  CHECK(spec.eigs(1) < 1e-2 * spec.eigs(0));
}

TEST_CASE("permuting group order leaves the spectrum unchanged") {
  SimulationDesign d;
  d.p = 3000;
  d.group_sizes = {8, 12, 10};
  d.noise_sigma2 = 0.0;
  Eigen::MatrixXd q(3, d.p);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (Index i = 0; i < q.size(); ++i) q.data()[i] = u(rng);
  d.mean = ExplicitMeans{q};

  SimulationDesign perm = d;
  perm.group_sizes = {10, 8, 12};
  Eigen::MatrixXd qp(3, d.p);
  qp.row(0) = q.row(2);
  qp.row(1) = q.row(0);
  qp.row(2) = q.row(1);
  perm.mean = ExplicitMeans{qp};

  auto spectrum_of = [](const SimulationDesign& design) {
    MemorySource src(simulate(design, 4).matrix);
    return prepare_spectrum(src, PipelineOptions{0.0, 64, 1, {}}).spectrum;
  };
  const Spectrum a = spectrum_of(d);
  const Spectrum b = spectrum_of(perm);
  CHECK((a.eigs - b.eigs).cwiseAbs().maxCoeff() < 1e-9 * a.eigs(0));

  // With noise the spectra agree in distribution; the leading eigenvalues
  // are dominated by the group structure.
  d.noise_sigma2 = perm.noise_sigma2 = 0.5;
  const Spectrum c = spectrum_of(d);
  const Spectrum e = spectrum_of(perm);
  for (Index i = 0; i < 2; ++i) CHECK(std::fabs(c.eigs(i) / e.eigs(i) - 1.0) < 0.05);
}

TEST_CASE("rounding marginals match Gaussian cell probabilities") {
  SimulationDesign d;
  d.p = 1000;
  d.group_sizes = {100};
  d.noise_sigma2 = 0.5;
  d.mean = ExplicitMeans{Eigen::MatrixXd::Ones(1, d.p)};
  const SimulatedGenotypes sim = simulate(d, 12);
  const double total = static_cast<double>(sim.matrix.size());
  const double f0 = (sim.matrix.array() == 0).count() / total;
  const double f2 = (sim.matrix.array() == 2).count() / total;
  const double sd = std::sqrt(0.5);
  using erstruct::testing::normal_cdf;
  CHECK(std::fabs(f0 - normal_cdf((0.5 - 1.0) / sd)) < 0.02);
  CHECK(std::fabs(f2 - (1.0 - normal_cdf((1.5 - 1.0) / sd))) < 0.02);
  CHECK(std::fabs((1.0 - f0 - f2) - (normal_cdf(0.5 / sd) - normal_cdf(-0.5 / sd))) < 0.02);
}

TEST_CASE("identity LD blocks leave markers uncorrelated") {
  SimulationDesign d;
  d.p = 400;
  d.group_sizes = {500};
  d.noise_sigma2 = 0.5;
  d.ld_blocks = equicorrelation_ld(d.p, 1, 25, 0.0);
  const SimulatedGenotypes sim = simulate_block_ld(d, 6, {true, 0});
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<Index> pick(0, d.p - 1);
  double abs_sum = 0.0;
  double signed_sum = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Index a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    const double r = correlation(sim.noise.col(a), sim.noise.col(b));
    abs_sum += std::fabs(r);
    signed_sum += r;
  }
  CHECK(abs_sum / 1000 < 0.05);
  CHECK(std::fabs(signed_sum / 1000) < 0.05);
}

TEST_CASE("2x2 LD block reproduces its correlation before rounding") {
  SimulationDesign d;
  d.p = 2;
  d.group_sizes = {2000};
  d.noise_sigma2 = 0.5;
  Eigen::Matrix2d block;
  block << 1, 0.8, 0.8, 1;
  d.ld_blocks = std::vector<LdBlocks>{{std::make_shared<const Eigen::MatrixXd>(block)}};
  const SimulatedGenotypes sim = simulate(d, 21, {true, 0});
  CHECK(std::fabs(correlation(sim.noise.col(0), sim.noise.col(1)) - 0.8) < 0.03);
  const double var = (sim.noise.col(0).array() - sim.noise.col(0).mean()).square().mean();
  CHECK(std::fabs(var - 0.5) < 0.05);
}

TEST_CASE("design validation errors") {
  SimulationDesign d = small_design();
  Eigen::Matrix2d indefinite;
  indefinite << 1, 1.5, 1.5, 1;
  LdBlocks blocks(150, std::make_shared<const Eigen::MatrixXd>(indefinite));
  d.ld_blocks = std::vector<LdBlocks>{blocks, blocks};
  CHECK(code_of([&] { simulate(d, 1); }) == ErrorCode::BlockNotPSD);

  d.ld_blocks = equicorrelation_ld(299, 2, 50, 0.3);
  CHECK(code_of([&] { simulate(d, 1); }) == ErrorCode::BlockTilingMismatch);

  SimulationDesign e = small_design();
  e.group_sizes = {3, 0};
  CHECK(code_of([&] { simulate(e, 1); }) == ErrorCode::InvalidDesign);
  e = small_design();
  e.mean = ExplicitMeans{Eigen::MatrixXd::Constant(2, e.p, 2.5)};
  CHECK(code_of([&] { simulate(e, 1); }) == ErrorCode::InvalidDesign);
  e = small_design();
  e.noise_sigma2 = -1.0;
  CHECK(code_of([&] { simulate(e, 1); }) == ErrorCode::InvalidDesign);
  e = small_design();
  CHECK(code_of([&] { simulate_block_ld(e, 1); }) == ErrorCode::InvalidDesign);
}

TEST_CASE("slightly indefinite blocks are clipped, not rejected") {
  SimulationDesign d;
  d.p = 3;
  d.group_sizes = {5};
  Eigen::Matrix3d block;
  // Rank-deficient correlation with a tiny negative eigenvalue from rounding.
  block << 1, 1, 1, 1, 1, 1, 1, 1, 1;
  block(0, 1) = block(1, 0) = 1 + 1e-12;
  d.ld_blocks = std::vector<LdBlocks>{{std::make_shared<const Eigen::MatrixXd>(block)}};
  CHECK_NOTHROW(simulate(d, 1));
}

TEST_CASE("design documents") {
  const auto doc = nlohmann::json::parse(R"({
    "format_version": 1, "p": 120, "group_sizes": [4, 6], "noise_sigma2": 0.25,
    "mean": {"type": "uniform_frequencies", "low": 0.1, "high": 0.9},
    "ld": {"type": "equicorrelation", "rho": 0.6, "width": 50}
  })");
  const SimulationDesign d = design_from_json(doc);
  CHECK(d.p == 120);
  CHECK(d.samples() == 10);
  CHECK(d.noise_sigma2 == 0.25);
  REQUIRE(d.ld_blocks.has_value());
  CHECK((*d.ld_blocks)[0].size() == 3);
  CHECK((*d.ld_blocks)[0][2]->rows() == 20);

  const auto explicit_doc = nlohmann::json::parse(R"({
    "p": 2, "group_sizes": [1, 1],
    "mean": {"type": "explicit", "values": [[0, 2], [2, 0]]},
    "ld": {"type": "blocks", "shared": [[[1, 0.5], [0.5, 1]]]}
  })");
  const SimulationDesign e = design_from_json(explicit_doc);
  CHECK(std::get<ExplicitMeans>(e.mean).values(0, 1) == 2.0);

  CHECK(code_of([] { design_from_json(nlohmann::json::parse(R"({"p": 5})")); }) == ErrorCode::InvalidDesign);
  CHECK(code_of([] {
          design_from_json(nlohmann::json::parse(R"({"p": 5, "group_sizes": [2], "mean": {"type": "nope"}})"));
        }) == ErrorCode::InvalidDesign);
  CHECK(code_of([] {
          design_from_json(nlohmann::json::parse(R"({"format_version": 9, "p": 5, "group_sizes": [2]})"));
        }) == ErrorCode::InvalidDesign);
}
