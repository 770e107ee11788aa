#include "erstruct/simulator.hpp"

#include "erstruct/error.hpp"
#include "erstruct/parallel.hpp"
#include "erstruct/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace erstruct {

namespace {

constexpr std::uint64_t kMeanStream = 0x6D65616E;   // per group
constexpr std::uint64_t kNoiseStream = 0x6E6F6973;  // per sample, then per chunk
constexpr Index kNoiseChunk = 4096;
constexpr double kClipTolerance = 1e-10;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidDesign, what); }

Eigen::MatrixXd group_means(const SimulationDesign& design, std::uint64_t seed) {
  const Index K = design.groups();
  const Index p = design.p;
  if (const auto* given = std::get_if<ExplicitMeans>(&design.mean)) return given->values;

  Eigen::MatrixXd means(K, p);
  for (Index k = 0; k < K; ++k) {
    Rng rng(derive_seed(seed, kMeanStream, static_cast<std::uint64_t>(k)));
    for (Index j = 0; j < p; ++j) {
      double q;
      if (const auto* f = std::get_if<FrequencyMeans>(&design.mean)) {
        q = f->frequencies(k, j);
      } else {
        const auto& u = std::get<UniformFrequencyMeans>(design.mean);
        q = u.low + (u.high - u.low) * rng.uniform();
      }
      means(k, j) = rng.binomial(2, q);
    }
  }
  return means;
}

// Symmetric square root with small negative eigenvalues clipped to zero.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& block) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::BlockNotPSD, "eigensolver failed on LD block");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  if (ev.minCoeff() < -kClipTolerance) {
    std::ostringstream msg;
    msg << "LD block has eigenvalue " << ev.minCoeff();
    throw Error(ErrorCode::BlockNotPSD, msg.str());
  }
  const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

std::vector<Index> make_labels(const SimulationDesign& design) {
  std::vector<Index> labels;
  labels.reserve(static_cast<std::size_t>(design.samples()));
  for (Index k = 0; k < design.groups(); ++k)
    labels.insert(labels.end(), static_cast<std::size_t>(design.group_sizes[static_cast<std::size_t>(k)]), k);
  return labels;
}

SimulatedGenotypes allocate(const SimulationDesign& design, std::uint64_t seed,
                            const SimulationOptions& options) {
  SimulatedGenotypes out;
  out.labels = make_labels(design);
  out.means = group_means(design, seed);
  out.matrix.resize(design.samples(), design.p);
  if (options.keep_noise) out.noise.resize(design.samples(), design.p);
  return out;
}

}  // namespace

Index SimulationDesign::samples() const {
  Index n = 0;
  for (Index size : group_sizes) n += size;
  return n;
}

Eigen::MatrixXd equicorrelation(Index width, double rho) {
  Eigen::MatrixXd block = Eigen::MatrixXd::Constant(width, width, rho);
  block.diagonal().setOnes();
  return block;
}

std::vector<LdBlocks> equicorrelation_ld(Index p, Index groups, Index width, double rho) {
  if (width < 1) invalid("LD block width must be positive");
  LdBlocks blocks;
  const auto full = std::make_shared<const Eigen::MatrixXd>(equicorrelation(width, rho));
  for (Index start = 0; start < p; start += width) {
    const Index w = std::min(width, p - start);
    blocks.push_back(w == width ? full : std::make_shared<const Eigen::MatrixXd>(equicorrelation(w, rho)));
  }
  return std::vector<LdBlocks>(static_cast<std::size_t>(groups), blocks);
}

void validate(const SimulationDesign& design) {
  if (design.p < 1) invalid("p must be at least 1");
  if (design.group_sizes.empty()) invalid("at least one group is required");
  for (Index size : design.group_sizes)
    if (size < 1) invalid("every group size must be at least 1");
  if (!(design.noise_sigma2 >= 0.0) || !std::isfinite(design.noise_sigma2))
    invalid("noise_sigma2 must be a finite nonnegative number");

  const Index K = design.groups();
  if (const auto* given = std::get_if<ExplicitMeans>(&design.mean)) {
    if (given->values.rows() != K || given->values.cols() != design.p)
      invalid("mean profile must be K x p");
    if (!(given->values.array() >= 0.0).all() || !(given->values.array() <= 2.0).all())
      invalid("mean profile entries must lie in [0, 2]");
  } else if (const auto* f = std::get_if<FrequencyMeans>(&design.mean)) {
    if (f->frequencies.rows() != K || f->frequencies.cols() != design.p)
      invalid("frequency matrix must be K x p");
    if (!(f->frequencies.array() >= 0.0).all() || !(f->frequencies.array() <= 1.0).all())
      invalid("frequencies must lie in [0, 1]");
  } else {
    const auto& u = std::get<UniformFrequencyMeans>(design.mean);
    if (!(u.low >= 0.0 && u.low <= u.high && u.high <= 1.0))
      invalid("uniform frequency range must satisfy 0 <= low <= high <= 1");
  }

  if (!design.ld_blocks) return;
  if (static_cast<Index>(design.ld_blocks->size()) != K)
    throw Error(ErrorCode::BlockTilingMismatch, "need one LD block list per group");
  for (Index k = 0; k < K; ++k) {
    Index covered = 0;
    for (const auto& block : (*design.ld_blocks)[static_cast<std::size_t>(k)]) {
      if (!block || block->rows() != block->cols() || block->rows() < 1)
        invalid("LD blocks must be nonempty square matrices");
      if (((*block) - block->transpose()).cwiseAbs().maxCoeff() > 1e-12)
        invalid("LD blocks must be symmetric");
      if (((block->diagonal().array() - 1.0).abs() > 1e-12).any())
        invalid("LD blocks must have unit diagonal");
      covered += block->rows();
    }
    if (covered != design.p) {
      throw Error(ErrorCode::BlockTilingMismatch,
                  "LD blocks of group " + std::to_string(k) + " cover " + std::to_string(covered) +
                      " markers, p = " + std::to_string(design.p));
    }
  }
}

SimulatedGenotypes simulate_uncorrelated(const SimulationDesign& design, std::uint64_t seed,
                                         const SimulationOptions& options) {
  if (design.ld_blocks) invalid("simulate_uncorrelated called with LD blocks");
  validate(design);
  SimulatedGenotypes out = allocate(design, seed, options);
  const double sd = std::sqrt(design.noise_sigma2);
  const Index p = design.p;

  parallel_for(out.labels.size(), options.threads, [&](std::size_t s) {
    const auto i = static_cast<Index>(s);
    const auto mu = out.means.row(out.labels[s]);
    for (Index start = 0, chunk = 0; start < p; start += kNoiseChunk, ++chunk) {
      Rng rng(derive_seed(seed, kNoiseStream + static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(chunk)));
      const Index end = std::min(p, start + kNoiseChunk);
      for (Index j = start; j < end; ++j) {
        const double e = sd * rng.normal();
        if (options.keep_noise) out.noise(i, j) = e;
        out.matrix(i, j) = static_cast<std::int8_t>(rounding_map(mu(j) + e));
      }
    }
  });
  return out;
}

SimulatedGenotypes simulate_block_ld(const SimulationDesign& design, std::uint64_t seed,
                                     const SimulationOptions& options) {
  if (!design.ld_blocks) invalid("simulate_block_ld needs LD blocks");
  validate(design);

  // Factor each distinct block once.
  std::map<const Eigen::MatrixXd*, Eigen::MatrixXd> roots;
  for (const auto& group : *design.ld_blocks)
    for (const auto& block : group)
      if (!roots.contains(block.get())) roots.emplace(block.get(), symmetric_sqrt(*block));

  SimulatedGenotypes out = allocate(design, seed, options);
  const double sd = std::sqrt(design.noise_sigma2);

  parallel_for(out.labels.size(), options.threads, [&](std::size_t s) {
    const auto i = static_cast<Index>(s);
    const Index k = out.labels[s];
    const auto mu = out.means.row(k);
    const LdBlocks& blocks = (*design.ld_blocks)[static_cast<std::size_t>(k)];
    Eigen::VectorXd z, e;
    Index start = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Eigen::MatrixXd& root = roots.at(blocks[b].get());
      const Index w = root.rows();
      Rng rng(derive_seed(seed, kNoiseStream + static_cast<std::uint64_t>(i), b));
      z.resize(w);
      for (Index t = 0; t < w; ++t) z(t) = rng.normal();
      e.noalias() = sd * (root * z);
      for (Index t = 0; t < w; ++t) {
        if (options.keep_noise) out.noise(i, start + t) = e(t);
        out.matrix(i, start + t) = static_cast<std::int8_t>(rounding_map(mu(start + t) + e(t)));
      }
      start += w;
    }
  });
  return out;
}

SimulatedGenotypes simulate(const SimulationDesign& design, std::uint64_t seed,
                            const SimulationOptions& options) {
  return design.ld_blocks ? simulate_block_ld(design, seed, options)
                          : simulate_uncorrelated(design, seed, options);
}

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) invalid(std::string(what) + " must be a nonempty array of rows");
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != c)
      invalid(std::string(what) + " rows must all have the same length");
    for (Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

LdBlocks blocks_from_json(const nlohmann::json& list) {
  if (!list.is_array()) invalid("LD block list must be an array of matrices");
  LdBlocks blocks;
  for (const auto& b : list)
    blocks.push_back(std::make_shared<const Eigen::MatrixXd>(matrix_from_json(b, "LD block")));
  return blocks;
}

}  // namespace

SimulationDesign design_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) invalid("design must be a JSON object");
    const int version = doc.value("format_version", 1);
    if (version != 1) invalid("unsupported design format_version " + std::to_string(version));

    SimulationDesign d;
    d.p = doc.at("p").get<Index>();
    d.group_sizes = doc.at("group_sizes").get<std::vector<Index>>();
    d.noise_sigma2 = doc.value("noise_sigma2", 0.5);
    d.seed = doc.value("seed", std::uint64_t{0});

    if (doc.contains("mean")) {
      const auto& mean = doc.at("mean");
      const auto type = mean.at("type").get<std::string>();
      if (type == "explicit") d.mean = ExplicitMeans{matrix_from_json(mean.at("values"), "mean values")};
      else if (type == "frequencies") d.mean = FrequencyMeans{matrix_from_json(mean.at("values"), "frequencies")};
      else if (type == "uniform_frequencies")
        d.mean = UniformFrequencyMeans{mean.value("low", 0.05), mean.value("high", 0.95)};
      else invalid("unknown mean type '" + type + "'");
    }

    if (doc.contains("ld") && !doc.at("ld").is_null()) {
      const auto& ld = doc.at("ld");
      const auto type = ld.at("type").get<std::string>();
      if (type == "equicorrelation") {
        d.ld_blocks = equicorrelation_ld(d.p, d.groups(), ld.at("width").get<Index>(),
                                         ld.at("rho").get<double>());
      } else if (type == "blocks") {
        if (ld.contains("shared")) {
          d.ld_blocks = std::vector<LdBlocks>(d.group_sizes.size(), blocks_from_json(ld.at("shared")));
        } else {
          std::vector<LdBlocks> groups;
          for (const auto& g : ld.at("groups")) groups.push_back(blocks_from_json(g));
          d.ld_blocks = std::move(groups);
        }
      } else {
        invalid("unknown ld type '" + type + "'");
      }
    }
    validate(d);
    return d;
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("design document: ") + e.what());
  }
}

SimulationDesign load_design(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    invalid(path.string() + ": " + e.what());
  }
  return design_from_json(doc);
}

}  // namespace erstruct
