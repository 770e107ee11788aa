#pragma once

#include "erstruct/genotype_io.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace erstruct {

/// x < 0.5 -> 0, 0.5 <= x < 1.5 -> 1, x >= 1.5 -> 2.
template <typename Scalar>
constexpr int rounding_map(Scalar x) {
  return (x >= Scalar(1.5) ? 1 : 0) - (x < Scalar(0.5) ? 1 : 0) + 1;
}

/// Group means given directly, K x p, entries in [0, 2].
struct ExplicitMeans {
  Eigen::MatrixXd values;
};

/// Group means drawn once per marker as Binomial(2, q_kj), q given K x p.
struct FrequencyMeans {
  Eigen::MatrixXd frequencies;
};

/// As FrequencyMeans with q_kj ~ Uniform(low, high) drawn from the seed.
struct UniformFrequencyMeans {
  double low = 0.05;
  double high = 0.95;
};

using MeanRecipe = std::variant<ExplicitMeans, FrequencyMeans, UniformFrequencyMeans>;

/// Correlation blocks tiling the markers of one group, in order.
using LdBlocks = std::vector<std::shared_ptr<const Eigen::MatrixXd>>;

struct SimulationDesign {
  Index p = 0;
  std::vector<Index> group_sizes;
  double noise_sigma2 = 0.5;
  MeanRecipe mean = UniformFrequencyMeans{};
  std::optional<std::vector<LdBlocks>> ld_blocks;  // one entry per group
  std::uint64_t seed = 0;

  Index groups() const { return static_cast<Index>(group_sizes.size()); }
  Index samples() const;
};

struct SimulationOptions {
  bool keep_noise = false;  // retain the continuous pre-rounding noise
  unsigned threads = 0;
};

struct SimulatedGenotypes {
  GenotypeBlock matrix;        // n x p, values in {0, 1, 2}
  std::vector<Index> labels;   // group index per sample, 0-based
  Eigen::MatrixXd means;       // K x p group means actually used
  Eigen::MatrixXd noise;       // n x p, only with keep_noise
};

/// Equicorrelation matrix: unit diagonal, rho elsewhere.
Eigen::MatrixXd equicorrelation(Index width, double rho);

/// Same block structure for every group: consecutive equicorrelation blocks
/// of `width` (the last one may be narrower) tiling p.
std::vector<LdBlocks> equicorrelation_ld(Index p, Index groups, Index width, double rho);

/// Throws InvalidDesign, BlockNotPSD or BlockTilingMismatch.
void validate(const SimulationDesign& design);

/// c_(k,l) = rounding_map(mu_k + e) with e ~ N(0, sigma2 I).
SimulatedGenotypes simulate_uncorrelated(const SimulationDesign& design, std::uint64_t seed,
                                         const SimulationOptions& options = {});

/// As simulate_uncorrelated with e ~ N(0, sigma2 Sigma_k), Sigma_k the block
/// diagonal matrix of group k's LD blocks.
SimulatedGenotypes simulate_block_ld(const SimulationDesign& design, std::uint64_t seed,
                                     const SimulationOptions& options = {});

/// Dispatches on whether the design has LD blocks.
SimulatedGenotypes simulate(const SimulationDesign& design, std::uint64_t seed,
                            const SimulationOptions& options = {});

/// Versioned design document. See README for the schema.
SimulationDesign design_from_json(const nlohmann::json& doc);
SimulationDesign load_design(const std::filesystem::path& path);

}  // namespace erstruct
