#pragma once

#include "erstruct/genotype_io.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>

namespace erstruct {

/// Replicates of the two largest eigenvalues of n x n GOE matrices.
struct NullCache {
  Index n = 0;
  Index m = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd w1;
  Eigen::VectorXd w2;
};

struct Top2 {
  double w1;
  double w2;
};

inline constexpr std::uint32_t kNullCacheVersion = 1;
inline constexpr Index kDefaultReplicates = 5000;

/// Symmetric GOE draw: diagonal N(0, 2), off-diagonal N(0, 1). Entries are
/// generated column by column over the upper triangle from one stream
/// seeded with `seed`.
Eigen::MatrixXd sample_goe(Index n, std::uint64_t seed);

/// Two largest eigenvalues of sample_goe(n, seed).
Top2 sample_goe_top2(Index n, std::uint64_t seed);

/// Seed used for replicate `index` of a cache built from `master_seed`.
std::uint64_t replicate_seed(std::uint64_t master_seed, Index index);

/// m replicates in parallel; replicate i is sample_goe_top2(n,
/// replicate_seed(master_seed, i)), so the arrays do not depend on `threads`.
NullCache build_null_cache(Index n, Index m, std::uint64_t master_seed, unsigned threads = 0);

/// True when the critical value at level alpha would be one of the ten
/// most extreme replicates.
inline bool replicate_count_low(Index m, double alpha) {
  return static_cast<double>(m) * alpha < 10.0;
}

/// File layout, little-endian: uint32 version, uint64 n, uint64 m,
/// uint64 master_seed, then m (w1, w2) float64 pairs.
void write_null_cache(const std::filesystem::path& path, const NullCache& cache);
NullCache read_null_cache(const std::filesystem::path& path);

}  // namespace erstruct
