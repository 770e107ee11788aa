#pragma once

#include "erstruct/genotype_io.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace erstruct {

/// Centering and scaling for the active markers: a count c at marker j maps
/// to (c - mu_j) / sqrt(mu_j (1 - mu_j / 2)). Missing calls map to 0.
struct Standardizer {
  Eigen::VectorXd center;      // per marker, all p
  Eigen::VectorXd scale;       // per marker, 0 where inactive
  std::vector<Index> active;   // ascending marker indices with keep = true

  Index markers() const { return center.size(); }
  Index active_count() const { return static_cast<Index>(active.size()); }
};

Standardizer build_standardizer(const MarkerStats& stats);

/// Standardizes the active columns of `block`, whose first column is marker
/// `first_marker`, into `out` (n x active-in-range), in marker order.
void standardize_block(const GenotypeBlock& block, Index first_marker,
                       const Standardizer& standardizer, Eigen::MatrixXd& out);

/// S_p = (1/p') M M^T over the active markers. Both triangles are stored and
/// mirrored bit-exactly.
struct SymmetricGram {
  Eigen::MatrixXd values;
  Index p_used = 0;

  Index n() const { return values.rows(); }
};

/// Second pass: streams `source` in blocks of `block_width` markers and
/// accumulates S_p. Block partial products are added in marker order, and
/// worker threads split the output tiles, so the result is bit-identical for
/// any thread count at a fixed block width.
SymmetricGram accumulate_gram(GenotypeSource& source, const Standardizer& standardizer,
                              Index block_width = kDefaultBlockWidth, unsigned threads = 0);

/// Debug dump: uint64 n, uint64 p_used, then the row-major upper triangle
/// as little-endian float64.
void write_gram(const std::filesystem::path& path, const SymmetricGram& gram);
SymmetricGram read_gram(const std::filesystem::path& path);

}  // namespace erstruct
