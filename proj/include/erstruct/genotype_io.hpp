#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace erstruct {

using Index = Eigen::Index;

/// Minor-allele count sentinel for a missing call.
inline constexpr std::int8_t kMissing = -1;

/// Markers per block when the caller does not choose one.
inline constexpr Index kDefaultBlockWidth = 10000;

/// Column-major n x w panel of minor-allele counts in {0, 1, 2, kMissing}.
using GenotypeBlock = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Streamable view of an n x p genotype matrix. Each pass yields
/// consecutive marker blocks that partition columns 0..p-1 in order.
class GenotypeSource {
 public:
  virtual ~GenotypeSource() = default;

  virtual Index samples() const = 0;
  virtual Index markers() const = 0;
  virtual bool rewindable() const { return true; }

  /// Starts a new pass at marker 0.
  virtual void rewind() = 0;

  /// Fills `block` with the next min(max_width, remaining) markers.
  /// Returns false, leaving `block` untouched, once the pass is exhausted.
  virtual bool next_block(Index max_width, GenotypeBlock& block) = 0;

  /// Index of the first marker the next call to next_block will return.
  virtual Index position() const = 0;
};

/// Source over a matrix held in memory.
class MemorySource final : public GenotypeSource {
 public:
  explicit MemorySource(GenotypeBlock matrix);

  Index samples() const override { return matrix_.rows(); }
  Index markers() const override { return matrix_.cols(); }
  void rewind() override { cursor_ = 0; }
  bool next_block(Index max_width, GenotypeBlock& block) override;
  Index position() const override { return cursor_; }

  const GenotypeBlock& matrix() const { return matrix_; }

 private:
  GenotypeBlock matrix_;
  Index cursor_ = 0;
};

/// Variant-major PLINK binary triplet, decoded on the fly.
class PlinkSource final : public GenotypeSource {
 public:
  PlinkSource(const std::filesystem::path& bed, Index samples, Index markers);

  Index samples() const override { return samples_; }
  Index markers() const override { return markers_; }
  void rewind() override;
  bool next_block(Index max_width, GenotypeBlock& block) override;
  Index position() const override { return cursor_; }

 private:
  std::ifstream bed_;
  Index samples_;
  Index markers_;
  Index bytes_per_marker_;
  Index cursor_ = 0;
  std::vector<unsigned char> buffer_;
};

/// Opens a .bed/.bim/.fam triplet. n is the .fam line count and p the .bim
/// line count; the .bed must be exactly 3 + p * ceil(n / 4) bytes.
std::unique_ptr<GenotypeSource> open_plink(const std::filesystem::path& bed,
                                           const std::filesystem::path& bim,
                                           const std::filesystem::path& fam);

/// Opens `<prefix>.bed`, `<prefix>.bim`, `<prefix>.fam`.
std::unique_ptr<GenotypeSource> open_plink(const std::string& prefix);

/// Reads a delimited table with one row per sample. Entries are 0, 1, 2 or
/// the missing token "NA".
std::unique_ptr<GenotypeSource> open_matrix_text(const std::filesystem::path& path,
                                                 char delimiter = ',');

/// Decodes one PLINK marker record (ceil(n/4) bytes) into `out`.
void decode_plink_marker(const unsigned char* bytes, Index samples, std::int8_t* out);

/// Encodes one marker column into ceil(n/4) bytes with zero pad bits.
void encode_plink_marker(const std::int8_t* genotypes, Index samples, unsigned char* out);

/// Writes a PLINK triplet. `family_ids` (optional) fills the first .fam
/// column, otherwise every sample gets family "0".
void write_plink(const std::string& prefix, const GenotypeBlock& matrix,
                 const std::vector<std::string>& family_ids = {});

void write_matrix_text(const std::filesystem::path& path, const GenotypeBlock& matrix,
                       char delimiter = ',');

/// Per-marker summary from the first pass.
struct MarkerStats {
  Eigen::VectorXd mu_hat;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> n_called;
  Eigen::VectorXd maf;
  Eigen::Array<bool, Eigen::Dynamic, 1> keep;

  Index markers() const { return mu_hat.size(); }
  Index retained() const { return keep.count(); }
};

/// One pass over `source` computing mean count, call count and MAF per
/// marker. Monomorphic and all-missing markers come back with keep = false.
MarkerStats marker_stats(GenotypeSource& source, Index block_width = kDefaultBlockWidth);

/// Clears keep for markers with maf < maf_min. Throws AllMarkersDropped when
/// nothing survives.
MarkerStats filter_markers(MarkerStats stats, double maf_min);

}  // namespace erstruct
