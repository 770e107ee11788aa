#include "erstruct/normalize_gram.hpp"

#include "erstruct/error.hpp"
#include "erstruct/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <utility>

namespace erstruct {

namespace {

constexpr Index kTile = 128;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::Format, "unexpected end of gram file");
  return value;
}

// acc(lower) += panel * panel^T, split into output tiles.
void add_outer_product(const Eigen::MatrixXd& panel, Eigen::MatrixXd& acc, unsigned threads) {
  const Index n = panel.rows();
  const Index tiles = (n + kTile - 1) / kTile;
  std::vector<std::pair<Index, Index>> work;
  for (Index ti = 0; ti < tiles; ++ti)
    for (Index tj = 0; tj <= ti; ++tj) work.emplace_back(ti, tj);

  parallel_for(work.size(), threads, [&](std::size_t w) {
    const auto [ti, tj] = work[w];
    const Index r0 = ti * kTile, rows = std::min(kTile, n - r0);
    const Index c0 = tj * kTile, cols = std::min(kTile, n - c0);
    acc.block(r0, c0, rows, cols).noalias() +=
        panel.middleRows(r0, rows) * panel.middleRows(c0, cols).transpose();
  });
}

}  // namespace

Standardizer build_standardizer(const MarkerStats& stats) {
  Standardizer s;
  const Index p = stats.markers();
  s.center = stats.mu_hat;
  s.scale = Eigen::VectorXd::Zero(p);
  for (Index j = 0; j < p; ++j) {
    if (!stats.keep(j)) continue;
    const double mu = stats.mu_hat(j);
    const double var = mu * (1.0 - mu / 2.0);
    if (!(var > 0.0) || !std::isfinite(var)) continue;
    s.scale(j) = 1.0 / std::sqrt(var);
    s.active.push_back(j);
  }
  if (s.active.empty()) throw Error(ErrorCode::NoActiveMarkers, "no marker can be standardized");
  return s;
}

void standardize_block(const GenotypeBlock& block, Index first_marker,
                       const Standardizer& standardizer, Eigen::MatrixXd& out) {
  const auto begin = std::lower_bound(standardizer.active.begin(), standardizer.active.end(),
                                      first_marker);
  const auto end = std::lower_bound(begin, standardizer.active.end(), first_marker + block.cols());
  const Index n = block.rows();
  out.resize(n, static_cast<Index>(end - begin));
  Index c = 0;
  for (auto it = begin; it != end; ++it, ++c) {
    const Index j = *it;
    const double mu = standardizer.center(j);
    const double scale = standardizer.scale(j);
    const auto column = block.col(j - first_marker);
    for (Index i = 0; i < n; ++i) {
      const std::int8_t g = column(i);
      out(i, c) = g == kMissing ? 0.0 : (static_cast<double>(g) - mu) * scale;
    }
  }
}

SymmetricGram accumulate_gram(GenotypeSource& source, const Standardizer& standardizer,
                              Index block_width, unsigned threads) {
  if (standardizer.markers() != source.markers()) {
    throw Error(ErrorCode::DimensionMismatch,
                "standardizer covers " + std::to_string(standardizer.markers()) +
                    " markers, source has " + std::to_string(source.markers()));
  }
  if (standardizer.active.empty()) throw Error(ErrorCode::NoActiveMarkers, "empty standardizer");

  const Index n = source.samples();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  GenotypeBlock block;
  Eigen::MatrixXd panel;
  Index used = 0;

  source.rewind();
  while (source.next_block(block_width, block)) {
    if (block.rows() != n) throw Error(ErrorCode::DimensionMismatch, "block row count changed");
    const Index first = source.position() - block.cols();
    standardize_block(block, first, standardizer, panel);
    if (panel.cols() == 0) continue;
    add_outer_product(panel, acc, threads);
    used += panel.cols();
  }
  if (used != standardizer.active_count()) {
    throw Error(ErrorCode::DimensionMismatch, "source yielded fewer active markers than expected");
  }

  SymmetricGram gram;
  gram.p_used = used;
  gram.values = acc / static_cast<double>(used);
  gram.values.triangularView<Eigen::StrictlyUpper>() = gram.values.transpose();
  return gram;
}

void write_gram(const std::filesystem::path& path, const SymmetricGram& gram) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_raw(out, static_cast<std::uint64_t>(gram.n()));
  write_raw(out, static_cast<std::uint64_t>(gram.p_used));
  for (Index i = 0; i < gram.n(); ++i)
    for (Index j = i; j < gram.n(); ++j) write_raw(out, gram.values(i, j));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

SymmetricGram read_gram(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const auto n = static_cast<Index>(read_raw<std::uint64_t>(in));
  SymmetricGram gram;
  gram.p_used = static_cast<Index>(read_raw<std::uint64_t>(in));
  gram.values.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) gram.values(i, j) = gram.values(j, i) = read_raw<double>(in);
  return gram;
}

}  // namespace erstruct
