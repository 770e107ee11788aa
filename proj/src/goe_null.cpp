#include "erstruct/goe_null.hpp"

#include "erstruct/error.hpp"
#include "erstruct/parallel.hpp"
#include "erstruct/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <numbers>

namespace erstruct {

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::Format, "null cache file is truncated");
  return value;
}

void require_dimension(Index n) {
  if (n < 2) {
    throw Error(ErrorCode::DimensionTooSmall,
                "GOE dimension must be at least 2, got " + std::to_string(n));
  }
}

}  // namespace

Eigen::MatrixXd sample_goe(Index n, std::uint64_t seed) {
  require_dimension(n);
  Rng rng(seed);
  Eigen::MatrixXd w(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) w(i, j) = w(j, i) = rng.normal();
    w(j, j) = std::numbers::sqrt2 * rng.normal();
  }
  return w;
}

Top2 sample_goe_top2(Index n, std::uint64_t seed) {
  const Eigen::MatrixXd w = sample_goe(n, seed);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "GOE eigensolver did not converge");
  }
  const auto& ev = solver.eigenvalues();
  return {ev(n - 1), ev(n - 2)};
}

std::uint64_t replicate_seed(std::uint64_t master_seed, Index index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(index));
}

NullCache build_null_cache(Index n, Index m, std::uint64_t master_seed, unsigned threads) {
  require_dimension(n);
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "replicate count must be at least 1");
  NullCache cache;
  cache.n = n;
  cache.m = m;
  cache.seed = master_seed;
  cache.w1.resize(m);
  cache.w2.resize(m);
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
    const auto idx = static_cast<Index>(i);
    const Top2 top = sample_goe_top2(n, replicate_seed(master_seed, idx));
    cache.w1(idx) = top.w1;
    cache.w2(idx) = top.w2;
  });
  return cache;
}

void write_null_cache(const std::filesystem::path& path, const NullCache& cache) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_raw(out, kNullCacheVersion);
  write_raw(out, static_cast<std::uint64_t>(cache.n));
  write_raw(out, static_cast<std::uint64_t>(cache.m));
  write_raw(out, cache.seed);
  for (Index i = 0; i < cache.m; ++i) {
    write_raw(out, cache.w1(i));
    write_raw(out, cache.w2(i));
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

NullCache read_null_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kNullCacheVersion) {
    throw Error(ErrorCode::Format, "unsupported null cache version " + std::to_string(version));
  }
  NullCache cache;
  cache.n = static_cast<Index>(read_raw<std::uint64_t>(in));
  cache.m = static_cast<Index>(read_raw<std::uint64_t>(in));
  cache.seed = read_raw<std::uint64_t>(in);
  if (cache.n < 2 || cache.m < 1) throw Error(ErrorCode::Format, "null cache header is invalid");
  const auto expected = 4 + 3 * 8 + static_cast<std::uintmax_t>(cache.m) * 16;
  if (std::filesystem::file_size(path) != expected) {
    throw Error(ErrorCode::Format, "null cache payload size does not match its header");
  }
  cache.w1.resize(cache.m);
  cache.w2.resize(cache.m);
  for (Index i = 0; i < cache.m; ++i) {
    cache.w1(i) = read_raw<double>(in);
    cache.w2(i) = read_raw<double>(in);
  }
  return cache;
}

}  // namespace erstruct
