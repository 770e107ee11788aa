#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace erstruct {

/// SplitMix64 finalizer. Used to turn (master seed, counter) pairs into
/// well-mixed independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under `master`. Pure function of its inputs, so
/// parallel workers can derive their own streams in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return derive_seed(derive_seed(master, a), b);
}

/// Standard normal and uniform variates on top of mt19937_64. The transform
/// is spelled out here (Box-Muller) rather than using std::normal_distribution,
/// whose algorithm differs between standard libraries; this keeps simulated
/// data and null caches identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Number of successes in `trials` Bernoulli(prob) draws.
  int binomial(int trials, double prob) {
    int hits = 0;
    for (int t = 0; t < trials; ++t) hits += uniform() < prob ? 1 : 0;
    return hits;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace erstruct
