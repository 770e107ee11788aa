#pragma once

#include "erstruct/goe_null.hpp"
#include "erstruct/spectrum.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <optional>
#include <string_view>
#include <vector>

namespace erstruct {

inline constexpr double kDefaultAlpha = 0.001;
inline constexpr int kReportVersion = 1;

/// Bulk moment estimates conditional on candidate k.
struct MomentEstimates {
  double a_hat = 0.0;
  double b_hat = 0.0;
  Index k = 0;
};

/// a = mean of l_k..l_{n-1}; b = p / (n-k)^2 * sum (l_i - a)^2.
/// `eigs` holds l_1..l_{n-1}, so n = eigs.size() + 1.
template <typename Derived>
MomentEstimates moment_estimates(const Eigen::MatrixBase<Derived>& eigs, Index k, double p_used);

inline MomentEstimates moment_estimates(const Spectrum& spectrum, Index k, Index p_used) {
  return moment_estimates(spectrum.eigs, k, static_cast<double>(p_used));
}

/// Approximate null draws of the top bulk ratio, one per cached replicate:
/// (w2 s + a) / (w1 s + a) with s = sqrt(b / p). Sorted ascending.
/// Replicates with a nonpositive denominator are dropped; more than 0.1% of
/// them throws NonpositiveDenominator.
Eigen::VectorXd null_ratio_replicates(const NullCache& cache, double a_hat, double b_hat,
                                      Index p_used);

/// The ceil(m alpha)-th smallest replicate (1-based).
double critical_value(const Eigen::Ref<const Eigen::VectorXd>& sorted_replicates, double alpha);

/// 1-based order statistic index used by critical_value.
Index critical_index(Index m, double alpha);

enum class StepDecision { BecameValid, StayedValid, Invalidated, StillSearching };

std::string_view to_string(StepDecision decision);

struct KStepRecord {
  Index k = 0;
  double a_hat = 0.0;
  double b_hat = 0.0;
  double xi = 0.0;
  double r_k = 0.0;
  bool recomputed = false;  // estimates and xi were refreshed at this k
  StepDecision decision = StepDecision::StillSearching;
};

struct EstimateReport {
  std::optional<Index> k_hat;  // empty when the search ends without a valid K
  double alpha = kDefaultAlpha;
  Index k_coarse = 0;
  Index m = 0;
  std::vector<KStepRecord> steps;
  Index n = 0;
  Index p_used = 0;
  Eigen::VectorXd top_eigenvalues;  // up to 2 * k_coarse leading eigenvalues
  bool degenerate = false;          // some searching step had b_hat = 0

  bool failed() const { return !k_hat.has_value(); }
};

/// floor(n / 10), clamped into [1, n - 2].
Index default_k_coarse(Index n);

/// Sequential eigenvalue-ratio test with look-ahead. For K = 1..k_coarse:
/// while no K is valid, refresh the moment estimates at K, rebuild the null
/// ratios from `cache` and take xi; r_K > xi makes K valid and fixes xi.
/// While valid, r_K <= xi invalidates and the search resumes at K + 1.
/// The cache is built once by the caller and reused for every K.
EstimateReport estimate_k(const Spectrum& spectrum, const NullCache& cache, Index p_used,
                          double alpha, Index k_coarse);

/// Recomputes k_hat from recorded decisions alone.
std::optional<Index> replay_k_hat(const std::vector<KStepRecord>& steps);

nlohmann::json to_json(const EstimateReport& report);

}  // namespace erstruct

namespace erstruct {

template <typename Derived>
MomentEstimates moment_estimates(const Eigen::MatrixBase<Derived>& eigs, Index k, double p_used) {
  const Index n = eigs.size() + 1;
  if (k < 1 || n - k < 2) {
    throw Error(ErrorCode::InsufficientBulk,
                "need at least two bulk eigenvalues (n=" + std::to_string(n) +
                    ", k=" + std::to_string(k) + ")");
  }
  const auto bulk = eigs.tail(n - k);
  const double count = static_cast<double>(n - k);
  MomentEstimates est;
  est.k = k;
  if (bulk.maxCoeff() == bulk.minCoeff()) {
    // Flat bulk: report it exactly rather than through rounded sums.
    est.a_hat = bulk(0);
    est.b_hat = 0.0;
    return est;
  }
  est.a_hat = bulk.sum() / count;
  est.b_hat = p_used / (count * count) * (bulk.array() - est.a_hat).square().sum();
  return est;
}

}  // namespace erstruct
