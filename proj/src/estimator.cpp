#include "erstruct/estimator.hpp"

#include "erstruct/error.hpp"

#include <algorithm>
#include <cmath>

namespace erstruct {

Eigen::VectorXd null_ratio_replicates(const NullCache& cache, double a_hat, double b_hat,
                                      Index p_used) {
  if (!(a_hat > 0.0)) throw Error(ErrorCode::InvalidArgument, "a_hat must be positive");
  if (!(b_hat >= 0.0)) throw Error(ErrorCode::InvalidArgument, "b_hat must be nonnegative");
  if (p_used < 1) throw Error(ErrorCode::InvalidArgument, "p_used must be positive");

  const double s = std::sqrt(b_hat / static_cast<double>(p_used));
  Eigen::VectorXd ratios(cache.m);
  Index kept = 0;
  for (Index i = 0; i < cache.m; ++i) {
    const double denom = cache.w1(i) * s + a_hat;
    if (!(denom > 0.0)) continue;
    ratios(kept++) = (cache.w2(i) * s + a_hat) / denom;
  }
  const Index rejected = cache.m - kept;
  if (rejected * 1000 > cache.m) {
    throw Error(ErrorCode::NonpositiveDenominator,
                std::to_string(rejected) + " of " + std::to_string(cache.m) +
                    " replicates have a nonpositive denominator");
  }
  ratios.conservativeResize(kept);
  std::sort(ratios.begin(), ratios.end());
  return ratios;
}

Index critical_index(Index m, double alpha) {
  // Guard against m * alpha landing a hair above an integer in floating point.
  const auto idx = static_cast<Index>(std::ceil(static_cast<double>(m) * alpha - 1e-9));
  return std::clamp<Index>(idx, 1, m);
}

double critical_value(const Eigen::Ref<const Eigen::VectorXd>& sorted_replicates, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0,1)");
  const Index m = sorted_replicates.size();
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "no replicates");
  return sorted_replicates(critical_index(m, alpha) - 1);
}

std::string_view to_string(StepDecision decision) {
  switch (decision) {
    case StepDecision::BecameValid: return "became_valid";
    case StepDecision::StayedValid: return "stayed_valid";
    case StepDecision::Invalidated: return "invalidated";
    case StepDecision::StillSearching: return "still_searching";
  }
  return "unknown";
}

Index default_k_coarse(Index n) { return std::clamp<Index>(n / 10, 1, std::max<Index>(n - 2, 1)); }

EstimateReport estimate_k(const Spectrum& spectrum, const NullCache& cache, Index p_used,
                          double alpha, Index k_coarse) {
  const Index n = spectrum.eigs.size() + 1;
  if (cache.n != n) {
    throw Error(ErrorCode::CacheDimensionMismatch,
                "null cache built for n=" + std::to_string(cache.n) + ", data has n=" +
                    std::to_string(n));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0,1)");
  if (k_coarse < 1 || k_coarse > n - 2) {
    throw Error(ErrorCode::InvalidArgument,
                "k_coarse must be in [1, n-2], got " + std::to_string(k_coarse));
  }

  const Eigen::VectorXd ratios = eigenvalue_ratios(spectrum.eigs);

  EstimateReport report;
  report.alpha = alpha;
  report.k_coarse = k_coarse;
  report.m = cache.m;
  report.n = n;
  report.p_used = p_used;
  report.top_eigenvalues = spectrum.eigs.head(std::min<Index>(2 * k_coarse, n - 1));

  bool valid = false;
  Index k_hat = 0;
  MomentEstimates governing;
  double xi = 0.0;

  for (Index k = 1; k <= k_coarse; ++k) {
    KStepRecord step;
    step.k = k;
    step.r_k = ratios(k - 1);
    if (!valid) {
      governing = moment_estimates(spectrum.eigs, k, static_cast<double>(p_used));
      if (governing.b_hat == 0.0) report.degenerate = true;
      const Eigen::VectorXd null = null_ratio_replicates(cache, governing.a_hat, governing.b_hat, p_used);
      xi = critical_value(null, alpha);
      step.recomputed = true;
      if (step.r_k > xi) {
        valid = true;
        k_hat = k;
        step.decision = StepDecision::BecameValid;
      } else {
        step.decision = StepDecision::StillSearching;
      }
    } else if (step.r_k <= xi) {
      valid = false;
      step.decision = StepDecision::Invalidated;
    } else {
      step.decision = StepDecision::StayedValid;
    }
    step.a_hat = governing.a_hat;
    step.b_hat = governing.b_hat;
    step.xi = xi;
    report.steps.push_back(step);
  }

  if (valid) report.k_hat = k_hat;
  return report;
}

std::optional<Index> replay_k_hat(const std::vector<KStepRecord>& steps) {
  std::optional<Index> candidate;
  for (const auto& step : steps) {
    switch (step.decision) {
      case StepDecision::BecameValid: candidate = step.k; break;
      case StepDecision::Invalidated: candidate.reset(); break;
      case StepDecision::StayedValid:
      case StepDecision::StillSearching: break;
    }
  }
  return candidate;
}

nlohmann::json to_json(const EstimateReport& report) {
  nlohmann::json j;
  j["format_version"] = kReportVersion;
  j["status"] = report.failed() ? "failed" : "ok";
  j["k_hat"] = report.k_hat ? nlohmann::json(*report.k_hat) : nlohmann::json("FAILED");
  j["alpha"] = report.alpha;
  j["k_coarse"] = report.k_coarse;
  j["m"] = report.m;
  j["degenerate"] = report.degenerate;
  auto& steps = j["steps"] = nlohmann::json::array();
  for (const auto& s : report.steps) {
    steps.push_back({{"k", s.k},
                     {"a_hat", s.a_hat},
                     {"b_hat", s.b_hat},
                     {"xi", s.xi},
                     {"r_k", s.r_k},
                     {"recomputed", s.recomputed},
                     {"decision", to_string(s.decision)}});
  }
  std::vector<double> top(report.top_eigenvalues.begin(), report.top_eigenvalues.end());
  j["spectrum_summary"] = {{"n", report.n}, {"p_used", report.p_used}, {"top_eigenvalues", top}};
  return j;
}

}  // namespace erstruct
