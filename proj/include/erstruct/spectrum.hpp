#pragma once

#include "erstruct/normalize_gram.hpp"

#include <Eigen/Core>

#include <iosfwd>

namespace erstruct {

/// Top n-1 eigenvalues of S_p (descending) and their successive ratios.
struct Spectrum {
  Eigen::VectorXd eigs;    // l_1 >= ... >= l_{n-1}
  Eigen::VectorXd ratios;  // r_i = l_{i+1} / l_i, i = 1..n-2; empty if undefined
  Index n = 0;
  Index p_used = 0;
  double discarded = 0.0;  // the dropped smallest eigenvalue, after clamping
};

/// Eigenvalues of a symmetric n x n matrix (n >= 3). The smallest one is
/// the structural zero from centering and is dropped positionally.
/// Values in [-1e-8 l_1, 0) are clamped to 0; anything lower throws
/// IndefiniteMatrix.
Spectrum eigen_decompose(const Eigen::MatrixXd& symmetric, Index p_used);

inline Spectrum eigen_decompose(const SymmetricGram& gram) {
  return eigen_decompose(gram.values, gram.p_used);
}

/// r_i = l_{i+1} / l_i over a descending eigenvalue vector. Throws
/// ZeroDenominator if any denominator is zero.
template <typename Derived>
Eigen::VectorXd eigenvalue_ratios(const Eigen::MatrixBase<Derived>& eigs);

inline Eigen::VectorXd eigenvalue_ratios(const Spectrum& spectrum) {
  return eigenvalue_ratios(spectrum.eigs);
}

/// Scree table: i, l_i, r_i, -log10(1 - r_i). r_i = 1 prints "inf"; the
/// last row has no ratio and prints "NA".
void write_scree_tsv(std::ostream& out, const Spectrum& spectrum);

}  // namespace erstruct

#include "erstruct/error.hpp"

namespace erstruct {

template <typename Derived>
Eigen::VectorXd eigenvalue_ratios(const Eigen::MatrixBase<Derived>& eigs) {
  const Index count = eigs.size();
  if (count < 2) return Eigen::VectorXd();
  Eigen::VectorXd ratios(count - 1);
  for (Index i = 0; i + 1 < count; ++i) {
    if (eigs(i) == 0.0) {
      throw Error(ErrorCode::ZeroDenominator,
                  "eigenvalue l_" + std::to_string(i + 1) + " is zero");
    }
    ratios(i) = eigs(i + 1) / eigs(i);
  }
  return ratios;
}

}  // namespace erstruct
