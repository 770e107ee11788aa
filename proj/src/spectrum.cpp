#include "erstruct/spectrum.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace erstruct {

Spectrum eigen_decompose(const Eigen::MatrixXd& symmetric, Index p_used) {
  const Index n = symmetric.rows();
  if (n != symmetric.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "eigen_decompose needs n >= 3");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  // Ascending from the solver.
  Eigen::VectorXd all = solver.eigenvalues();
  const double tol = 1e-8 * all.cwiseAbs().maxCoeff();
  for (Index i = 0; i < n; ++i) {
    if (all(i) >= 0.0) continue;
    if (all(i) < -tol) {
      throw Error(ErrorCode::IndefiniteMatrix,
                  "eigenvalue " + std::to_string(all(i)) + " below tolerance " +
                      std::to_string(-tol));
    }
    all(i) = 0.0;
  }

  Spectrum s;
  s.n = n;
  s.p_used = p_used;
  s.discarded = all(0);
  s.eigs = all.tail(n - 1).reverse();
  const bool defined = (s.eigs.head(n - 2).array() > 0.0).all();
  if (defined) s.ratios = eigenvalue_ratios(s.eigs);
  return s;
}

void write_scree_tsv(std::ostream& out, const Spectrum& spectrum) {
  out << "i\teigenvalue\tratio\tneg_log10_one_minus_ratio\n";
  char buf[64];
  const Index count = spectrum.eigs.size();
  for (Index i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", spectrum.eigs(i));
    out << (i + 1) << '\t' << buf << '\t';
    if (i < spectrum.ratios.size()) {
      const double r = spectrum.ratios(i);
      std::snprintf(buf, sizeof buf, "%.17g", r);
      out << buf << '\t';
      if (r >= 1.0) {
        out << "inf";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", -std::log10(1.0 - r));
        out << buf;
      }
    } else {
      out << "NA\tNA";
    }
    out << '\n';
  }
}

}  // namespace erstruct
