#ifndef FCREML_BASIS_HPP
#define FCREML_BASIS_HPP

#include "fcreml/common.hpp"

#include <Eigen/QR>

namespace fcreml {

/// Cubic B-spline basis with an open uniform knot vector over [t_1, t_M].
struct SplineBasis {
  int K = 30;
  int order = 4;
  VectorXd interior_knots;
  VectorXd knots;  // full knot vector, boundary knots repeated `order` times
};

inline SplineBasis make_spline_basis(double lo, double hi, int K) {
  detail::require(K >= 4, "spline basis size K must be at least 4");
  detail::require(hi > lo, "spline domain must have positive length");
  SplineBasis basis;
  basis.K = K;
  const int n_interior = K - 4;
  basis.interior_knots.resize(n_interior);
  for (int u = 0; u < n_interior; ++u) {
    basis.interior_knots(u) = lo + (hi - lo) * (u + 1) / static_cast<double>(n_interior + 1);
  }
  basis.knots.resize(K + 4);
  for (int i = 0; i < 4; ++i) {
    basis.knots(i) = lo;
    basis.knots(K + i) = hi;
  }
  basis.knots.segment(4, n_interior) = basis.interior_knots;
  return basis;
}

/// Values of all K basis functions at x (Cox-de Boor recursion).
inline VectorXd evaluate_basis(const SplineBasis& basis, double x) {
  const VectorXd& t = basis.knots;
  const int K = basis.K;
  const int p = basis.order - 1;
  const double lo = t(0), hi = t(t.size() - 1);
  detail::require(x >= lo && x <= hi, "spline argument outside the knot range");

  // Knot span s with t(s) <= x < t(s+1); the right end point belongs to the last span.
  int s = K - 1;
  if (x < hi) {
    s = p;
    while (s < K - 1 && x >= t(s + 1)) ++s;
  }

  // Degree-by-degree recursion for the p+1 nonzero functions N_{s-p..s}.
  VectorXd N = VectorXd::Zero(p + 1);
  VectorXd left(p + 1), right(p + 1);
  N(0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = x - t(s + 1 - j);
    right(j) = t(s + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right(r + 1) + left(j - r);
      const double temp = denom > 0.0 ? N(r) / denom : 0.0;
      N(r) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    N(j) = saved;
  }

  VectorXd out = VectorXd::Zero(K);
  out.segment(s - p, p + 1) = N;
  return out;
}

/// M x K design matrix of basis values at each timepoint, knots spanning [t_1, t_M].
inline MatrixXd make_basis(const VectorXd& times, int K) {
  const Index M = times.size();
  detail::require(M >= 4, "at least 4 timepoints are required for a cubic basis");
  detail::require(K <= M, "spline basis size K exceeds the number of timepoints");
  const SplineBasis basis = make_spline_basis(times(0), times(M - 1), K);
  MatrixXd G(M, K);
  for (Index m = 0; m < M; ++m) G.row(m) = evaluate_basis(basis, times(m)).transpose();
  return G;
}

/// Least-squares spline coefficients for an L x M signal matrix. The design repeats
/// per voxel, so this is the fit to the voxel-averaged series.
inline VectorXd ols_init(const MatrixXd& design, const MatrixXd& X) {
  detail::require(X.cols() == design.rows(), "signal length does not match the design");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  if (qr.rank() < design.cols()) throw NumericalError("spline design is rank deficient");
  const VectorXd mean_series = X.colwise().mean().transpose();
  return qr.solve(mean_series);
}

}  // namespace fcreml

#endif  // FCREML_BASIS_HPP
