#ifndef FCREML_STAGE1_HPP
#define FCREML_STAGE1_HPP

#include "fcreml/basis.hpp"
#include "fcreml/kernels.hpp"
#include "fcreml/linalg.hpp"
#include "fcreml/model.hpp"
#include "fcreml/optimize.hpp"

#include <optional>

namespace fcreml {

struct Stage1Options {
  int K = 30;
  RegionTheta init{0.5, 1.0, 0.5};
  bool fix_fixed_effects = false;  // keep the spline coefficients at their least-squares fit
  bool allow_duplicate_voxels = false;
  OptOptions optimizer;
};

struct Stage1Fit {
  RegionTheta theta;
  VectorXd v_hat;      // K spline coefficients
  double sigma2_hat = 0.0;
  VectorXd nu_hat;     // M fitted fixed-effect values
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  OptStatus status = OptStatus::Stalled;
  std::vector<double> accepted;
  int clamped_eigenvalues = 0;
};

/// Pieces of the restricted likelihood at one theta.
struct IntraEvaluation {
  double objective = 0.0;
  VectorXd v_hat;
  double quad = 0.0;  // r^T V^{-1} r
  int clamped = 0;
};

namespace detail {

inline KroneckerShiftedOperator intra_operator(const RegionTheta& theta, const Coords& coords,
                                               const VectorXd& times, bool allow_duplicates) {
  require(theta.k_gamma_ratio >= 0.0 && std::isfinite(theta.k_gamma_ratio), "k_gamma_ratio must be >= 0");
  return KroneckerShiftedOperator(build_spatial_corr(coords, theta.phi_gamma, allow_duplicates),
                                  theta.k_gamma_ratio * build_temporal_corr(times, theta.tau_gamma));
}

/// Residual forms this small relative to the data are exact fits up to rounding.
inline void check_residual(double quad, double data_scale) {
  if (!(quad > 1e-20 * std::max(1.0, data_scale))) throw NumericalError("degenerate zero residual");
}

inline double restricted_objective(double log_det_v, double log_det_info, double dof, double quad) {
  if (!(quad > 0.0)) throw NumericalError("degenerate zero residual");
  return 0.5 * log_det_v + 0.5 * log_det_info + 0.5 * dof * std::log(quad);
}

}  // namespace detail

/// Negative restricted log-likelihood of one region with sigma^2 profiled out and
/// additive constants dropped. `design` is the M x K spline design shared by all
/// voxels; v is re-solved by GLS unless `fixed_v` is supplied.
inline IntraEvaluation evaluate_intra(const RegionTheta& theta, const MatrixXd& X, const Coords& coords,
                                      const MatrixXd& design, const VectorXd& times,
                                      const VectorXd* fixed_v = nullptr, bool allow_duplicates = false) {
  const Index L = X.rows(), M = X.cols(), K = design.cols();
  detail::require(coords.rows() == L, "coords and signals disagree on the voxel count");
  detail::require(design.rows() == M && times.size() == M, "design and signals disagree on M");
  const KroneckerShiftedOperator D = detail::intra_operator(theta, coords, times, allow_duplicates);
  const MatrixXd Z = X.transpose();  // M x L

  const MatrixXd info = design.transpose() * D.summed_inverse() * design;  // G^T V^-1 G
  const Eigen::LLT<MatrixXd> info_llt = cholesky_with_retry(info, "GLS information matrix");
  IntraEvaluation out;
  if (fixed_v) {
    out.v_hat = *fixed_v;
  } else {
    out.v_hat = info_llt.solve(design.transpose() * D.summed_solve(Z));
  }
  const MatrixXd r = Z.colwise() - design * out.v_hat;
  out.quad = D.quad(r);
  detail::check_residual(out.quad, X.squaredNorm());
  out.clamped = D.clamped_eigenvalues();
  out.objective = detail::restricted_objective(D.log_det(), log_det_from_llt(info_llt),
                                               static_cast<double>(M * L - K), out.quad);
  return out;
}

inline double neg_reml_intra_fast(const RegionTheta& theta, const MatrixXd& X, const MatrixXd& design,
                                  const Coords& coords, const VectorXd& times) {
  return evaluate_intra(theta, X, coords, design, times).objective;
}

/// Full LM x LM covariance C (x) kB + I of one region's stacked signals.
inline MatrixXd build_intra_cov(const RegionTheta& theta, const Coords& coords, const VectorXd& times) {
  MatrixXd V = kron(build_spatial_corr(coords, theta.phi_gamma),
                    theta.k_gamma_ratio * build_temporal_corr(times, theta.tau_gamma));
  V.diagonal().array() += 1.0;
  return V;
}

/// Same objective assembled from the explicit covariance. Small instances only.
inline double neg_reml_intra_dense(const RegionTheta& theta, const MatrixXd& X, const MatrixXd& design,
                                   const Coords& coords, const VectorXd& times,
                                   const VectorXd* fixed_v = nullptr) {
  const Index L = X.rows(), M = X.cols(), K = design.cols();
  const MatrixXd V = build_intra_cov(theta, coords, times);
  const Eigen::LLT<MatrixXd> llt = cholesky_with_retry(V, "region covariance");
  const MatrixXd G = kron(VectorXd::Ones(L), design);
  const VectorXd x = stack_signals(X);
  const MatrixXd ViG = llt.solve(G);
  const Eigen::LLT<MatrixXd> info = cholesky_with_retry(G.transpose() * ViG, "GLS information matrix");
  const VectorXd v = fixed_v ? *fixed_v : VectorXd(info.solve(ViG.transpose() * x));
  const VectorXd r = x - G * v;
  return detail::restricted_objective(log_det_from_llt(llt), log_det_from_llt(info),
                                      static_cast<double>(M * L - K), r.dot(llt.solve(r)));
}

inline VectorXd gls_v(const RegionTheta& theta, const MatrixXd& X, const MatrixXd& design, const Coords& coords,
                      const VectorXd& times) {
  return evaluate_intra(theta, X, coords, design, times).v_hat;
}

inline double profile_sigma2_intra(const RegionTheta& theta, const MatrixXd& X, const MatrixXd& design,
                                   const Coords& coords, const VectorXd& times,
                                   const VectorXd* fixed_v = nullptr) {
  const IntraEvaluation e = evaluate_intra(theta, X, coords, design, times, fixed_v);
  return e.quad / static_cast<double>(X.rows() * X.cols() - design.cols());
}

/// Estimate (phi_gamma, k_gamma, tau_gamma), the spline fixed effect and sigma^2 for one region.
inline Stage1Fit fit_region(const RegionData& region, const Stage1Options& opts = {}) {
  const Index L = region.voxels(), M = region.timepoints();
  detail::require(L >= 1, "region has no voxels");
  detail::require(M > opts.K, "fixed-effect basis size K must be smaller than the number of timepoints");
  detail::require(region.coords.rows() == L, "coords and signals disagree on the voxel count");
  detail::require(region.X.allFinite(), "signals must be finite");
  const VectorXd times = unit_times(M);
  const MatrixXd design = make_basis(times, opts.K);
  const VectorXd v_ols = ols_init(design, region.X);
  const VectorXd* fixed = opts.fix_fixed_effects ? &v_ols : nullptr;
  // Fail early on coordinates the kernels reject.
  voxel_distances(region.coords, opts.allow_duplicate_voxels);

  auto theta_of = [](const VectorXd& x) { return RegionTheta{x(0), x(1), x(2)}; };
  OptProblem problem;
  problem.objective = [&](const VectorXd& x) {
    return evaluate_intra(theta_of(x), region.X, region.coords, design, times, fixed,
                          opts.allow_duplicate_voxels)
        .objective;
  };
  problem.transforms = {Transform::Log, Transform::Log, Transform::Log};
  problem.lower = Eigen::Vector3d(std::log(limits::kRateMin), std::log(limits::kGammaRatioMin),
                                  std::log(limits::kRateMin));
  problem.upper = Eigen::Vector3d(std::log(limits::kRateMax), std::log(limits::kGammaRatioMax),
                                  std::log(limits::kRateMax));
  const Eigen::Vector3d init(opts.init.phi_gamma, opts.init.k_gamma_ratio, opts.init.tau_gamma);
  const OptResult res = minimize(problem, init, opts.optimizer);

  Stage1Fit fit;
  fit.theta = theta_of(res.argmin);
  const IntraEvaluation e = evaluate_intra(fit.theta, region.X, region.coords, design, times, fixed,
                                           opts.allow_duplicate_voxels);
  fit.v_hat = e.v_hat;
  fit.sigma2_hat = e.quad / static_cast<double>(L * M - opts.K);
  fit.nu_hat = design * fit.v_hat;
  fit.objective = e.objective;
  fit.initial_objective = res.initial_value;
  fit.iterations = res.iterations;
  fit.evaluations = res.evaluations;
  fit.status = res.status;
  fit.accepted = res.accepted;
  fit.clamped_eigenvalues = e.clamped;
  return fit;
}

}  // namespace fcreml

#endif  // FCREML_STAGE1_HPP
