#ifndef FCREML_BASELINES_HPP
#define FCREML_BASELINES_HPP

#include "fcreml/kernels.hpp"
#include "fcreml/model.hpp"

namespace fcreml {

/// Pearson correlation of two equal-length series.
inline double pearson(const VectorXd& a, const VectorXd& b) {
  detail::require(a.size() == b.size(), "series lengths differ");
  detail::require(a.size() >= 2, "at least two points required");
  detail::require(a.allFinite() && b.allFinite(), "series must be finite");
  const VectorXd ca = a.array() - a.mean();
  const VectorXd cb = b.array() - b.mean();
  const double na = ca.norm(), nb = cb.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("zero-variance series");
  return std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
}

/// Correlation of the two voxel-averaged series. Rows of each matrix are voxels.
inline double corr_of_averages(const MatrixXd& X1, const MatrixXd& X2) {
  detail::require(X1.cols() == X2.cols(), "regions disagree on the number of timepoints");
  detail::require(X1.cols() >= 3, "at least three timepoints required");
  return pearson(X1.colwise().mean().transpose(), X2.colwise().mean().transpose());
}

/// Correlation of the two fitted fixed-effect series from the region fits.
inline double fe_correlation(const VectorXd& nu1, const VectorXd& nu2) {
  detail::require(nu1.size() >= 3, "at least three timepoints required");
  return pearson(nu1, nu2);
}

/// Inputs of the large-M limit of the correlation of averages.
struct CALimitInputs {
  double alpha1 = 1.0;  // average pairwise intra-regional correlation
  double alpha2 = 1.0;
  double beta1 = 0.0;   // noise-to-signal ratio sigma^2 / (L xi^2)
  double beta2 = 0.0;
};

inline double ca_limit(const CALimitInputs& in, double rho_star) {
  detail::require(std::isfinite(rho_star), "rho_star must be finite");
  detail::require(in.alpha1 > 0.0 && in.alpha1 <= 1.0 + 1e-12 && in.alpha2 > 0.0 && in.alpha2 <= 1.0 + 1e-12,
                  "alpha must lie in (0, 1]");
  detail::require(in.beta1 >= 0.0 && in.beta2 >= 0.0, "beta must be non-negative");
  return rho_star / std::sqrt((in.alpha1 + in.beta1) * (in.alpha2 + in.beta2));
}

/// Lag-0 quantities the mixed model implies for one region.
struct ImpliedRegionMoments {
  double alpha = 1.0;       // mean over voxel pairs (l, l') of Corr(Y_l, Y_l')
  double beta = 0.0;        // 1 / (L xi2)
  double xi2_ratio = 0.0;   // latent voxel variance over sigma^2
};

inline ImpliedRegionMoments implied_region_moments(const EtaCovParams& eta, const RegionTheta& region,
                                                   const Coords& coords) {
  const double shared = eta.k_eta_ratio + eta.nugget_ratio;
  const double xi2 = shared + region.k_gamma_ratio;
  detail::require(xi2 > 0.0, "latent signal variance must be positive");
  const MatrixXd C = build_spatial_corr(coords, region.phi_gamma);
  const double L = static_cast<double>(coords.rows());
  ImpliedRegionMoments out;
  out.alpha = (shared + region.k_gamma_ratio * C.mean()) / xi2;
  out.beta = 1.0 / (L * xi2);
  out.xi2_ratio = xi2;
  return out;
}

/// Voxel-level cross-region correlation implied by the model.
inline double implied_rho_star(double rho, const EtaCovParams& eta, const ImpliedRegionMoments& r1,
                               const ImpliedRegionMoments& r2) {
  return rho * (eta.k_eta_ratio + eta.nugget_ratio) / std::sqrt(r1.xi2_ratio * r2.xi2_ratio);
}

/// Limit of the correlation of averages under the mixed model at the given parameters.
inline double model_ca_limit(double rho, const EtaCovParams& eta, const RegionTheta& region1,
                             const Coords& coords1, const RegionTheta& region2, const Coords& coords2) {
  const ImpliedRegionMoments a = implied_region_moments(eta, region1, coords1);
  const ImpliedRegionMoments b = implied_region_moments(eta, region2, coords2);
  return ca_limit(CALimitInputs{a.alpha, b.alpha, a.beta, b.beta}, implied_rho_star(rho, eta, a, b));
}

}  // namespace fcreml

#endif  // FCREML_BASELINES_HPP
