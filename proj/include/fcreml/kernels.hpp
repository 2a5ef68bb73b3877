#ifndef FCREML_KERNELS_HPP
#define FCREML_KERNELS_HPP

#include "fcreml/common.hpp"

#include <cmath>

namespace fcreml {

struct TemporalKernelParams {
  double tau = 0.5;
};

struct SpatialKernelParams {
  double phi = 0.5;
};

/// Shared-signal covariance, every entry a ratio to the noise variance.
/// The resulting matrix is k_eta_ratio * G(tau_eta) + nugget_ratio * I.
struct EtaCovParams {
  double k_eta_ratio = 1.0;
  double tau_eta = 0.25;
  double nugget_ratio = 0.1;
};

enum class TemporalKernel { Rbf };
enum class SpatialKernel { Matern52 };

/// exp(-tau^2 u^2 / 2)
inline double rbf(double u, double tau) {
  detail::require_finite(u, "lag");
  detail::require_finite(tau, "tau");
  detail::require(u >= 0.0, "lag must be non-negative");
  detail::require(tau > 0.0, "tau must be positive");
  return std::exp(-0.5 * tau * tau * u * u);
}

inline double rbf_dtau(double u, double tau) {
  return -tau * u * u * rbf(u, tau);
}

/// (1 + sqrt5 phi d + 5/3 phi^2 d^2) exp(-sqrt5 phi d)
inline double matern52(double d, double phi) {
  detail::require_finite(d, "distance");
  detail::require_finite(phi, "phi");
  detail::require(d >= 0.0, "distance must be non-negative");
  detail::require(phi > 0.0, "phi must be positive");
  const double a = std::sqrt(5.0) * phi * d;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

inline double matern52_dphi(double d, double phi) {
  detail::require(d >= 0.0 && phi > 0.0, "matern52_dphi: invalid arguments");
  const double a = std::sqrt(5.0) * phi * d;
  return -(5.0 / 3.0) * phi * d * d * (1.0 + a) * std::exp(-a);
}

inline double correlation(TemporalKernel, double u, double tau) { return rbf(u, tau); }
inline double correlation(SpatialKernel, double d, double phi) { return matern52(d, phi); }
inline double correlation_drate(TemporalKernel, double u, double tau) { return rbf_dtau(u, tau); }
inline double correlation_drate(SpatialKernel, double d, double phi) { return matern52_dphi(d, phi); }

/// Absolute pairwise differences |t_m - t_m'|; rejects non-increasing input.
inline MatrixXd time_lags(const VectorXd& times) {
  const Index M = times.size();
  detail::require(M >= 1, "at least one timepoint required");
  for (Index m = 0; m < M; ++m) detail::require_finite(times(m), "timepoint");
  for (Index m = 1; m < M; ++m) {
    detail::require(times(m) > times(m - 1), "timepoints must be strictly increasing");
  }
  MatrixXd lags(M, M);
  for (Index i = 0; i < M; ++i)
    for (Index j = 0; j < M; ++j) lags(i, j) = std::abs(times(i) - times(j));
  return lags;
}

/// Euclidean distances between voxel rows. Duplicate voxels are rejected unless allowed.
inline MatrixXd voxel_distances(const Coords& coords, bool allow_duplicates = false) {
  const Index L = coords.rows();
  detail::require(L >= 1, "at least one voxel required");
  detail::require(coords.allFinite(), "voxel coordinates must be finite");
  MatrixXd dist(L, L);
  for (Index i = 0; i < L; ++i) {
    dist(i, i) = 0.0;
    for (Index j = 0; j < i; ++j) {
      const double d = (coords.row(i) - coords.row(j)).norm();
      if (d == 0.0 && !allow_duplicates) {
        throw std::invalid_argument("duplicate voxel coordinates at rows " + std::to_string(j) +
                                    " and " + std::to_string(i));
      }
      dist(i, j) = dist(j, i) = d;
    }
  }
  return dist;
}

template <typename Kind>
MatrixXd kernel_matrix(Kind kind, const MatrixXd& args, double rate) {
  MatrixXd out(args.rows(), args.cols());
  for (Index j = 0; j < args.cols(); ++j)
    for (Index i = 0; i < args.rows(); ++i) out(i, j) = correlation(kind, args(i, j), rate);
  return out;
}

/// Elementwise derivative of the correlation with respect to its rate parameter.
template <typename Kind>
MatrixXd kernel_partials(Kind kind, const MatrixXd& args, double rate) {
  detail::require(rate > 0.0 && std::isfinite(rate), "kernel rate must be positive");
  MatrixXd out(args.rows(), args.cols());
  for (Index j = 0; j < args.cols(); ++j)
    for (Index i = 0; i < args.rows(); ++i) out(i, j) = correlation_drate(kind, args(i, j), rate);
  return out;
}

inline MatrixXd build_temporal_corr(const VectorXd& times, double tau) {
  return kernel_matrix(TemporalKernel::Rbf, time_lags(times), tau);
}

inline MatrixXd build_eta_cov(const VectorXd& times, const EtaCovParams& p) {
  detail::require(p.k_eta_ratio >= 0.0 && std::isfinite(p.k_eta_ratio), "k_eta_ratio must be >= 0");
  detail::require(p.nugget_ratio >= 0.0 && std::isfinite(p.nugget_ratio), "nugget_ratio must be >= 0");
  MatrixXd A = p.k_eta_ratio * build_temporal_corr(times, p.tau_eta);
  A.diagonal().array() += p.nugget_ratio;
  return A;
}

inline constexpr double kDuplicateVoxelJitter = 1e-8;

/// Spatial correlation C. With allow_duplicates, coincident voxels are kept and
/// the diagonal is jittered so that C stays invertible.
inline MatrixXd build_spatial_corr(const Coords& coords, double phi, bool allow_duplicates = false) {
  MatrixXd C = kernel_matrix(SpatialKernel::Matern52, voxel_distances(coords, allow_duplicates), phi);
  if (allow_duplicates) C.diagonal().array() += kDuplicateVoxelJitter;
  return C;
}

}  // namespace fcreml

#endif  // FCREML_KERNELS_HPP
