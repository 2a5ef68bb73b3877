#ifndef FCREML_INFERENCE_HPP
#define FCREML_INFERENCE_HPP

#include "fcreml/stage2.hpp"

#include <boost/math/distributions/normal.hpp>

#include <variant>

namespace fcreml {

enum class SeMode { Marginal, FullInverse };

inline const char* to_string(SeMode m) { return m == SeMode::Marginal ? "marginal" : "full-inverse"; }

inline SeMode se_mode_from_string(const std::string& s) {
  if (s == "marginal") return SeMode::Marginal;
  if (s == "full-inverse") return SeMode::FullInverse;
  throw std::invalid_argument("unknown standard-error mode '" + s + "'");
}

struct PairInference {
  double rho_hat = 0.0;
  double se_rho = 0.0;
  double se_z = 0.0;  // standard error of arctanh(rho_hat)
  double z_score = 0.0;
  double p_value = 1.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  SeMode mode = SeMode::FullInverse;
};

/// V^{-1} - V^{-1} Z (Z^T V^{-1} Z)^{-1} Z^T V^{-1}, formed explicitly.
inline MatrixXd pi_matrix(const MatrixXd& V, const MatrixXd& Z) {
  detail::require(V.rows() == V.cols() && V.rows() == Z.rows(), "pi_matrix: dimension mismatch");
  const Eigen::LLT<MatrixXd> llt = cholesky_with_retry(V, "covariance for projection");
  const MatrixXd ViZ = llt.solve(Z);
  const Eigen::LLT<MatrixXd> info = cholesky_with_retry(Z.transpose() * ViZ, "projection information");
  MatrixXd Pi = llt.solve(MatrixXd::Identity(V.rows(), V.cols())) - ViZ * info.solve(ViZ.transpose());
  return 0.5 * (Pi + Pi.transpose());
}

/// Partial derivative of the pair covariance with respect to one theta coordinate,
/// as a dense N x N matrix. Small instances only.
inline MatrixXd dV_dtheta(const PairTheta& t, int index, const Coords& coords1, const Coords& coords2,
                          const VectorXd& times) {
  validate(t);
  detail::require(index >= 0 && index < 10, "theta index out of range");
  const Index L1 = coords1.rows(), L2 = coords2.rows(), M = times.size();
  const Index n1 = L1 * M, N = (L1 + L2) * M;
  MatrixXd out = MatrixXd::Zero(N, N);
  auto shared = [&](const MatrixXd& a) {
    out.topLeftCorner(n1, n1) = kron(MatrixXd::Ones(L1, L1), a);
    out.bottomRightCorner(N - n1, N - n1) = kron(MatrixXd::Ones(L2, L2), a);
    out.topRightCorner(n1, N - n1) = t.rho * kron(MatrixXd::Ones(L1, L2), a);
    out.bottomLeftCorner(N - n1, n1) = t.rho * kron(MatrixXd::Ones(L2, L1), a);
  };
  auto regional = [&](int j, const MatrixXd& spatial, const MatrixXd& temporal) {
    if (j == 0) out.topLeftCorner(n1, n1) = kron(spatial, temporal);
    else out.bottomRightCorner(N - n1, N - n1) = kron(spatial, temporal);
  };
  const MatrixXd lags = time_lags(times);
  namespace ti = theta_index;
  switch (index) {
    case ti::kTauEta: shared(t.k_eta_ratio * kernel_partials(TemporalKernel::Rbf, lags, t.tau_eta)); break;
    case ti::kKEta: shared(build_temporal_corr(times, t.tau_eta)); break;
    case ti::kNugget: shared(MatrixXd::Identity(M, M)); break;
    case ti::kRho: {
      const MatrixXd A = build_eta_cov(times, t.eta());
      out.topRightCorner(n1, N - n1) = kron(MatrixXd::Ones(L1, L2), A);
      out.bottomLeftCorner(N - n1, n1) = kron(MatrixXd::Ones(L2, L1), A);
      break;
    }
    default: {
      const int j = (index == ti::kPhi1 || index == ti::kTauGamma1 || index == ti::kKGamma1) ? 0 : 1;
      const RegionTheta& r = t.region(j);
      const Coords& c = j == 0 ? coords1 : coords2;
      if (index == ti::kPhi1 || index == ti::kPhi2) {
        regional(j, kernel_partials(SpatialKernel::Matern52, voxel_distances(c), r.phi_gamma),
                 r.k_gamma_ratio * build_temporal_corr(times, r.tau_gamma));
      } else if (index == ti::kTauGamma1 || index == ti::kTauGamma2) {
        regional(j, build_spatial_corr(c, r.phi_gamma),
                 r.k_gamma_ratio * kernel_partials(TemporalKernel::Rbf, lags, r.tau_gamma));
      } else {
        regional(j, build_spatial_corr(c, r.phi_gamma), build_temporal_corr(times, r.tau_gamma));
      }
    }
  }
  return out;
}

/// Restricted Fisher information for theta, plus its cross terms with log sigma^2.
struct FisherInformation {
  MatrixXd theta;       // 10 x 10, 0.5 Tr(Pi V_i Pi V_j)
  VectorXd with_scale;  // 0.5 Tr(Pi V_i)
  double scale = 0.0;   // 0.5 (N - 2)
};

inline FisherInformation fisher_info_dense(const PairTheta& t, const Coords& coords1, const Coords& coords2,
                                           const VectorXd& times) {
  const MatrixXd V = assemble(build_pair_cov(t, coords1, coords2, times));
  const Index N = V.rows(), n1 = coords1.rows() * times.size();
  MatrixXd Z = MatrixXd::Zero(N, 2);
  Z.col(0).head(n1).setOnes();
  Z.col(1).tail(N - n1).setOnes();
  const MatrixXd Pi = pi_matrix(V, Z);
  std::vector<MatrixXd> PiVi;
  for (int i = 0; i < 10; ++i) PiVi.push_back(Pi * dV_dtheta(t, i, coords1, coords2, times));
  FisherInformation out;
  out.theta.resize(10, 10);
  out.with_scale.resize(10);
  for (int i = 0; i < 10; ++i) {
    out.with_scale(i) = 0.5 * PiVi[static_cast<size_t>(i)].trace();
    for (int j = 0; j <= i; ++j) {
      out.theta(i, j) = out.theta(j, i) =
          0.5 * PiVi[static_cast<size_t>(i)].cwiseProduct(PiVi[static_cast<size_t>(j)].transpose()).sum();
    }
  }
  out.scale = 0.5 * static_cast<double>(N - 2);
  return out;
}

namespace detail {

/// A covariance partial is either P a P^T (shared signal) or a Kronecker term on one region.
struct SharedPartial {
  MatrixXd a;  // 2M x 2M
};
struct RegionalPartial {
  int region = 0;
  MatrixXd spatial, temporal;
};
using Partial = std::variant<SharedPartial, RegionalPartial>;

inline std::vector<Partial> covariance_partials(const PairTheta& t, const Coords& coords1, const Coords& coords2,
                                                const VectorXd& times, bool allow_duplicates) {
  Eigen::Matrix2d R;
  R << 1.0, t.rho, t.rho, 1.0;
  Eigen::Matrix2d E;
  E << 0.0, 1.0, 1.0, 0.0;
  const Index M = times.size();
  const MatrixXd lags = time_lags(times);
  std::vector<Partial> out(10);
  namespace ti = theta_index;
  out[ti::kTauEta] = SharedPartial{kron(R, t.k_eta_ratio * kernel_partials(TemporalKernel::Rbf, lags, t.tau_eta))};
  out[ti::kKEta] = SharedPartial{kron(R, build_temporal_corr(times, t.tau_eta))};
  out[ti::kRho] = SharedPartial{kron(E, build_eta_cov(times, t.eta()))};
  out[ti::kNugget] = SharedPartial{kron(R, MatrixXd::Identity(M, M))};
  const int phi[] = {ti::kPhi1, ti::kPhi2}, tau[] = {ti::kTauGamma1, ti::kTauGamma2},
            k[] = {ti::kKGamma1, ti::kKGamma2};
  for (int j = 0; j < 2; ++j) {
    const RegionTheta& r = t.region(j);
    const Coords& c = j == 0 ? coords1 : coords2;
    const MatrixXd C = build_spatial_corr(c, r.phi_gamma, allow_duplicates);
    const MatrixXd H = build_temporal_corr(times, r.tau_gamma);
    out[static_cast<size_t>(phi[j])] = RegionalPartial{
        j, kernel_partials(SpatialKernel::Matern52, voxel_distances(c, allow_duplicates), r.phi_gamma),
        r.k_gamma_ratio * H};
    out[static_cast<size_t>(tau[j])] =
        RegionalPartial{j, C, r.k_gamma_ratio * kernel_partials(TemporalKernel::Rbf, lags, r.tau_gamma)};
    out[static_cast<size_t>(k[j])] = RegionalPartial{j, C, H};
  }
  return out;
}

inline MatrixXd apply_partial(const PairCovariance& V, const Partial& p, const MatrixXd& Y) {
  if (const auto* s = std::get_if<SharedPartial>(&p)) return V.expand(s->a * V.collapse(Y));
  const auto& r = std::get<RegionalPartial>(p);
  const Index M = V.timepoints(), L = V.voxels(r.region);
  MatrixXd out = MatrixXd::Zero(Y.rows(), Y.cols());
  for (Index c = 0; c < Y.cols(); ++c) {
    const VectorXd col = Y.col(c);
    const MatrixXd z = r.temporal * V.region_view(col, r.region) * r.spatial.transpose();
    out.col(c).segment(V.offset(r.region), M * L) = restack(z);
  }
  return out;
}

}  // namespace detail

/// Same quantities as fisher_info_dense without forming any N x N matrix. With
/// V = D + P (R (x) A) P^T, the projection is Pi = D^{-1} - Y Y^T for an N x (2M+2)
/// matrix Y, so
///   Tr(Pi A Pi B) = Tr(D^{-1} A D^{-1} B) - 2 <B Y, D^{-1} A Y> + <Y^T A Y, Y^T B Y>,
/// and the first term reduces to eigenbasis sums or 2M x 2M traces.
inline FisherInformation fisher_info(const PairTheta& t, const Coords& coords1, const Coords& coords2,
                                     const VectorXd& times, bool allow_duplicates = false) {
  const PairCovariance V(t, coords1, coords2, times, allow_duplicates);
  const Index M = V.timepoints(), N = V.size();
  MatrixXd Z = MatrixXd::Zero(N, 2);
  Z.col(0).head(V.offset(1)).setOnes();
  Z.col(1).tail(N - V.offset(1)).setOnes();

  const MatrixXd K = V.solve_blocks(V.expand(MatrixXd::Identity(2 * M, 2 * M)));  // D^{-1} P
  const MatrixXd W = V.capacitance().matrixL().solve(V.shared_factor().transpose()).transpose();
  const MatrixXd ViZ = V.solve(Z);
  const Eigen::LLT<MatrixXd> zinfo = cholesky_with_retry(Z.transpose() * ViZ, "projection information");
  MatrixXd Y(N, 2 * M + 2);
  Y.leftCols(2 * M) = K * W;
  Y.rightCols(2) = zinfo.matrixL().solve(ViZ.transpose()).transpose();

  const std::vector<detail::Partial> parts = detail::covariance_partials(t, coords1, coords2, times, allow_duplicates);
  const MatrixXd& S = V.summed_inverse();
  std::vector<MatrixXd> AY(10), DAY(10), YAY(10), KAK(10), spatial_hat(10), temporal_hat(10);
  VectorXd trace_DA(10);
  for (size_t i = 0; i < 10; ++i) {
    AY[i] = detail::apply_partial(V, parts[i], Y);
    DAY[i] = V.solve_blocks(AY[i]);
    YAY[i] = Y.transpose() * AY[i];
    if (const auto* s = std::get_if<detail::SharedPartial>(&parts[i])) {
      KAK[i] = S * s->a * S;
      trace_DA(static_cast<Index>(i)) = (s->a * S).trace();
    } else {
      const auto& r = std::get<detail::RegionalPartial>(parts[i]);
      const KroneckerShiftedOperator& blk = V.block(r.region);
      KAK[i] = K.transpose() * detail::apply_partial(V, parts[i], K);
      spatial_hat[i] = blk.spatial_vectors().transpose() * r.spatial * blk.spatial_vectors();
      temporal_hat[i] = blk.temporal_vectors().transpose() * r.temporal * blk.temporal_vectors();
      trace_DA(static_cast<Index>(i)) =
          (temporal_hat[i].diagonal() * spatial_hat[i].diagonal().transpose()).cwiseProduct(blk.inverse_eigenvalues()).sum();
    }
  }

  auto trace_DD = [&](size_t i, size_t j) -> double {
    const auto* si = std::get_if<detail::SharedPartial>(&parts[i]);
    const auto* sj = std::get_if<detail::SharedPartial>(&parts[j]);
    if (si) return (si->a * KAK[j]).trace();
    if (sj) return (sj->a * KAK[i]).trace();
    const auto& ri = std::get<detail::RegionalPartial>(parts[i]);
    const auto& rj = std::get<detail::RegionalPartial>(parts[j]);
    if (ri.region != rj.region) return 0.0;
    const MatrixXd& d = V.block(ri.region).inverse_eigenvalues();
    const MatrixXd pc = spatial_hat[i].cwiseProduct(spatial_hat[j]);
    const MatrixXd pb = temporal_hat[i].cwiseProduct(temporal_hat[j]);
    return pc.cwiseProduct(d.transpose() * pb * d).sum();
  };

  FisherInformation out;
  out.theta.resize(10, 10);
  out.with_scale.resize(10);
  for (size_t i = 0; i < 10; ++i) {
    const auto ii = static_cast<Index>(i);
    out.with_scale(ii) = 0.5 * (trace_DA(ii) - YAY[i].trace());
    for (size_t j = 0; j <= i; ++j) {
      const double v = trace_DD(i, j) - 2.0 * AY[j].cwiseProduct(DAY[i]).sum() + YAY[i].cwiseProduct(YAY[j]).sum();
      out.theta(ii, static_cast<Index>(j)) = out.theta(static_cast<Index>(j), ii) = 0.5 * v;
    }
  }
  out.scale = 0.5 * static_cast<double>(N - 2);
  return out;
}

/// Standard error of rho_hat. Marginal mode treats every other parameter as known;
/// full-inverse mode takes the (rho, rho) entry of the inverse information over rho,
/// the listed free nuisance coordinates and log sigma^2.
inline double rho_se(const FisherInformation& info, SeMode mode, const std::vector<int>& free_nuisance) {
  const double irr = info.theta(theta_index::kRho, theta_index::kRho);
  if (!(irr > 0.0) || !std::isfinite(irr)) throw NumericalError("information for rho is not positive");
  if (mode == SeMode::Marginal) return 1.0 / std::sqrt(irr);

  const Index n = static_cast<Index>(free_nuisance.size()) + 1;
  MatrixXd nn(n, n);
  VectorXd nr(n);
  for (Index a = 0; a < n - 1; ++a) {
    const int ia = free_nuisance[static_cast<size_t>(a)];
    detail::require(ia >= 0 && ia < 10 && ia != theta_index::kRho, "invalid nuisance index");
    nr(a) = info.theta(ia, theta_index::kRho);
    nn(a, n - 1) = nn(n - 1, a) = info.with_scale(ia);
    for (Index b = 0; b < n - 1; ++b) nn(a, b) = info.theta(ia, free_nuisance[static_cast<size_t>(b)]);
  }
  nr(n - 1) = info.with_scale(theta_index::kRho);
  nn(n - 1, n - 1) = info.scale;

  // Nuisance directions the data do not inform (parameters pinned at a bound) drop out.
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(nn);
  const VectorXd ev = es.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  const VectorXd proj = es.eigenvectors().transpose() * nr;
  double explained = 0.0;
  for (Index i = 0; i < n; ++i)
    if (ev(i) > tol) explained += proj(i) * proj(i) / ev(i);
  const double schur = irr - explained;
  if (!(schur > 1e-12 * irr)) throw NumericalError("information for rho is singular after removing nuisance parameters");
  return 1.0 / std::sqrt(schur);
}

inline double rho_se(const FisherInformation& info, SeMode mode) {
  std::vector<int> all;
  for (int i = 0; i < 10; ++i)
    if (i != theta_index::kRho) all.push_back(i);
  return rho_se(info, mode, all);
}

/// Two-sided standard-normal quantile z_{1 - alpha/2}.
inline double normal_critical(double alpha) {
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - 0.5 * alpha);
}

inline std::pair<double, double> fisher_z_ci(double rho_hat, double se_rho, double alpha) {
  detail::require(std::abs(rho_hat) < 1.0, "rho_hat must lie in (-1, 1)");
  detail::require(se_rho >= 0.0 && std::isfinite(se_rho), "standard error must be finite and non-negative");
  const double center = std::atanh(rho_hat);
  const double half = normal_critical(alpha) * se_rho / (1.0 - rho_hat * rho_hat);
  return {std::tanh(center - half), std::tanh(center + half)};
}

/// z on the arctanh scale and its two-sided normal p-value.
inline std::pair<double, double> z_and_p(double rho_hat, double se_rho) {
  detail::require(std::abs(rho_hat) < 1.0, "rho_hat must lie in (-1, 1)");
  detail::require(se_rho > 0.0 && std::isfinite(se_rho), "standard error must be positive");
  const double z = std::atanh(rho_hat) * (1.0 - rho_hat * rho_hat) / se_rho;
  return {z, std::erfc(std::abs(z) / std::sqrt(2.0))};
}

struct InferenceOptions {
  SeMode mode = SeMode::FullInverse;
  double alpha = 0.05;
};

/// Coordinates estimated alongside rho in a given Stage-2 mode.
inline std::vector<int> free_nuisance(Stage2Mode mode) {
  namespace ti = theta_index;
  if (mode == Stage2Mode::Fixed) return {ti::kTauEta, ti::kKEta, ti::kNugget};
  std::vector<int> out;
  for (int i = 0; i < 10; ++i)
    if (i != ti::kRho) out.push_back(i);
  return out;
}

inline PairInference infer_pair(const Stage2Fit& fit, const Coords& coords1, const Coords& coords2, Index M,
                                const InferenceOptions& opts = {}, bool allow_duplicates = false) {
  const FisherInformation info = fisher_info(fit.theta, coords1, coords2, unit_times(M), allow_duplicates);
  PairInference out;
  out.rho_hat = fit.theta.rho;
  out.mode = opts.mode;
  out.alpha = opts.alpha;
  out.se_rho = rho_se(info, opts.mode, free_nuisance(fit.mode));
  out.se_z = out.se_rho / (1.0 - out.rho_hat * out.rho_hat);
  std::tie(out.z_score, out.p_value) = z_and_p(out.rho_hat, out.se_rho);
  std::tie(out.ci_lower, out.ci_upper) = fisher_z_ci(out.rho_hat, out.se_rho, opts.alpha);
  return out;
}

}  // namespace fcreml

#endif  // FCREML_INFERENCE_HPP
