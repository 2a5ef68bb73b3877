#ifndef FCREML_STAGE2_HPP
#define FCREML_STAGE2_HPP

#include "fcreml/baselines.hpp"
#include "fcreml/kernels.hpp"
#include "fcreml/linalg.hpp"
#include "fcreml/model.hpp"
#include "fcreml/optimize.hpp"
#include "fcreml/stage1.hpp"

#include <array>
#include <string>

namespace fcreml {

/// Pair covariance parameters. Every variance entry is a ratio to sigma^2.
struct PairTheta {
  double tau_eta = 0.25;
  double k_eta_ratio = 1.0;
  RegionTheta region1;
  RegionTheta region2;
  double rho = 0.0;
  double nugget_ratio = 0.1;

  EtaCovParams eta() const { return EtaCovParams{k_eta_ratio, tau_eta, nugget_ratio}; }
  const RegionTheta& region(int j) const { return j == 0 ? region1 : region2; }

  /// (tau_eta, k_eta, phi_1, phi_2, tau_gamma_1, k_gamma_1, tau_gamma_2, k_gamma_2, rho, nugget)
  VectorXd to_vector() const {
    VectorXd v(10);
    v << tau_eta, k_eta_ratio, region1.phi_gamma, region2.phi_gamma, region1.tau_gamma, region1.k_gamma_ratio,
        region2.tau_gamma, region2.k_gamma_ratio, rho, nugget_ratio;
    return v;
  }

  static PairTheta from_vector(const VectorXd& v) {
    detail::require(v.size() == 10, "pair parameter vector must have 10 entries");
    PairTheta t;
    t.tau_eta = v(0);
    t.k_eta_ratio = v(1);
    t.region1 = RegionTheta{v(2), v(5), v(4)};
    t.region2 = RegionTheta{v(3), v(7), v(6)};
    t.rho = v(8);
    t.nugget_ratio = v(9);
    return t;
  }
};

/// Position of each parameter in PairTheta::to_vector().
namespace theta_index {
inline constexpr int kTauEta = 0, kKEta = 1, kPhi1 = 2, kPhi2 = 3, kTauGamma1 = 4, kKGamma1 = 5, kTauGamma2 = 6,
                     kKGamma2 = 7, kRho = 8, kNugget = 9;
}  // namespace theta_index

inline const std::array<const char*, 10>& theta_names() {
  static const std::array<const char*, 10> names = {"tau_eta",     "k_eta_ratio",     "phi_gamma_1",
                                                    "phi_gamma_2", "tau_gamma_1",     "k_gamma_ratio_1",
                                                    "tau_gamma_2", "k_gamma_ratio_2", "rho",
                                                    "nugget_ratio"};
  return names;
}

inline void validate(const PairTheta& t) {
  detail::require(std::abs(t.rho) < 1.0, "rho must lie in (-1, 1)");
  detail::require(t.tau_eta > 0.0 && std::isfinite(t.tau_eta), "tau_eta must be positive");
  detail::require(t.k_eta_ratio >= 0.0 && t.nugget_ratio >= 0.0 && std::isfinite(t.k_eta_ratio) &&
                      std::isfinite(t.nugget_ratio),
                  "shared-signal variances must be non-negative");
  for (const RegionTheta* r : {&t.region1, &t.region2}) {
    detail::require(r->phi_gamma > 0.0 && r->tau_gamma > 0.0, "kernel rates must be positive");
    detail::require(r->k_gamma_ratio >= 0.0 && std::isfinite(r->k_gamma_ratio), "k_gamma_ratio must be >= 0");
  }
}

enum class PairLikelihood { Structured, Schur, Dense };
enum class Stage2Mode { Refine, Fixed };

inline const char* to_string(PairLikelihood p) {
  switch (p) {
    case PairLikelihood::Structured: return "structured";
    case PairLikelihood::Schur: return "schur";
    case PairLikelihood::Dense: return "dense";
  }
  return "?";
}

inline const char* to_string(Stage2Mode m) { return m == Stage2Mode::Refine ? "refine" : "fixed"; }

/// Blocks of the pair covariance V (sigma^2 factored out, identity included).
struct PairBlocks {
  MatrixXd V11, V12, V22;
};

inline PairBlocks build_pair_cov(const PairTheta& theta, const Coords& coords1, const Coords& coords2,
                                 const VectorXd& times, bool allow_duplicates = false) {
  validate(theta);
  const Index L1 = coords1.rows(), L2 = coords2.rows();
  const MatrixXd A = build_eta_cov(times, theta.eta());
  PairBlocks b;
  b.V11 = kron(build_spatial_corr(coords1, theta.region1.phi_gamma, allow_duplicates),
               theta.region1.k_gamma_ratio * build_temporal_corr(times, theta.region1.tau_gamma)) +
          kron(MatrixXd::Ones(L1, L1), A);
  b.V22 = kron(build_spatial_corr(coords2, theta.region2.phi_gamma, allow_duplicates),
               theta.region2.k_gamma_ratio * build_temporal_corr(times, theta.region2.tau_gamma)) +
          kron(MatrixXd::Ones(L2, L2), A);
  b.V11.diagonal().array() += 1.0;
  b.V22.diagonal().array() += 1.0;
  b.V12 = theta.rho * kron(MatrixXd::Ones(L1, L2), A);
  return b;
}

inline MatrixXd assemble(const PairBlocks& b) {
  const Index n1 = b.V11.rows(), n2 = b.V22.rows();
  MatrixXd V(n1 + n2, n1 + n2);
  V.topLeftCorner(n1, n1) = b.V11;
  V.topRightCorner(n1, n2) = b.V12;
  V.bottomLeftCorner(n2, n1) = b.V12.transpose();
  V.bottomRightCorner(n2, n2) = b.V22;
  return V;
}

/// V = D + P (R (x) A) P^T where D = blockdiag(C_j (x) kB_j + I), P = blockdiag(1_{L_j} (x) I_M)
/// and R = [[1, rho], [rho, 1]]. With R (x) A = F F^T, Woodbury gives
///   V^{-1} = D^{-1} - D^{-1} P F T^{-1} F^T P^T D^{-1},  T = I + F^T P^T D^{-1} P F,
///   log|V| = log|D| + log|T|,
/// so only L x L, M x M and 2M x 2M factorizations are needed.
class PairCovariance {
 public:
  PairCovariance(const PairTheta& theta, const Coords& coords1, const Coords& coords2, const VectorXd& times,
                 bool allow_duplicates = false)
      : theta_(theta), M_(times.size()) {
    validate(theta);
    blocks_[0] = detail::intra_operator(theta.region1, coords1, times, allow_duplicates);
    blocks_[1] = detail::intra_operator(theta.region2, coords2, times, allow_duplicates);
    L_[0] = coords1.rows();
    L_[1] = coords2.rows();

    const FlooredEigen ea = floored_eigen(build_eta_cov(times, theta.eta()), 0.0);
    const MatrixXd root_a = ea.vectors * ea.values.cwiseSqrt().asDiagonal();
    const double c = std::sqrt(std::max(0.0, 1.0 - theta.rho * theta.rho));
    F_ = MatrixXd::Zero(2 * M_, 2 * M_);  // chol(R) (x) root_a
    F_.topLeftCorner(M_, M_) = root_a;
    F_.bottomLeftCorner(M_, M_) = theta.rho * root_a;
    F_.bottomRightCorner(M_, M_) = c * root_a;

    S_ = MatrixXd::Zero(2 * M_, 2 * M_);
    S_.topLeftCorner(M_, M_) = blocks_[0].summed_inverse();
    S_.bottomRightCorner(M_, M_) = blocks_[1].summed_inverse();
    MatrixXd T = F_.transpose() * S_ * F_;
    T.diagonal().array() += 1.0;
    T_ = cholesky_with_retry(T, "pair capacitance matrix");
    log_det_ = blocks_[0].log_det() + blocks_[1].log_det() + log_det_from_llt(T_);
  }

  Index timepoints() const { return M_; }
  Index voxels(int j) const { return L_[j]; }
  Index size() const { return M_ * (L_[0] + L_[1]); }
  double log_det() const { return log_det_; }
  int clamped_eigenvalues() const { return blocks_[0].clamped_eigenvalues() + blocks_[1].clamped_eigenvalues(); }
  const PairTheta& theta() const { return theta_; }
  const KroneckerShiftedOperator& block(int j) const { return blocks_[j]; }
  /// P^T D^{-1} P, block diagonal 2M x 2M.
  const MatrixXd& summed_inverse() const { return S_; }
  /// Factor F of R (x) A.
  const MatrixXd& shared_factor() const { return F_; }
  const Eigen::LLT<MatrixXd>& capacitance() const { return T_; }

  /// Region j's rows of a stacked N-vector, viewed as an M x L_j matrix.
  Eigen::Map<const MatrixXd> region_view(const VectorXd& x, int j) const {
    return {x.data() + (j == 0 ? 0 : M_ * L_[0]), M_, L_[j]};
  }

  /// D^{-1} applied to each column of an N x k matrix.
  MatrixXd solve_blocks(const MatrixXd& Y) const {
    MatrixXd out(Y.rows(), Y.cols());
    for (Index c = 0; c < Y.cols(); ++c) {
      const VectorXd col = Y.col(c);
      for (int j = 0; j < 2; ++j) {
        const MatrixXd s = blocks_[j].solve(region_view(col, j));
        out.col(c).segment(offset(j), M_ * L_[j]) = restack(s);
      }
    }
    return out;
  }

  /// P^T D^{-1} applied to each column: 2M x k.
  MatrixXd summed_solve(const MatrixXd& Y) const {
    MatrixXd out(2 * M_, Y.cols());
    for (Index c = 0; c < Y.cols(); ++c) {
      const VectorXd col = Y.col(c);
      for (int j = 0; j < 2; ++j) out.col(c).segment(j * M_, M_) = blocks_[j].summed_solve(region_view(col, j));
    }
    return out;
  }

  /// P w for a 2M x k matrix: each region's M-block repeated over its voxels.
  MatrixXd expand(const MatrixXd& W) const {
    MatrixXd out(size(), W.cols());
    for (int j = 0; j < 2; ++j)
      for (Index l = 0; l < L_[j]; ++l) out.middleRows(offset(j) + l * M_, M_) = W.middleRows(j * M_, M_);
    return out;
  }

  /// P^T Y: voxel sums per region, 2M x k.
  MatrixXd collapse(const MatrixXd& Y) const {
    MatrixXd out = MatrixXd::Zero(2 * M_, Y.cols());
    for (int j = 0; j < 2; ++j)
      for (Index l = 0; l < L_[j]; ++l) out.middleRows(j * M_, M_) += Y.middleRows(offset(j) + l * M_, M_);
    return out;
  }

  /// V^{-1} Y for an N x k matrix.
  MatrixXd solve(const MatrixXd& Y) const {
    const MatrixXd w = F_ * T_.solve(F_.transpose() * summed_solve(Y));
    return solve_blocks(Y - expand(w));
  }

  /// X^T V^{-1} Y for N x a and N x b matrices.
  MatrixXd bilinear(const MatrixXd& X, const MatrixXd& Y) const {
    MatrixXd out(X.cols(), Y.cols());
    for (Index a = 0; a < X.cols(); ++a) {
      const VectorXd xa = X.col(a);
      for (Index b = 0; b < Y.cols(); ++b) {
        const VectorXd yb = Y.col(b);
        out(a, b) = blocks_[0].bilinear(region_view(xa, 0), region_view(yb, 0)) +
                    blocks_[1].bilinear(region_view(xa, 1), region_view(yb, 1));
      }
    }
    const MatrixXd fx = F_.transpose() * summed_solve(X);
    const MatrixXd fy = F_.transpose() * summed_solve(Y);
    return out - fx.transpose() * T_.solve(fy);
  }

  /// V Y, for checks.
  MatrixXd apply(const MatrixXd& Y) const {
    MatrixXd out(Y.rows(), Y.cols());
    for (Index c = 0; c < Y.cols(); ++c) {
      const VectorXd col = Y.col(c);
      for (int j = 0; j < 2; ++j) out.col(c).segment(offset(j), M_ * L_[j]) = restack(blocks_[j].apply(region_view(col, j)));
    }
    return out + expand(F_ * (F_.transpose() * collapse(Y)));
  }

  Index offset(int j) const { return j == 0 ? 0 : M_ * L_[0]; }

 private:
  PairTheta theta_;
  Index M_;
  std::array<Index, 2> L_{};
  std::array<KroneckerShiftedOperator, 2> blocks_;
  MatrixXd F_, S_;
  Eigen::LLT<MatrixXd> T_;
  double log_det_ = 0.0;
};

/// Stacked pair data and its two-column region-indicator design.
struct PairData {
  VectorXd x;  // region 1 stacked, then region 2
  MatrixXd Z;  // N x 2
  Coords coords1, coords2;
  VectorXd times;
  Index L1 = 0, L2 = 0, M = 0;
};

inline PairData make_pair_data(const RegionData& a, const RegionData& b) {
  detail::require(a.timepoints() == b.timepoints(), "regions disagree on the number of timepoints");
  detail::require(a.coords.rows() == a.voxels() && b.coords.rows() == b.voxels(),
                  "coords and signals disagree on the voxel count");
  PairData d;
  d.M = a.timepoints();
  d.L1 = a.voxels();
  d.L2 = b.voxels();
  const Index n1 = d.M * d.L1, n2 = d.M * d.L2;
  d.x.resize(n1 + n2);
  d.x << stack_signals(a.X), stack_signals(b.X);
  d.Z = MatrixXd::Zero(n1 + n2, 2);
  d.Z.col(0).head(n1).setOnes();
  d.Z.col(1).tail(n2).setOnes();
  d.coords1 = a.coords;
  d.coords2 = b.coords;
  d.times = unit_times(d.M);
  return d;
}

struct InterEvaluation {
  double objective = 0.0;
  VectorXd mu_hat;
  double quad = 0.0;  // r^T V^{-1} r
  double log_det_v = 0.0;
};

namespace detail {

inline InterEvaluation finish_inter(double log_det_v, const MatrixXd& gram_zz, const VectorXd& gram_zx,
                                    const std::function<double(const VectorXd&)>& residual_quad, Index N,
                                    double data_scale) {
  const Eigen::LLT<MatrixXd> info = cholesky_with_retry(gram_zz, "GLS mean information");
  InterEvaluation out;
  out.mu_hat = info.solve(gram_zx);
  out.quad = residual_quad(out.mu_hat);
  check_residual(out.quad, data_scale);
  out.log_det_v = log_det_v;
  out.objective =
      restricted_objective(log_det_v, log_det_from_llt(info), static_cast<double>(N - 2), out.quad);
  return out;
}

/// Solves with V through the two-step Schur substitution.
class SchurSolver {
 public:
  explicit SchurSolver(const PairBlocks& b) : V12_(b.V12) {
    V22_ = cholesky_with_retry(b.V22, "V22");
    MatrixXd W = b.V11 - b.V12 * V22_.solve(b.V12.transpose());
    W = 0.5 * (W + W.transpose());
    W_ = cholesky_with_retry(W, "Schur complement W");
    log_det_ = log_det_from_llt(W_) + log_det_from_llt(V22_);
  }

  double log_det() const { return log_det_; }

  MatrixXd solve(const MatrixXd& Y) const {
    const Index n1 = V12_.rows();
    const MatrixXd y1 = Y.topRows(n1), y2 = Y.bottomRows(Y.rows() - n1);
    const MatrixXd b1 = W_.solve(y1 - V12_ * V22_.solve(y2));
    MatrixXd out(Y.rows(), Y.cols());
    out.topRows(n1) = b1;
    out.bottomRows(Y.rows() - n1) = V22_.solve(y2 - V12_.transpose() * b1);
    return out;
  }

 private:
  MatrixXd V12_;
  Eigen::LLT<MatrixXd> V22_, W_;
  double log_det_ = 0.0;
};

}  // namespace detail

/// Negative restricted log-likelihood of the pair with mu by GLS and sigma^2 profiled out;
/// additive constants dropped.
inline InterEvaluation evaluate_inter(const PairTheta& theta, const PairData& d,
                                      PairLikelihood method = PairLikelihood::Structured,
                                      bool allow_duplicates = false) {
  const Index N = d.x.size();
  const double scale = d.x.squaredNorm();
  if (method == PairLikelihood::Structured) {
    const PairCovariance V(theta, d.coords1, d.coords2, d.times, allow_duplicates);
    MatrixXd cols(N, 3);
    cols << d.Z, d.x;
    const MatrixXd g = V.bilinear(cols, cols);
    return detail::finish_inter(
        V.log_det(), g.topLeftCorner(2, 2), g.block(0, 2, 2, 1),
        [&](const VectorXd& mu) {
          const VectorXd r = d.x - d.Z * mu;
          return V.bilinear(r, r)(0, 0);
        },
        N, scale);
  }
  const PairBlocks blocks = build_pair_cov(theta, d.coords1, d.coords2, d.times, allow_duplicates);
  if (method == PairLikelihood::Schur) {
    const detail::SchurSolver S(blocks);
    const MatrixXd ViZ = S.solve(d.Z);
    return detail::finish_inter(
        S.log_det(), d.Z.transpose() * ViZ, ViZ.transpose() * d.x,
        [&](const VectorXd& mu) {
          const VectorXd r = d.x - d.Z * mu;
          return r.dot(S.solve(r).col(0));
        },
        N, scale);
  }
  const Eigen::LLT<MatrixXd> llt = cholesky_with_retry(assemble(blocks), "pair covariance");
  const MatrixXd ViZ = llt.solve(d.Z);
  return detail::finish_inter(
      log_det_from_llt(llt), d.Z.transpose() * ViZ, ViZ.transpose() * d.x,
      [&](const VectorXd& mu) {
        const VectorXd r = d.x - d.Z * mu;
        return r.dot(llt.solve(r));
      },
      N, scale);
}

inline double neg_reml_inter(const PairTheta& theta, const PairData& d,
                             PairLikelihood method = PairLikelihood::Structured) {
  return evaluate_inter(theta, d, method).objective;
}

inline VectorXd gls_mu(const PairTheta& theta, const PairData& d,
                       PairLikelihood method = PairLikelihood::Structured) {
  return evaluate_inter(theta, d, method).mu_hat;
}

inline double profile_sigma2_inter(const PairTheta& theta, const PairData& d,
                                   PairLikelihood method = PairLikelihood::Structured) {
  return evaluate_inter(theta, d, method).quad / static_cast<double>(d.x.size() - 2);
}

struct Stage2Options {
  Stage2Mode mode = Stage2Mode::Refine;
  PairLikelihood likelihood = PairLikelihood::Structured;
  double tau_eta_init = 0.25;
  double nugget_init = 0.1;
  double k_eta_floor = 0.05;
  double rho_clip = 0.95;
  double boundary_rho = 0.999;
  bool allow_duplicate_voxels = false;
  OptOptions optimizer;
};

struct Stage2Fit {
  PairTheta theta;
  VectorXd mu_hat;
  double sigma2_hat = 0.0;
  double sigma2_init = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;
  PairTheta initial_theta;
  int iterations = 0;
  int evaluations = 0;
  OptStatus status = OptStatus::Stalled;
  std::vector<double> accepted;
  Stage2Mode mode = Stage2Mode::Refine;
  bool rho_on_boundary = false;
};

/// Starting point built from the two region fits.
inline PairTheta initial_pair_theta(const Stage1Fit& fit1, const Stage1Fit& fit2, const Stage2Options& opts) {
  PairTheta t;
  t.region1 = fit1.theta;
  t.region2 = fit2.theta;
  t.tau_eta = opts.tau_eta_init;
  t.nugget_ratio = opts.nugget_init;
  t.rho = std::clamp(fe_correlation(fit1.nu_hat, fit2.nu_hat), -opts.rho_clip, opts.rho_clip);
  // Temporal variance of the fitted fixed effects around their means, per unit noise variance.
  auto spread = [](const VectorXd& nu) { return (nu.array() - nu.mean()).square().mean(); };
  const double sigma2 = 0.5 * (fit1.sigma2_hat + fit2.sigma2_hat);
  t.k_eta_ratio = std::max(opts.k_eta_floor, 0.5 * (spread(fit1.nu_hat) + spread(fit2.nu_hat)) / sigma2);
  return t;
}

namespace detail {

struct PairParameterization {
  Stage2Mode mode;
  PairTheta pinned;

  PairTheta theta(const VectorXd& x) const {
    if (mode == Stage2Mode::Refine) return PairTheta::from_vector(x);
    PairTheta t = pinned;
    t.tau_eta = x(0);
    t.k_eta_ratio = x(1);
    t.rho = x(2);
    t.nugget_ratio = x(3);
    return t;
  }

  VectorXd vector(const PairTheta& t) const {
    if (mode == Stage2Mode::Refine) return t.to_vector();
    return Eigen::Vector4d(t.tau_eta, t.k_eta_ratio, t.rho, t.nugget_ratio);
  }

  void fill(OptProblem& p) const {
    using namespace limits;
    const double rate_lo = std::log(kRateMin), rate_hi = std::log(kRateMax);
    const double eta_lo = std::log(kEtaRatioMin), eta_hi = std::log(kEtaRatioMax);
    const double gam_lo = std::log(kGammaRatioMin), gam_hi = std::log(kGammaRatioMax);
    if (mode == Stage2Mode::Refine) {
      p.transforms.assign(10, Transform::Log);
      p.transforms[theta_index::kRho] = Transform::Arctanh;
      p.lower.resize(10);
      p.upper.resize(10);
      p.lower << rate_lo, eta_lo, rate_lo, rate_lo, rate_lo, gam_lo, rate_lo, gam_lo, -kAtanhMax, eta_lo;
      p.upper << rate_hi, eta_hi, rate_hi, rate_hi, rate_hi, gam_hi, rate_hi, gam_hi, kAtanhMax, eta_hi;
    } else {
      p.transforms = {Transform::Log, Transform::Log, Transform::Arctanh, Transform::Log};
      p.lower = Eigen::Vector4d(rate_lo, eta_lo, -kAtanhMax, eta_lo);
      p.upper = Eigen::Vector4d(rate_hi, eta_hi, kAtanhMax, eta_hi);
    }
  }
};

}  // namespace detail

/// Inter-regional fit of one pair, warm-started from the two region fits.
inline Stage2Fit fit_pair(const RegionData& region1, const RegionData& region2, const Stage1Fit& fit1,
                          const Stage1Fit& fit2, const Stage2Options& opts = {}) {
  const PairData d = make_pair_data(region1, region2);
  detail::require(fit1.nu_hat.size() == d.M && fit2.nu_hat.size() == d.M, "region fits do not match the data");
  const PairTheta init = initial_pair_theta(fit1, fit2, opts);
  const detail::PairParameterization param{opts.mode, init};

  OptProblem problem;
  problem.objective = [&](const VectorXd& x) {
    return evaluate_inter(param.theta(x), d, opts.likelihood, opts.allow_duplicate_voxels).objective;
  };
  param.fill(problem);
  const OptResult res = minimize(problem, param.vector(init), opts.optimizer);

  Stage2Fit fit;
  fit.theta = param.theta(res.argmin);
  const InterEvaluation e = evaluate_inter(fit.theta, d, opts.likelihood, opts.allow_duplicate_voxels);
  fit.mu_hat = e.mu_hat;
  fit.sigma2_hat = e.quad / static_cast<double>(d.x.size() - 2);
  fit.sigma2_init = 0.5 * (fit1.sigma2_hat + fit2.sigma2_hat);
  fit.objective = e.objective;
  fit.initial_objective = res.initial_value;
  fit.initial_theta = init;
  fit.iterations = res.iterations;
  fit.evaluations = res.evaluations;
  fit.status = res.status;
  fit.accepted = res.accepted;
  fit.mode = opts.mode;
  fit.rho_on_boundary = std::abs(fit.theta.rho) > opts.boundary_rho;
  return fit;
}

}  // namespace fcreml

#endif  // FCREML_STAGE2_HPP
