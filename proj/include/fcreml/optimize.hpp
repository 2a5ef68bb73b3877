#ifndef FCREML_OPTIMIZE_HPP
#define FCREML_OPTIMIZE_HPP

#include "fcreml/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace fcreml {

enum class Transform { Identity, Log, Arctanh };

/// Map between a natural parameter value and the unconstrained optimizer coordinate.
inline double to_unconstrained(Transform t, double x) {
  switch (t) {
    case Transform::Log:
      detail::require(x > 0.0, "log-transformed parameter must be positive");
      return std::log(x);
    case Transform::Arctanh:
      detail::require(x > -1.0 && x < 1.0, "arctanh-transformed parameter must lie in (-1, 1)");
      return std::atanh(x);
    case Transform::Identity:
      break;
  }
  return x;
}

inline double from_unconstrained(Transform t, double z) {
  switch (t) {
    case Transform::Log:
      return std::exp(z);
    case Transform::Arctanh:
      return std::tanh(z);
    case Transform::Identity:
      break;
  }
  return z;
}

enum class OptimizerKind { TrustRegion, QuasiNewton };
enum class OptStatus { Converged, MaxIterations, Stalled };

inline const char* to_string(OptStatus s) {
  switch (s) {
    case OptStatus::Converged:
      return "converged";
    case OptStatus::MaxIterations:
      return "max-iter";
    case OptStatus::Stalled:
      return "stalled";
  }
  return "unknown";
}

inline const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::TrustRegion ? "trust-region" : "quasi-newton";
}

/// Minimization problem in natural coordinates. The objective may return a
/// non-finite value (or throw NumericalError) to mark a point infeasible.
struct OptProblem {
  std::function<double(const VectorXd&)> objective;
  std::vector<Transform> transforms;  // one per coordinate; empty means identity
  VectorXd lower;                     // bounds in transformed space; empty means none
  VectorXd upper;
};

struct OptOptions {
  OptimizerKind kind = OptimizerKind::TrustRegion;
  double rho_begin = 0.5;   // initial trust radius, transformed space
  double rho_end = 1e-8;    // trust radius floor
  double ftol_rel = 1e-8;   // relative objective change for convergence
  int max_iterations = 500;
  int max_evaluations = 5000;
  double gradient_step = 1e-5;  // quasi-Newton central-difference step
  int lbfgs_memory = 8;
};

struct OptResult {
  VectorXd argmin;  // natural coordinates
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  OptStatus status = OptStatus::Stalled;
  std::vector<double> accepted;  // objective at each accepted iterate, non-increasing
};

/// Central-difference gradient.
inline VectorXd numeric_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                                 double h) {
  detail::require(h > 0.0, "finite-difference step must be positive");
  VectorXd g(x.size());
  VectorXd xp = x, xm = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp(i) = xm(i) = x(i);
  }
  return g;
}

namespace detail {

/// Objective in transformed coordinates, with infeasibility mapped to +inf.
class TransformedObjective {
 public:
  explicit TransformedObjective(const OptProblem& p) : p_(p) {}

  VectorXd natural(const VectorXd& z) const {
    VectorXd x(z.size());
    for (Index i = 0; i < z.size(); ++i) x(i) = from_unconstrained(transform(i), z(i));
    return x;
  }

  VectorXd transformed(const VectorXd& x) const {
    VectorXd z(x.size());
    for (Index i = 0; i < x.size(); ++i) z(i) = to_unconstrained(transform(i), x(i));
    return z;
  }

  double operator()(const VectorXd& z) {
    ++evaluations;
    try {
      const double v = p_.objective(natural(z));
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  int evaluations = 0;

 private:
  Transform transform(Index i) const {
    return p_.transforms.empty() ? Transform::Identity : p_.transforms[static_cast<size_t>(i)];
  }
  const OptProblem& p_;
};

inline VectorXd clamp_to_box(const VectorXd& z, const VectorXd& lo, const VectorXd& hi) {
  VectorXd out = z;
  if (lo.size() == z.size()) out = out.cwiseMax(lo);
  if (hi.size() == z.size()) out = out.cwiseMin(hi);
  return out;
}

/// Minimize g^T s + s^T H s / 2 over ||s|| <= radius via the eigendecomposition
/// of H (exact up to the bisection tolerance on the secular equation).
inline VectorXd trust_region_step(const VectorXd& g, const MatrixXd& H, double radius) {
  const Index n = g.size();
  if (n == 0) return VectorXd();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  const VectorXd& lam = es.eigenvalues();
  const MatrixXd& Q = es.eigenvectors();
  const VectorXd gh = Q.transpose() * g;
  const double lmin = lam(0);

  auto step_norm = [&](double shift) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double d = lam(i) + shift;
      s += gh(i) * gh(i) / (d * d);
    }
    return std::sqrt(s);
  };
  auto step = [&](double shift) {
    VectorXd sh(n);
    for (Index i = 0; i < n; ++i) sh(i) = -gh(i) / (lam(i) + shift);
    return VectorXd(Q * sh);
  };

  if (lmin > 0.0 && step_norm(0.0) <= radius) return step(0.0);

  double lo = std::max(0.0, -lmin);
  const double gnorm = gh.norm();
  // Hard case: g has no component along the lowest eigenvector.
  const double tiny = 1e-14 * std::max(1.0, gnorm);
  if (std::abs(gh(0)) <= tiny && step_norm(lo + 1e-12 * std::max(1.0, std::abs(lmin))) <= radius) {
    VectorXd sh(n);
    for (Index i = 0; i < n; ++i) {
      const double d = lam(i) - lmin;
      sh(i) = d > 1e-12 * std::max(1.0, std::abs(lmin)) ? -gh(i) / d : 0.0;
    }
    const double rem = radius * radius - sh.squaredNorm();
    sh(0) += std::sqrt(std::max(0.0, rem));
    return Q * sh;
  }
  double hi = lo + gnorm / radius + 1.0;
  while (step_norm(hi) > radius) hi *= 2.0;
  if (lo == -lmin) lo += 1e-15 * std::max(1.0, std::abs(lmin));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (step_norm(mid) > radius) lo = mid; else hi = mid;
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  return step(hi);
}

/// Trust-region step honouring box bounds: coordinates whose step leaves the box
/// are fixed at the bound and the subproblem is re-solved over the rest.
inline VectorXd bounded_trust_region_step(const VectorXd& x, const VectorXd& g, const MatrixXd& H,
                                          double radius, const VectorXd& lo, const VectorXd& hi) {
  const Index n = x.size();
  const bool boxed = lo.size() == n && hi.size() == n;
  std::vector<bool> fixed(static_cast<size_t>(n), false);
  VectorXd s = VectorXd::Zero(n);
  for (int round = 0; round <= n; ++round) {
    std::vector<Index> freeIdx;
    for (Index i = 0; i < n; ++i)
      if (!fixed[static_cast<size_t>(i)]) freeIdx.push_back(i);
    const Index nf = static_cast<Index>(freeIdx.size());
    const double used = s.squaredNorm();
    const double rem = std::sqrt(std::max(0.0, radius * radius - used));
    VectorXd gf(nf);
    MatrixXd Hf(nf, nf);
    for (Index a = 0; a < nf; ++a) {
      gf(a) = g(freeIdx[a]) + H.row(freeIdx[a]).dot(s);
      for (Index b = 0; b < nf; ++b) Hf(a, b) = H(freeIdx[a], freeIdx[b]);
    }
    const VectorXd sf = rem > 0.0 ? trust_region_step(gf, Hf, rem) : VectorXd::Zero(nf);
    VectorXd trial = s;
    for (Index a = 0; a < nf; ++a) trial(freeIdx[a]) = sf(a);
    if (!boxed) return trial;
    bool violated = false;
    for (Index a = 0; a < nf; ++a) {
      const Index i = freeIdx[a];
      if (x(i) + trial(i) < lo(i)) {
        s(i) = lo(i) - x(i);
        fixed[static_cast<size_t>(i)] = true;
        violated = true;
      } else if (x(i) + trial(i) > hi(i)) {
        s(i) = hi(i) - x(i);
        fixed[static_cast<size_t>(i)] = true;
        violated = true;
      }
    }
    if (!violated) return trial;
  }
  return s;
}

/// Derivative-free trust-region minimizer on 2n+1 interpolation points. Each
/// iteration fits the quadratic that interpolates every point while changing the
/// previous model Hessian least in Frobenius norm, then minimizes it over the
/// trust region. A resolution radius rho shrinks from rho_begin to rho_end.
class QuadraticModelTrustRegion {
 public:
  QuadraticModelTrustRegion(TransformedObjective& f, const VectorXd& lo, const VectorXd& hi,
                            const OptOptions& opts)
      : f_(f), lo_(lo), hi_(hi), opts_(opts) {}

  OptResult run(const VectorXd& z0, double f0) {
    n_ = z0.size();
    npt_ = 2 * n_ + 1;
    OptResult res;
    res.initial_value = f0;
    initialise(z0, f0);
    res.accepted.push_back(f0);
    if (kopt_ != 0) res.accepted.push_back(fval_(kopt_));
    double rho = opts_.rho_begin;
    double delta = rho;
    double stage_start_f = fval_(kopt_);
    H_ = MatrixXd::Zero(n_, n_);
    int iter = 0;
    OptStatus status = OptStatus::MaxIterations;

    while (true) {
      if (iter >= opts_.max_iterations || f_.evaluations >= opts_.max_evaluations) {
        status = OptStatus::MaxIterations;
        break;
      }
      ++iter;
      if (!build_model()) {
        // Degenerate interpolation set: rebuild around the best point.
        initialise(Y_.row(kopt_).transpose(), fval_(kopt_), std::max(rho, 10 * opts_.rho_end));
        H_.setZero();
        if (!build_model()) {
          status = OptStatus::Stalled;
          break;
        }
      }
      const VectorXd xopt = Y_.row(kopt_).transpose();
      const VectorXd s = bounded_trust_region_step(xopt, g_, H_, delta, lo_, hi_);
      const double snorm = s.norm();
      const double pred = -(g_.dot(s) + 0.5 * s.dot(H_ * s));

      bool reduce_rho = false;
      if (snorm < 0.5 * rho || !(pred > 0.0)) {
        // The model predicts little progress at this resolution.
        const Index far = farthest_point(xopt);
        if ((Y_.row(far).transpose() - xopt).norm() > 2.0 * rho) {
          improve_geometry(far, xopt, rho);
        } else {
          reduce_rho = true;
        }
        delta = std::max(0.5 * delta, rho);
      } else {
        const VectorXd znew = clamp_to_box(xopt + s, lo_, hi_);
        const double fnew = f_(znew);
        const double fopt = fval_(kopt_);
        const double ratio = std::isfinite(fnew) ? (fopt - fnew) / pred : -1.0;
        if (ratio <= 0.1) {
          delta = std::max(0.5 * delta, rho);
          if (delta <= 1.5 * rho) delta = rho;
        } else if (ratio <= 0.7) {
          delta = std::max(0.5 * delta, snorm);
        } else {
          delta = std::max(0.5 * delta, 2.0 * snorm);
        }
        const Index t = choose_replacement(znew, xopt, delta, fnew < fopt);
        if (t >= 0 && std::isfinite(fnew)) {
          Y_.row(t) = znew.transpose();
          fval_(t) = fnew;
          if (fnew < fopt) {
            kopt_ = t;
            res.accepted.push_back(fnew);
          }
        }
        if (ratio < 0.1) {
          const VectorXd xo = Y_.row(kopt_).transpose();
          const Index far = farthest_point(xo);
          const double dist = (Y_.row(far).transpose() - xo).norm();
          if (dist > 2.0 * delta) {
            const double before = fval_(kopt_);
            improve_geometry(far, xo, std::max(rho, std::min(0.1 * dist, delta)));
            if (fval_(kopt_) < before) res.accepted.push_back(fval_(kopt_));
          } else if (delta <= rho && snorm <= 2.0 * rho) {
            reduce_rho = true;
          }
        }
      }

      if (reduce_rho) {
        if (rho <= opts_.rho_end) {
          status = OptStatus::Converged;
          break;
        }
        const double fnow = fval_(kopt_);
        const double change = std::abs(stage_start_f - fnow);
        // A stage with no accepted step says nothing about convergence; keep refining.
        if (rho <= 1e-4 && change > 0.0 && change <= opts_.ftol_rel * std::abs(fnow)) {
          status = OptStatus::Converged;
          break;
        }
        stage_start_f = fnow;
        const double ratio = rho / opts_.rho_end;
        const double rho_old = rho;
        if (ratio <= 16.0) rho = opts_.rho_end;
        else if (ratio <= 250.0) rho = std::sqrt(ratio) * opts_.rho_end;
        else rho *= 0.1;
        delta = std::max(0.5 * rho_old, rho);
      }
    }
    res.argmin = Y_.row(kopt_).transpose();
    res.value = fval_(kopt_);
    res.iterations = iter;
    res.status = status;
    return res;
  }

 private:
  void initialise(const VectorXd& z0, double f0, double radius = -1.0) {
    const double r = radius > 0.0 ? radius : opts_.rho_begin;
    Y_.resize(npt_, n_);
    fval_.resize(npt_);
    Y_.row(0) = z0.transpose();
    fval_(0) = f0;
    for (Index i = 0; i < n_; ++i) {
      double up = r, down = -r;
      if (hi_.size() == n_ && z0(i) + up > hi_(i)) {
        up = -r;
        down = -2.0 * r;
      } else if (lo_.size() == n_ && z0(i) + down < lo_(i)) {
        down = 2.0 * r;
      }
      for (int k = 0; k < 2; ++k) {
        VectorXd z = z0;
        z(i) += k == 0 ? up : down;
        z = clamp_to_box(z, lo_, hi_);
        const Index row = 1 + 2 * i + k;
        Y_.row(row) = z.transpose();
        fval_(row) = f_(z);
      }
    }
    kopt_ = 0;
    for (Index k = 1; k < npt_; ++k)
      if (fval_(k) < fval_(kopt_)) kopt_ = k;
  }

  /// Fit g, H about the best point; also caches the KKT inverse for Lagrange values.
  bool build_model() {
    const VectorXd xopt = Y_.row(kopt_).transpose();
    MatrixXd S(npt_, n_);
    for (Index k = 0; k < npt_; ++k) S.row(k) = Y_.row(k) - xopt.transpose();
    scale_ = std::max(S.rowwise().norm().maxCoeff(), 1e-300);
    S /= scale_;
    const Index dim = npt_ + n_ + 1;
    MatrixXd K = MatrixXd::Zero(dim, dim);
    for (Index i = 0; i < npt_; ++i) {
      for (Index j = 0; j < npt_; ++j) {
        const double d = S.row(i).dot(S.row(j));
        K(i, j) = 0.5 * d * d;
      }
      K(i, npt_) = K(npt_, i) = 1.0;
      for (Index a = 0; a < n_; ++a) K(i, npt_ + 1 + a) = K(npt_ + 1 + a, i) = S(i, a);
    }
    lu_.compute(K);
    if (!(std::abs(lu_.determinant()) > 0.0) || !lu_.isInvertible()) return false;
    // Interpolate the residual of the previous Hessian (scaled coordinates).
    const MatrixXd Hs = H_ * scale_ * scale_;
    VectorXd rhs = VectorXd::Zero(dim);
    for (Index i = 0; i < npt_; ++i) {
      rhs(i) = fval_(i) - fval_(kopt_) - 0.5 * S.row(i).dot(Hs * S.row(i).transpose());
    }
    if (!rhs.allFinite()) return false;
    const VectorXd sol = lu_.solve(rhs);
    if (!sol.allFinite()) return false;
    MatrixXd Hnew = Hs;
    for (Index i = 0; i < npt_; ++i) Hnew += sol(i) * S.row(i).transpose() * S.row(i);
    g_ = sol.tail(n_) / scale_;
    H_ = Hnew / (scale_ * scale_);
    S_ = S;
    return g_.allFinite() && H_.allFinite();
  }

  /// Lagrange function values of all points at z (min-norm interpolation).
  VectorXd lagrange_values(const VectorXd& z, const VectorXd& xopt) const {
    const VectorXd s = (z - xopt) / scale_;
    const Index dim = npt_ + n_ + 1;
    VectorXd w(dim);
    for (Index i = 0; i < npt_; ++i) {
      const double d = S_.row(i).dot(s);
      w(i) = 0.5 * d * d;
    }
    w(npt_) = 1.0;
    w.tail(n_) = s;
    // l_t(z) = e_t^T K^{-1} w by symmetry of K.
    return lu_.solve(w).head(npt_);
  }

  Index farthest_point(const VectorXd& xopt) const {
    Index far = 0;
    double best = -1.0;
    for (Index k = 0; k < npt_; ++k) {
      const double d = (Y_.row(k).transpose() - xopt).squaredNorm();
      if (d > best) {
        best = d;
        far = k;
      }
    }
    return far;
  }

  Index choose_replacement(const VectorXd& znew, const VectorXd& xopt, double delta,
                           bool improves) const {
    const VectorXd ell = lagrange_values(znew, xopt);
    Index best = -1;
    double score = 0.0;
    for (Index k = 0; k < npt_; ++k) {
      if (k == kopt_ && !improves) continue;
      const double dist = (Y_.row(k).transpose() - xopt).norm() / std::max(delta, 1e-300);
      const double w = std::abs(ell(k)) * std::max(1.0, dist * dist * dist * dist);
      if (w > score) {
        score = w;
        best = k;
      }
    }
    return best;
  }

  /// Replace point `far` by one that makes its Lagrange function large in the ball.
  void improve_geometry(Index far, const VectorXd& xopt, double radius) {
    const Index dim = npt_ + n_ + 1;
    VectorXd e = VectorXd::Zero(dim);
    e(far) = 1.0;
    const VectorXd coef = lu_.solve(e);
    // Lagrange function as a quadratic in the (unscaled) step from xopt.
    VectorXd gl = coef.tail(n_) / scale_;
    MatrixXd Hl = MatrixXd::Zero(n_, n_);
    for (Index i = 0; i < npt_; ++i) Hl += coef(i) * S_.row(i).transpose() * S_.row(i);
    Hl /= scale_ * scale_;
    const double c0 = far == kopt_ ? 1.0 : 0.0;
    VectorXd best_s;
    double best_val = -1.0;
    for (int sign = -1; sign <= 1; sign += 2) {
      const VectorXd s = bounded_trust_region_step(xopt, sign * gl, sign * Hl, radius, lo_, hi_);
      const double val = std::abs(c0 + gl.dot(s) + 0.5 * s.dot(Hl * s));
      if (val > best_val) {
        best_val = val;
        best_s = s;
      }
    }
    if (!(best_s.norm() > 0.0)) {
      best_s = VectorXd::Zero(n_);
      best_s(far % n_) = radius;
    }
    const VectorXd z = clamp_to_box(xopt + best_s, lo_, hi_);
    const double fz = f_(z);
    if (!std::isfinite(fz)) return;
    Y_.row(far) = z.transpose();
    fval_(far) = fz;
    if (fz < fval_(kopt_)) kopt_ = far;
  }

  TransformedObjective& f_;
  VectorXd lo_, hi_;
  OptOptions opts_;
  Index n_ = 0, npt_ = 0, kopt_ = 0;
  MatrixXd Y_, S_;
  VectorXd fval_;
  VectorXd g_;
  MatrixXd H_;
  double scale_ = 1.0;
  Eigen::FullPivLU<MatrixXd> lu_;
};

/// L-BFGS with central-difference gradients and a backtracking Armijo search,
/// projected onto the box after each step.
inline OptResult lbfgs_minimize(TransformedObjective& f, const VectorXd& z0, double f0,
                                const VectorXd& lo, const VectorXd& hi, const OptOptions& opts) {
  OptResult res;
  res.initial_value = f0;
  res.accepted.push_back(f0);
  const Index n = z0.size();
  const auto fun = [&f](const VectorXd& z) { return f(z); };
  VectorXd z = z0;
  double fz = f0;
  VectorXd g = numeric_gradient(fun, z, opts.gradient_step);
  std::vector<VectorXd> S, Yv;
  res.status = OptStatus::MaxIterations;
  int stalls = 0;
  int iter = 0;
  for (; iter < opts.max_iterations && f.evaluations < opts.max_evaluations; ++iter) {
    if (!g.allFinite()) {
      res.status = OptStatus::Stalled;
      break;
    }
    if (g.norm() <= 1e-8 * std::max(1.0, std::abs(fz))) {
      res.status = OptStatus::Converged;
      break;
    }
    // Two-loop recursion.
    VectorXd q = g;
    const size_t m = S.size();
    std::vector<double> alpha(m);
    for (size_t k = m; k-- > 0;) {
      alpha[k] = S[k].dot(q) / Yv[k].dot(S[k]);
      q -= alpha[k] * Yv[k];
    }
    if (m > 0) q *= S.back().dot(Yv.back()) / Yv.back().squaredNorm();
    for (size_t k = 0; k < m; ++k) {
      const double beta = Yv[k].dot(q) / Yv[k].dot(S[k]);
      q += S[k] * (alpha[k] - beta);
    }
    VectorXd dir = -q;
    if (dir.dot(g) >= 0.0) dir = -g;
    if (m == 0) dir *= std::min(1.0, opts.rho_begin / std::max(dir.norm(), 1e-300));

    double step = 1.0;
    VectorXd znew;
    double fnew = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int ls = 0; ls < 40; ++ls) {
      znew = clamp_to_box(z + step * dir, lo, hi);
      fnew = f(znew);
      if (std::isfinite(fnew) && fnew <= fz + 1e-4 * g.dot(znew - z)) {
        found = true;
        break;
      }
      step *= 0.5;
    }
    if (!found || !(fnew < fz)) {
      if (!S.empty()) {
        S.clear();
        Yv.clear();
        if (++stalls < 3) continue;
      }
      res.status = OptStatus::Stalled;
      break;
    }
    const VectorXd gnew = numeric_gradient(fun, znew, opts.gradient_step);
    const VectorXd s = znew - z, y = gnew - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Yv.push_back(y);
      if (static_cast<int>(S.size()) > opts.lbfgs_memory) {
        S.erase(S.begin());
        Yv.erase(Yv.begin());
      }
    }
    const double change = fz - fnew;
    z = znew;
    fz = fnew;
    g = gnew;
    res.accepted.push_back(fz);
    if (change <= opts.ftol_rel * std::abs(fz) && s.norm() <= 1e-6) {
      res.status = OptStatus::Converged;
      ++iter;
      break;
    }
    (void)n;
  }
  res.iterations = iter;
  res.argmin = z;
  res.value = fz;
  return res;
}

}  // namespace detail

/// Minimize problem.objective starting from `init` (natural coordinates).
inline OptResult minimize(const OptProblem& problem, const VectorXd& init, const OptOptions& opts = {}) {
  detail::require(static_cast<bool>(problem.objective), "objective is empty");
  detail::require(problem.transforms.empty() ||
                      problem.transforms.size() == static_cast<size_t>(init.size()),
                  "one transform per coordinate required");
  detail::TransformedObjective f(problem);
  VectorXd z0 = f.transformed(init);
  z0 = detail::clamp_to_box(z0, problem.lower, problem.upper);
  const double f0 = f(z0);
  if (!std::isfinite(f0)) throw std::invalid_argument("objective is not finite at the initial point");
  OptResult res;
  if (opts.kind == OptimizerKind::TrustRegion) {
    detail::QuadraticModelTrustRegion tr(f, problem.lower, problem.upper, opts);
    res = tr.run(z0, f0);
  } else {
    res = detail::lbfgs_minimize(f, z0, f0, problem.lower, problem.upper, opts);
  }
  res.argmin = f.natural(res.argmin);
  res.evaluations = f.evaluations;
  return res;
}

}  // namespace fcreml

#endif  // FCREML_OPTIMIZE_HPP
