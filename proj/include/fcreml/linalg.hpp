#ifndef FCREML_LINALG_HPP
#define FCREML_LINALG_HPP

#include "fcreml/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <optional>

namespace fcreml {

inline constexpr double kCholeskyJitter = 1e-8;
inline constexpr double kEigenvalueFloor = 1e-10;

/// Kronecker product A (x) B.
inline MatrixXd kron(const MatrixXd& A, const MatrixXd& B) {
  MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

/// Stacked vector of an L x M signal matrix: voxel-major, time fastest.
inline VectorXd stack_signals(const MatrixXd& X) {
  MatrixXd Xt = X.transpose();
  return Eigen::Map<const VectorXd>(Xt.data(), Xt.size());
}

/// Cholesky factor of A; on failure retries once with `jitter` added to the diagonal.
inline Eigen::LLT<MatrixXd> cholesky_with_retry(const MatrixXd& A, const char* what,
                                                double jitter = kCholeskyJitter) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  MatrixXd B = A;
  B.diagonal().array() += jitter;
  llt.compute(B);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string("Cholesky factorization failed for ") + what +
                         " after jitter retry");
  }
  return llt;
}

inline double log_det_from_llt(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Symmetric eigendecomposition with eigenvalues floored at `floor`.
/// `clamped` counts eigenvalues that were meaningfully negative before flooring.
struct FlooredEigen {
  MatrixXd vectors;
  VectorXd values;
  int clamped = 0;
};

inline FlooredEigen floored_eigen(const MatrixXd& A, double floor = kEigenvalueFloor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  FlooredEigen out{es.eigenvectors(), es.eigenvalues(), 0};
  const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
  for (Index i = 0; i < out.values.size(); ++i) {
    if (out.values(i) < -floor * scale) ++out.clamped;
    out.values(i) = std::max(out.values(i), floor);
  }
  return out;
}

/// D = C (x) B + I for an L x L spatial factor C and an M x M temporal factor B,
/// acting on stacked vectors indexed (voxel l, time m) -> l*M + m.
///
/// Vectors are passed as M x L matrices whose column l is voxel l's series; with
/// that layout (C (x) B) vec(Z) = vec(B Z C^T). Every operation runs in the joint
/// eigenbasis of C and B, so nothing of size (LM)^2 is ever formed.
class KroneckerShiftedOperator {
 public:
  KroneckerShiftedOperator() = default;

  KroneckerShiftedOperator(const MatrixXd& C, const MatrixXd& B) {
    const FlooredEigen ec = floored_eigen(C);
    const FlooredEigen eb = floored_eigen(B);
    Qc_ = ec.vectors;
    Qb_ = eb.vectors;
    lc_ = ec.values;
    lb_ = eb.values;
    clamped_ = ec.clamped + eb.clamped;
    inv_eig_.resize(lb_.size(), lc_.size());
    log_det_ = 0.0;
    for (Index l = 0; l < lc_.size(); ++l) {
      for (Index m = 0; m < lb_.size(); ++m) {
        const double e = lc_(l) * lb_(m) + 1.0;
        inv_eig_(m, l) = 1.0 / e;
        log_det_ += std::log(e);
      }
    }
    ones_hat_ = Qc_.transpose() * VectorXd::Ones(lc_.size());
    // S = P^T D^{-1} P with P = 1_L (x) I_M equals Q_B diag(s) Q_B^T.
    const VectorXd s = inv_eig_ * ones_hat_.cwiseAbs2();
    summed_inverse_ = Qb_ * s.asDiagonal() * Qb_.transpose();
  }

  Index voxels() const { return lc_.size(); }
  Index timepoints() const { return lb_.size(); }
  double log_det() const { return log_det_; }
  int clamped_eigenvalues() const { return clamped_; }

  MatrixXd to_eigenbasis(const MatrixXd& Z) const { return Qb_.transpose() * Z * Qc_; }
  MatrixXd from_eigenbasis(const MatrixXd& Zh) const { return Qb_ * Zh * Qc_.transpose(); }

  /// D^{-1} vec(Z), returned in the same M x L layout.
  MatrixXd solve(const MatrixXd& Z) const {
    return from_eigenbasis(to_eigenbasis(Z).cwiseProduct(inv_eig_));
  }

  /// D vec(Z).
  MatrixXd apply(const MatrixXd& Z) const {
    return from_eigenbasis(to_eigenbasis(Z).cwiseQuotient(inv_eig_));
  }

  /// vec(Z)^T D^{-1} vec(Z).
  double quad(const MatrixXd& Z) const {
    return to_eigenbasis(Z).cwiseAbs2().cwiseProduct(inv_eig_).sum();
  }

  /// vec(Y)^T D^{-1} vec(Z).
  double bilinear(const MatrixXd& Y, const MatrixXd& Z) const {
    return to_eigenbasis(Y).cwiseProduct(to_eigenbasis(Z)).cwiseProduct(inv_eig_).sum();
  }

  /// P^T D^{-1} vec(Z): the voxel sum of D^{-1} vec(Z), length M.
  VectorXd summed_solve(const MatrixXd& Z) const {
    return Qb_ * (to_eigenbasis(Z).cwiseProduct(inv_eig_) * ones_hat_);
  }

  /// P^T D^{-1} P, an M x M matrix.
  const MatrixXd& summed_inverse() const { return summed_inverse_; }

  const MatrixXd& spatial_vectors() const { return Qc_; }
  const MatrixXd& temporal_vectors() const { return Qb_; }
  /// 1 / (lambda_C(l) lambda_B(m) + 1) laid out M x L.
  const MatrixXd& inverse_eigenvalues() const { return inv_eig_; }

 private:
  MatrixXd Qc_, Qb_;
  VectorXd lc_, lb_;
  MatrixXd inv_eig_;
  VectorXd ones_hat_;
  MatrixXd summed_inverse_;
  double log_det_ = 0.0;
  int clamped_ = 0;
};

/// Reshape a stacked vector of length L*M into the M x L layout.
inline MatrixXd unstack(const VectorXd& v, Index M) {
  return Eigen::Map<const MatrixXd>(v.data(), M, v.size() / M);
}

inline VectorXd restack(const MatrixXd& Z) {
  return Eigen::Map<const VectorXd>(Z.data(), Z.size());
}

}  // namespace fcreml

#endif  // FCREML_LINALG_HPP
