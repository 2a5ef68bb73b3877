#ifndef FCREML_COMMON_HPP
#define FCREML_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcreml {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Voxel coordinates, one row per voxel.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Raised when a factorization fails or a quantity leaves its numerical domain.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(name) + " must be finite");
}

}  // namespace detail

/// Timepoints t_m = m for m = 1..M.
inline VectorXd unit_times(Index M) {
  return VectorXd::LinSpaced(M, 1.0, static_cast<double>(M));
}

}  // namespace fcreml

#endif  // FCREML_COMMON_HPP
