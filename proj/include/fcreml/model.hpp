#ifndef FCREML_MODEL_HPP
#define FCREML_MODEL_HPP

#include "fcreml/common.hpp"

#include <random>
#include <string>
#include <vector>

namespace fcreml {

/// One region's voxels and signals. Row l of X is voxel l's series, so the stacked
/// signal vector runs voxel-major with time fastest.
struct RegionData {
  std::string label;
  Coords coords;
  MatrixXd X;  // L x M
  std::vector<long long> voxel_ids;

  Index voxels() const { return X.rows(); }
  Index timepoints() const { return X.cols(); }
};

/// Intra-regional variance components, k_gamma_ratio = k_gamma / sigma^2.
struct RegionTheta {
  double phi_gamma = 0.5;
  double k_gamma_ratio = 1.0;
  double tau_gamma = 0.5;
};

/// Search box for the variance parameters, in natural units. The optimizers see
/// log (or arctanh for correlations) of these limits.
namespace limits {
inline constexpr double kRateMin = 1e-3;
inline constexpr double kRateMax = 50.0;
inline constexpr double kGammaRatioMin = 1e-8;
inline constexpr double kGammaRatioMax = 1e4;
inline constexpr double kEtaRatioMin = 1e-6;
inline constexpr double kEtaRatioMax = 1e3;
inline constexpr double kAtanhMax = 5.0;
}  // namespace limits

/// Random streams are std::mt19937_64 engines seeded through
/// std::seed_seq{seed_lo, seed_hi, stream_lo, stream_hi}; normals come from
/// std::normal_distribution, so streams are reproducible per standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }

  MatrixXd normal_matrix(Index rows, Index cols) {
    MatrixXd Z(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) Z(i, j) = normal();
    return Z;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace fcreml

#endif  // FCREML_MODEL_HPP
