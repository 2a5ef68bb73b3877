#ifndef FCREML_SIMULATOR_HPP
#define FCREML_SIMULATOR_HPP

#include "fcreml/kernels.hpp"
#include "fcreml/linalg.hpp"
#include "fcreml/model.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace fcreml {

/// Generative model for J regions. Variance parameters are ratios to sigma2.
struct ModelConfig {
  int J = 1;
  VectorXd mu;                       // J mean levels
  MatrixXd R;                        // J x J inter-regional correlation
  EtaCovParams eta;
  std::vector<RegionTheta> regions;  // J entries
  double sigma2 = 1.0;
  int M = 60;
  int L = 50;
  int lattice_side = 7;
  std::uint64_t seed = 1;
  std::vector<std::string> labels;  // optional; defaults to region1..regionJ
};

inline std::string region_label(const ModelConfig& c, int j) {
  if (static_cast<int>(c.labels.size()) == c.J) return c.labels[static_cast<size_t>(j)];
  return "region" + std::to_string(j + 1);
}

inline void validate(const ModelConfig& c) {
  detail::require(c.J >= 1, "J must be at least 1");
  detail::require(c.mu.size() == c.J, "mu must have J entries");
  detail::require(c.R.rows() == c.J && c.R.cols() == c.J, "R must be J x J");
  detail::require(static_cast<int>(c.regions.size()) == c.J, "one RegionTheta per region required");
  detail::require(c.labels.empty() || static_cast<int>(c.labels.size()) == c.J, "labels must have J entries");
  detail::require(c.sigma2 > 0.0 && std::isfinite(c.sigma2), "sigma2 must be positive");
  detail::require(c.M >= 1 && c.L >= 1 && c.lattice_side >= 1, "M, L and lattice_side must be positive");
  detail::require(static_cast<long long>(c.L) <=
                      static_cast<long long>(c.lattice_side) * c.lattice_side * c.lattice_side,
                  "L exceeds the number of lattice points");
  detail::require(c.mu.allFinite() && c.R.allFinite(), "mu and R must be finite");
  detail::require((c.R - c.R.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "R must be symmetric");
  detail::require((c.R.diagonal().array() == 1.0).all(), "R must have unit diagonal");
  for (const RegionTheta& t : c.regions) {
    detail::require(t.phi_gamma > 0.0 && t.tau_gamma > 0.0, "kernel rates must be positive");
    detail::require(t.k_gamma_ratio >= 0.0 && std::isfinite(t.k_gamma_ratio), "k_gamma_ratio must be >= 0");
  }
  detail::require(c.eta.tau_eta > 0.0, "tau_eta must be positive");
}

/// L distinct points of {0..side-1}^3, uniform without replacement.
inline Coords sample_voxels(int lattice_side, int L, std::mt19937_64& rng) {
  detail::require(lattice_side >= 1, "lattice side must be positive");
  const long long cells = static_cast<long long>(lattice_side) * lattice_side * lattice_side;
  detail::require(L >= 1 && L <= cells, "L must lie in [1, lattice_side^3]");
  std::vector<long long> idx(static_cast<size_t>(cells));
  std::iota(idx.begin(), idx.end(), 0LL);
  // Partial Fisher-Yates: the first L slots are a uniform sample without replacement.
  for (long long i = 0; i < L; ++i) {
    std::uniform_int_distribution<long long> pick(i, cells - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  Coords out(L, 3);
  for (int l = 0; l < L; ++l) {
    const long long v = idx[static_cast<size_t>(l)];
    out(l, 0) = static_cast<double>(v % lattice_side);
    out(l, 1) = static_cast<double>((v / lattice_side) % lattice_side);
    out(l, 2) = static_cast<double>(v / (static_cast<long long>(lattice_side) * lattice_side));
  }
  return out;
}

namespace detail {

/// Lower factor F with F F^T = A for a PSD matrix. Zero and diagonal matrices skip
/// the Cholesky, which keeps white-noise kernels cheap at large sizes.
class CovarianceFactor {
 public:
  CovarianceFactor() = default;
  CovarianceFactor(const MatrixXd& A, const char* what) {
    bool diagonal = true;
    for (Index j = 0; j < A.cols() && diagonal; ++j)
      for (Index i = 0; i < A.rows(); ++i)
        if (i != j && A(i, j) != 0.0) {
          diagonal = false;
          break;
        }
    if (diagonal) {
      require((A.diagonal().array() >= 0.0).all(), std::string("negative variance in ") + what);
      diag_ = A.diagonal().cwiseSqrt();
    } else {
      lower_ = cholesky_with_retry(A, what).matrixL();
    }
    size_ = A.rows();
  }

  /// F * Z for a matrix with `size` rows.
  MatrixXd apply(const MatrixXd& Z) const {
    if (lower_.size() == 0) return diag_.asDiagonal() * Z;
    return lower_.triangularView<Eigen::Lower>() * Z;
  }

  Index size() const { return size_; }

 private:
  VectorXd diag_;
  MatrixXd lower_;
  Index size_ = 0;
};

}  // namespace detail

/// Draws replicates of a fixed configuration. Temporal factors are built once and
/// reused; each replicate samples fresh voxel coordinates.
class DatasetSampler {
 public:
  explicit DatasetSampler(ModelConfig config) : config_(std::move(config)) {
    validate(config_);
    const VectorXd times = unit_times(config_.M);
    r_factor_ = cholesky_with_retry(config_.R, "inter-regional correlation R").matrixL();
    eta_factor_ = detail::CovarianceFactor(build_eta_cov(times, config_.eta), "shared-signal covariance");
    for (const RegionTheta& t : config_.regions) {
      temporal_.emplace_back(build_temporal_corr(times, t.tau_gamma), "temporal correlation");
    }
  }

  const ModelConfig& config() const { return config_; }

  /// Replicate r uses the stream derived from (seed, r).
  std::vector<RegionData> sample(std::uint64_t replicate = 0) const { return draw(replicate, nullptr); }

  /// Same as sample() but with caller-supplied voxel coordinates, one block per region.
  std::vector<RegionData> sample_at(std::uint64_t replicate, const std::vector<Coords>& coords) const {
    detail::require(static_cast<int>(coords.size()) == config_.J, "one coordinate block per region");
    return draw(replicate, &coords);
  }

 private:
  std::vector<RegionData> draw(std::uint64_t replicate, const std::vector<Coords>* coords) const {
    Rng rng(config_.seed, replicate);
    const int J = config_.J, M = config_.M;
    const double sd = std::sqrt(config_.sigma2);

    std::vector<RegionData> out(static_cast<size_t>(J));
    for (int j = 0; j < J; ++j) {
      RegionData& r = out[static_cast<size_t>(j)];
      r.label = region_label(config_, j);
      r.coords = coords ? (*coords)[static_cast<size_t>(j)]
                        : sample_voxels(config_.lattice_side, config_.L, rng.engine());
      r.voxel_ids.resize(static_cast<size_t>(r.coords.rows()));
      std::iota(r.voxel_ids.begin(), r.voxel_ids.end(), 0LL);
    }

    // eta: M x J with cov(vec) = sigma2 R (x) A, drawn as F_A Z F_R^T.
    const MatrixXd eta = sd * eta_factor_.apply(rng.normal_matrix(M, J)) * r_factor_.transpose();

    for (int j = 0; j < J; ++j) {
      RegionData& r = out[static_cast<size_t>(j)];
      const RegionTheta& t = config_.regions[static_cast<size_t>(j)];
      const Index L = r.coords.rows();
      MatrixXd gamma = MatrixXd::Zero(M, L);
      if (t.k_gamma_ratio > 0.0) {
        const MatrixXd spatial = cholesky_with_retry(build_spatial_corr(r.coords, t.phi_gamma),
                                                     "spatial correlation")
                                     .matrixL();
        gamma = std::sqrt(t.k_gamma_ratio) * sd *
                temporal_[static_cast<size_t>(j)].apply(rng.normal_matrix(M, L)) * spatial.transpose();
      }
      const MatrixXd noise = sd * rng.normal_matrix(M, L);
      MatrixXd series = gamma + noise;  // M x L, column l is voxel l
      series.colwise() += eta.col(j);
      series.array() += config_.mu(j);
      r.X = series.transpose();
    }
    return out;
  }

  ModelConfig config_;
  MatrixXd r_factor_;
  detail::CovarianceFactor eta_factor_;
  std::vector<detail::CovarianceFactor> temporal_;
};

inline std::vector<RegionData> simulate_dataset(const ModelConfig& config, std::uint64_t replicate = 0) {
  return DatasetSampler(config).sample(replicate);
}

/// Full covariance of the stacked signals of all regions, for small-instance checks.
inline MatrixXd joint_covariance(const ModelConfig& config, const std::vector<Coords>& coords,
                                 const VectorXd& times) {
  detail::require(static_cast<int>(coords.size()) == config.J, "one coordinate block per region");
  const Index M = times.size();
  const MatrixXd A = build_eta_cov(times, config.eta);
  std::vector<Index> offset(coords.size() + 1, 0);
  for (size_t j = 0; j < coords.size(); ++j) offset[j + 1] = offset[j] + coords[j].rows() * M;
  MatrixXd V = MatrixXd::Zero(offset.back(), offset.back());
  for (int j = 0; j < config.J; ++j) {
    const auto uj = static_cast<size_t>(j);
    const Index Lj = coords[uj].rows();
    const RegionTheta& t = config.regions[uj];
    for (int k = 0; k < config.J; ++k) {
      const auto uk = static_cast<size_t>(k);
      const Index Lk = coords[uk].rows();
      V.block(offset[uj], offset[uk], Lj * M, Lk * M) = config.R(j, k) * kron(MatrixXd::Ones(Lj, Lk), A);
    }
    V.block(offset[uj], offset[uj], Lj * M, Lj * M) +=
        t.k_gamma_ratio * kron(build_spatial_corr(coords[uj], t.phi_gamma), build_temporal_corr(times, t.tau_gamma));
  }
  V.diagonal().array() += 1.0;
  return config.sigma2 * V;
}

/// Three regions with means (1, 10, 20) and correlations 0.1, 0.35, 0.6 on a side-7
/// lattice with L = 50, M = 60.
inline ModelConfig three_region_scenario(double k_eta_ratio, double phi_gamma) {
  ModelConfig c;
  c.J = 3;
  c.mu = VectorXd(3);
  c.mu << 1.0, 10.0, 20.0;
  c.R = MatrixXd::Identity(3, 3);
  c.R(0, 1) = c.R(1, 0) = 0.1;
  c.R(0, 2) = c.R(2, 0) = 0.35;
  c.R(1, 2) = c.R(2, 1) = 0.6;
  c.eta = EtaCovParams{k_eta_ratio, 0.25, 0.1};
  c.regions.assign(3, RegionTheta{phi_gamma, 2.0, 0.5});
  c.sigma2 = 1.0;
  c.M = 60;
  c.L = 50;
  c.lattice_side = 7;
  return c;
}

struct Preset {
  std::string name;
  double k_eta_ratio;
  double phi_gamma;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = {
      {"paper-s4", 1.0, 1.0},
      {"keta0.5-phi0.25", 0.5, 0.25}, {"keta0.5-phi1", 0.5, 1.0},
      {"keta1-phi0.25", 1.0, 0.25},   {"keta1-phi1", 1.0, 1.0},
      {"keta1.5-phi0.25", 1.5, 0.25}, {"keta1.5-phi1", 1.5, 1.0},
  };
  return all;
}

inline ModelConfig preset_config(const std::string& name) {
  for (const Preset& p : presets())
    if (p.name == name) return three_region_scenario(p.k_eta_ratio, p.phi_gamma);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace fcreml

#endif  // FCREML_SIMULATOR_HPP
