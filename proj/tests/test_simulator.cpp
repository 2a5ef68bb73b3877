#include "fcreml/simulator.hpp"

#include <gtest/gtest.h>

#include <set>

namespace fcreml {
namespace {

ModelConfig two_region_small() {
  ModelConfig c;
  c.J = 2;
  c.mu = VectorXd(2);
  c.mu << 1.0, -2.0;
  c.R = MatrixXd::Identity(2, 2);
  c.R(0, 1) = c.R(1, 0) = 0.5;
  c.eta = EtaCovParams{1.0, 0.4, 0.2};
  c.regions = {RegionTheta{0.8, 1.5, 0.6}, RegionTheta{0.5, 0.7, 0.9}};
  c.sigma2 = 0.8;
  c.M = 4;
  c.L = 3;
  c.lattice_side = 3;
  return c;
}

TEST(SampleVoxels, SinglePoint) {
  std::mt19937_64 rng(1);
  const Coords c = sample_voxels(1, 1, rng);
  EXPECT_EQ(c.row(0), Eigen::RowVector3d::Zero());
}

TEST(SampleVoxels, DistinctLatticePoints) {
  std::mt19937_64 rng(7);
  const Coords c = sample_voxels(7, 50, rng);
  std::set<std::array<double, 3>> seen;
  for (Index l = 0; l < 50; ++l) {
    for (int d = 0; d < 3; ++d) {
      EXPECT_GE(c(l, d), 0.0);
      EXPECT_LE(c(l, d), 6.0);
      EXPECT_EQ(c(l, d), std::round(c(l, d)));
    }
    seen.insert({c(l, 0), c(l, 1), c(l, 2)});
  }
  EXPECT_EQ(seen.size(), 50u);
}

TEST(SampleVoxels, DeterministicAndRejectsOverflow) {
  std::mt19937_64 a(3), b(3);
  EXPECT_EQ(sample_voxels(7, 50, a), sample_voxels(7, 50, b));
  EXPECT_THROW(sample_voxels(2, 9, a), std::invalid_argument);
}

TEST(SampleVoxels, FullLatticeIsAPermutation) {
  std::mt19937_64 rng(5);
  const Coords c = sample_voxels(2, 8, rng);
  std::set<std::array<double, 3>> seen;
  for (Index l = 0; l < 8; ++l) seen.insert({c(l, 0), c(l, 1), c(l, 2)});
  EXPECT_EQ(seen.size(), 8u);
}

TEST(Simulate, PureNoiseVariance) {
  ModelConfig c = three_region_scenario(0.0, 1.0);
  c.eta.nugget_ratio = 0.0;
  for (auto& r : c.regions) r.k_gamma_ratio = 0.0;
  const auto data = simulate_dataset(c, 0);
  ASSERT_EQ(data.size(), 3u);
  for (int j = 0; j < 3; ++j) {
    const MatrixXd& X = data[static_cast<size_t>(j)].X;
    ASSERT_EQ(X.rows(), 50);
    ASSERT_EQ(X.cols(), 60);
    const double mean = X.mean();
    const double var = (X.array() - mean).square().sum() / static_cast<double>(X.size() - 1);
    EXPECT_NEAR(mean, c.mu(j), 0.1);
    EXPECT_NEAR(var, 1.0, 0.1);
  }
}

TEST(Simulate, DeterministicPerReplicate) {
  const ModelConfig c = three_region_scenario(1.0, 1.0);
  const auto a = simulate_dataset(c, 4);
  const auto b = simulate_dataset(c, 4);
  const auto other = simulate_dataset(c, 5);
  for (size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].X, b[j].X);
    EXPECT_EQ(a[j].coords, b[j].coords);
  }
  EXPECT_NE(a[0].X, other[0].X);
}

TEST(Simulate, ThreeRegionScenarioShape) {
  const ModelConfig c = preset_config("paper-s4");
  EXPECT_EQ(c.J, 3);
  EXPECT_EQ(c.mu(2), 20.0);
  EXPECT_EQ(c.R(1, 2), 0.6);
  EXPECT_EQ(c.regions[0].k_gamma_ratio, 2.0);
  EXPECT_EQ(c.regions[0].tau_gamma, 0.5);
  EXPECT_EQ(c.eta.tau_eta, 0.25);
  EXPECT_EQ(c.eta.nugget_ratio, 0.1);
  EXPECT_EQ(presets().size(), 7u);
  EXPECT_THROW(preset_config("nope"), std::invalid_argument);
}

TEST(Simulate, RejectsInvalidConfig) {
  ModelConfig c = two_region_small();
  c.R(0, 1) = 0.3;
  EXPECT_THROW(simulate_dataset(c), std::invalid_argument);
  c = two_region_small();
  c.R(0, 1) = c.R(1, 0) = 1.5;
  EXPECT_THROW(simulate_dataset(c), NumericalError);
  c = two_region_small();
  c.sigma2 = 0.0;
  EXPECT_THROW(simulate_dataset(c), std::invalid_argument);
  c = two_region_small();
  c.L = 28;
  EXPECT_THROW(simulate_dataset(c), std::invalid_argument);
}

TEST(JointCovariance, TrivialCases) {
  ModelConfig c = two_region_small();
  c.J = 1;
  c.mu = c.mu.head(1);
  c.R = MatrixXd::Ones(1, 1);
  c.regions.resize(1);
  c.regions[0].k_gamma_ratio = 0.0;
  c.eta = EtaCovParams{0.0, 0.3, 0.0};
  std::mt19937_64 rng(1);
  const std::vector<Coords> one{sample_voxels(3, 3, rng)};
  EXPECT_TRUE(joint_covariance(c, one, unit_times(4)).isApprox(0.8 * MatrixXd::Identity(12, 12)));

  ModelConfig d = two_region_small();
  d.R(0, 1) = d.R(1, 0) = 0.0;
  const std::vector<Coords> two{sample_voxels(3, 3, rng), sample_voxels(3, 3, rng)};
  const MatrixXd V = joint_covariance(d, two, unit_times(4));
  EXPECT_EQ(V.topRightCorner(12, 12).cwiseAbs().maxCoeff(), 0.0);
}

TEST(JointCovariance, PositiveDefiniteAtScenarioParameters) {
  ModelConfig c = three_region_scenario(1.0, 1.0);
  c.L = 4;
  c.M = 5;
  std::mt19937_64 rng(2);
  std::vector<Coords> coords;
  for (int j = 0; j < 3; ++j) coords.push_back(sample_voxels(7, 4, rng));
  const MatrixXd V = joint_covariance(c, coords, unit_times(5));
  EXPECT_TRUE(V.isApprox(V.transpose()));
  EXPECT_EQ(Eigen::LLT<MatrixXd>(V).info(), Eigen::Success);
}

TEST(Simulate, MatchesJointCovarianceMonteCarlo) {
  const ModelConfig c = two_region_small();
  std::mt19937_64 rng(8);
  const std::vector<Coords> coords{sample_voxels(3, 3, rng), sample_voxels(3, 3, rng)};
  const MatrixXd V = joint_covariance(c, coords, unit_times(c.M));
  const DatasetSampler sampler(c);
  const int reps = 20000;
  const Index N = V.rows();
  MatrixXd acc = MatrixXd::Zero(N, N);
  for (int r = 0; r < reps; ++r) {
    const auto data = sampler.sample_at(static_cast<std::uint64_t>(r), coords);
    VectorXd x(N);
    x << stack_signals(data[0].X).array() - c.mu(0), stack_signals(data[1].X).array() - c.mu(1);
    acc += x * x.transpose();
  }
  acc /= reps;
  int outside = 0;
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      const double se = std::sqrt((V(i, i) * V(j, j) + V(i, j) * V(i, j)) / reps);
      if (std::abs(acc(i, j) - V(i, j)) > 3.0 * se) ++outside;
    }
  // Three-sigma excursions occur for about 0.3% of entries by chance.
  EXPECT_LE(outside, static_cast<int>(0.01 * static_cast<double>(N * N)));
}

TEST(Simulate, LargeWhiteNoiseUsesDiagonalFactor) {
  ModelConfig c = three_region_scenario(1.0, 1.0);
  c.M = 3000;
  c.L = 4;
  c.eta.tau_eta = 60.0;
  for (auto& r : c.regions) r.tau_gamma = 60.0;
  const auto data = simulate_dataset(c, 0);
  EXPECT_EQ(data[2].X.cols(), 3000);
  EXPECT_TRUE(data[2].X.allFinite());
}

}  // namespace
}  // namespace fcreml
