#include "fcreml/simulator.hpp"
#include "fcreml/stage2.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace fcreml {
namespace {

PairTheta random_pair_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 2.0), r(-0.9, 0.9);
  PairTheta t;
  t.tau_eta = u(rng);
  t.k_eta_ratio = u(rng);
  t.region1 = RegionTheta{u(rng), u(rng), u(rng)};
  t.region2 = RegionTheta{u(rng), u(rng), u(rng)};
  t.rho = r(rng);
  t.nugget_ratio = 0.1 * u(rng);
  return t;
}

RegionData random_region(std::mt19937_64& rng, int L, int M, double mean) {
  std::normal_distribution<double> z;
  RegionData r;
  r.coords = sample_voxels(3, L, rng);
  r.X.resize(L, M);
  for (Index i = 0; i < r.X.size(); ++i) r.X.data()[i] = mean + z(rng);
  return r;
}

// Textbook objective from the assembled covariance, general LU solves and determinants.
double textbook_objective(const PairTheta& t, const PairData& d) {
  const MatrixXd V = assemble(build_pair_cov(t, d.coords1, d.coords2, d.times));
  const Eigen::PartialPivLU<MatrixXd> lu(V);
  const MatrixXd info = d.Z.transpose() * lu.solve(d.Z);
  const VectorXd mu = info.fullPivLu().solve(d.Z.transpose() * lu.solve(d.x));
  const VectorXd r = d.x - d.Z * mu;
  return 0.5 * std::log(V.fullPivLu().determinant()) + 0.5 * std::log(info.determinant()) +
         0.5 * static_cast<double>(d.x.size() - 2) * std::log(r.dot(lu.solve(r)));
}

TEST(PairTheta, VectorRoundTripAndOrder) {
  std::mt19937_64 rng(1);
  const PairTheta t = random_pair_theta(rng);
  const VectorXd v = t.to_vector();
  EXPECT_EQ(v(theta_index::kTauEta), t.tau_eta);
  EXPECT_EQ(v(theta_index::kKEta), t.k_eta_ratio);
  EXPECT_EQ(v(theta_index::kPhi2), t.region2.phi_gamma);
  EXPECT_EQ(v(theta_index::kTauGamma1), t.region1.tau_gamma);
  EXPECT_EQ(v(theta_index::kKGamma2), t.region2.k_gamma_ratio);
  EXPECT_EQ(v(theta_index::kRho), t.rho);
  EXPECT_EQ(v(theta_index::kNugget), t.nugget_ratio);
  EXPECT_EQ(PairTheta::from_vector(v).to_vector(), v);
}

TEST(BuildPairCov, ZeroCorrelationAndNoSharedSignal) {
  std::mt19937_64 rng(2);
  const Coords c1 = sample_voxels(3, 3, rng), c2 = sample_voxels(3, 2, rng);
  const VectorXd times = unit_times(4);
  PairTheta t = random_pair_theta(rng);
  t.rho = 0.0;
  EXPECT_EQ(build_pair_cov(t, c1, c2, times).V12.cwiseAbs().maxCoeff(), 0.0);
  t.rho = 0.5;
  t.k_eta_ratio = 0.0;
  t.nugget_ratio = 0.0;
  const PairBlocks b = build_pair_cov(t, c1, c2, times);
  EXPECT_EQ(b.V12.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(b.V11.isApprox(build_intra_cov(t.region1, c1, times), 1e-15));
  EXPECT_TRUE(b.V22.isApprox(build_intra_cov(t.region2, c2, times), 1e-15));
}

TEST(BuildPairCov, HandAssembledSmallInstance) {
  Coords c1(2, 3), c2(2, 3);
  c1 << 0, 0, 0, 1, 0, 0;
  c2 << 0, 0, 0, 1, 1, 0;
  const VectorXd times = unit_times(2);
  PairTheta t;
  t.tau_eta = 0.3;
  t.k_eta_ratio = 0.8;
  t.nugget_ratio = 0.2;
  t.rho = 0.45;
  t.region1 = RegionTheta{0.7, 1.5, 0.6};
  t.region2 = RegionTheta{1.2, 0.9, 0.4};
  const MatrixXd V = assemble(build_pair_cov(t, c1, c2, times));
  ASSERT_EQ(V.rows(), 8);
  // Entry ((j, l, m), (j', l', m')) written out from the kernels.
  auto coord = [&](int j, int l) { return j == 0 ? Eigen::RowVector3d(c1.row(l)) : Eigen::RowVector3d(c2.row(l)); };
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int ja = a / 4, la = (a % 4) / 2, ma = a % 2;
      const int jb = b / 4, lb = (b % 4) / 2, mb = b % 2;
      const double lag = std::abs(ma - mb);
      const double shared = t.k_eta_ratio * std::exp(-0.5 * t.tau_eta * t.tau_eta * lag * lag) +
                            (ma == mb ? t.nugget_ratio : 0.0);
      double expected = (ja == jb ? 1.0 : t.rho) * shared;
      if (ja == jb) {
        const RegionTheta& r = ja == 0 ? t.region1 : t.region2;
        const double dist = (coord(ja, la) - coord(jb, lb)).norm();
        const double s = std::sqrt(5.0) * r.phi_gamma * dist;
        const double spatial = (1.0 + s + s * s / 3.0) * std::exp(-s);
        const double temporal = std::exp(-0.5 * r.tau_gamma * r.tau_gamma * lag * lag);
        expected += r.k_gamma_ratio * spatial * temporal;
      }
      if (a == b) expected += 1.0;
      EXPECT_NEAR(V(a, b), expected, 1e-14) << a << "," << b;
    }
}

TEST(BuildPairCov, RhoDerivativeIsOffDiagonalShared) {
  std::mt19937_64 rng(3);
  const Coords c1 = sample_voxels(3, 2, rng), c2 = sample_voxels(3, 3, rng);
  const VectorXd times = unit_times(4);
  PairTheta t = random_pair_theta(rng);
  const double h = 1e-6;
  PairTheta tp = t, tm = t;
  tp.rho += h;
  tm.rho -= h;
  const MatrixXd fd = (assemble(build_pair_cov(tp, c1, c2, times)) - assemble(build_pair_cov(tm, c1, c2, times))) / (2 * h);
  const MatrixXd A = build_eta_cov(times, t.eta());
  MatrixXd expected = MatrixXd::Zero(20, 20);
  expected.topRightCorner(8, 12) = kron(MatrixXd::Ones(2, 3), A);
  expected.bottomLeftCorner(12, 8) = kron(MatrixXd::Ones(3, 2), A);
  EXPECT_LE((fd - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PairCovariance, OperationsMatchDense) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const Coords c1 = sample_voxels(3, 4, rng), c2 = sample_voxels(3, 3, rng);
    const VectorXd times = unit_times(5);
    const PairTheta t = random_pair_theta(rng);
    const MatrixXd V = assemble(build_pair_cov(t, c1, c2, times));
    const PairCovariance S(t, c1, c2, times);
    std::normal_distribution<double> z;
    MatrixXd Y(35, 3);
    for (Index i = 0; i < Y.size(); ++i) Y.data()[i] = z(rng);
    const Eigen::PartialPivLU<MatrixXd> lu(V);
    EXPECT_TRUE(S.apply(Y).isApprox(V * Y, 1e-12));
    EXPECT_TRUE(S.solve(Y).isApprox(lu.solve(Y), 1e-10));
    EXPECT_TRUE(S.bilinear(Y, Y).isApprox(Y.transpose() * lu.solve(Y), 1e-10));
    EXPECT_NEAR(S.log_det(), std::log(V.fullPivLu().determinant()), 1e-9);
  }
}

TEST(InterObjective, AllPathsMatchTextbook) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const RegionData a = random_region(rng, 4, 5, 1.0), b = random_region(rng, 4, 5, 10.0);
    const PairData d = make_pair_data(a, b);
    const PairTheta t = random_pair_theta(rng);
    const double ref = textbook_objective(t, d);
    for (auto m : {PairLikelihood::Dense, PairLikelihood::Schur, PairLikelihood::Structured}) {
      EXPECT_NEAR(neg_reml_inter(t, d, m), ref, 1e-8 * std::abs(ref)) << to_string(m);
    }
  }
}

TEST(InterObjective, ZeroCorrelationIsBlockDiagonal) {
  std::mt19937_64 rng(6);
  const RegionData a = random_region(rng, 3, 6, 0.0), b = random_region(rng, 2, 6, 5.0);
  const PairData d = make_pair_data(a, b);
  PairTheta t = random_pair_theta(rng);
  t.rho = 0.0;
  const PairBlocks blocks = build_pair_cov(t, d.coords1, d.coords2, d.times);
  // Block-diagonal evaluation assembled from each region's own factorization.
  const Eigen::PartialPivLU<MatrixXd> l1(blocks.V11), l2(blocks.V22);
  const Index n1 = blocks.V11.rows();
  auto vinv = [&](const MatrixXd& y) {
    MatrixXd out(y.rows(), y.cols());
    out.topRows(n1) = l1.solve(y.topRows(n1));
    out.bottomRows(y.rows() - n1) = l2.solve(y.bottomRows(y.rows() - n1));
    return out;
  };
  const double log_det = std::log(blocks.V11.determinant()) + std::log(blocks.V22.determinant());
  const MatrixXd info = d.Z.transpose() * vinv(d.Z);
  const VectorXd mu = info.inverse() * (d.Z.transpose() * vinv(d.x));
  const VectorXd r = d.x - d.Z * mu;
  const double ref = 0.5 * log_det + 0.5 * std::log(info.determinant()) +
                     0.5 * static_cast<double>(d.x.size() - 2) * std::log(r.dot(vinv(r).col(0)));
  EXPECT_NEAR(neg_reml_inter(t, d), ref, 1e-8 * std::abs(ref));
  EXPECT_NEAR(evaluate_inter(t, d).log_det_v, log_det, 1e-9 * std::abs(log_det));
}

TEST(InterObjective, SymmetricUnderRegionSwap) {
  std::mt19937_64 rng(7);
  const RegionData a = random_region(rng, 3, 7, 1.0), b = random_region(rng, 5, 7, -2.0);
  const PairTheta t = random_pair_theta(rng);
  PairTheta swapped = t;
  std::swap(swapped.region1, swapped.region2);
  const double x = neg_reml_inter(t, make_pair_data(a, b));
  const double y = neg_reml_inter(swapped, make_pair_data(b, a));
  EXPECT_NEAR(x, y, 1e-10 * std::abs(x));
}

TEST(GlsMu, IdentityCovarianceGivesRegionMeans) {
  std::mt19937_64 rng(8);
  const RegionData a = random_region(rng, 3, 6, 1.0), b = random_region(rng, 4, 6, 10.0);
  const PairData d = make_pair_data(a, b);
  PairTheta t;
  t.region1.k_gamma_ratio = t.region2.k_gamma_ratio = 0.0;
  t.k_eta_ratio = t.nugget_ratio = 0.0;
  t.rho = 0.3;
  const VectorXd mu = gls_mu(t, d);
  EXPECT_NEAR(mu(0), a.X.mean(), 1e-9);
  EXPECT_NEAR(mu(1), b.X.mean(), 1e-9);
}

TEST(GlsMu, MatchesDenseAndShiftsWithData) {
  std::mt19937_64 rng(9);
  const RegionData a = random_region(rng, 3, 6, 1.0), b = random_region(rng, 4, 6, 10.0);
  const PairData d = make_pair_data(a, b);
  const PairTheta t = random_pair_theta(rng);
  const MatrixXd V = assemble(build_pair_cov(t, d.coords1, d.coords2, d.times));
  const Eigen::PartialPivLU<MatrixXd> lu(V);
  const VectorXd ref = (d.Z.transpose() * lu.solve(d.Z)).inverse() * (d.Z.transpose() * lu.solve(d.x));
  const VectorXd mu = gls_mu(t, d);
  EXPECT_LE((mu - ref).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  RegionData shifted = a;
  shifted.X.array() += 3.25;
  const VectorXd mu2 = gls_mu(t, make_pair_data(shifted, b));
  EXPECT_NEAR(mu2(0) - mu(0), 3.25, 1e-9);
  EXPECT_NEAR(mu2(1), mu(1), 1e-9);
}

TEST(ProfileSigma2Inter, IdentityAndScale) {
  std::mt19937_64 rng(10);
  RegionData a = random_region(rng, 3, 6, 1.0), b = random_region(rng, 2, 6, 4.0);
  const double ma = a.X.mean(), mb = b.X.mean();
  const double rss = (a.X.array() - ma).square().sum() + (b.X.array() - mb).square().sum();
  const double s = std::sqrt(28.0 / rss);
  a.X = ((a.X.array() - ma) * s + ma).matrix();
  b.X = ((b.X.array() - mb) * s + mb).matrix();
  PairTheta white;
  white.region1.k_gamma_ratio = white.region2.k_gamma_ratio = 0.0;
  white.k_eta_ratio = white.nugget_ratio = 0.0;
  // Zero factors sit at the eigenvalue floor, which perturbs V = I at the 1e-10 level.
  EXPECT_NEAR(profile_sigma2_inter(white, make_pair_data(a, b)), 1.0, 1e-9);

  const PairTheta t = random_pair_theta(rng);
  const double s1 = profile_sigma2_inter(t, make_pair_data(a, b));
  RegionData a2 = a, b2 = b;
  a2.X *= -2.0;
  b2.X *= -2.0;
  EXPECT_NEAR(profile_sigma2_inter(t, make_pair_data(a2, b2)), 4.0 * s1, 1e-9 * s1);
}

TEST(FitPair, FixedModeOnlyMovesSharedParameters) {
  const auto data = simulate_dataset(preset_config("paper-s4"), 3);
  Stage1Options o1;
  o1.K = 45;
  const Stage1Fit f1 = fit_region(data[1], o1), f2 = fit_region(data[2], o1);
  Stage2Options o2;
  o2.mode = Stage2Mode::Fixed;
  const Stage2Fit g = fit_pair(data[1], data[2], f1, f2, o2);
  EXPECT_EQ(g.theta.region1.phi_gamma, f1.theta.phi_gamma);
  EXPECT_EQ(g.theta.region2.k_gamma_ratio, f2.theta.k_gamma_ratio);
  EXPECT_LE(g.objective, g.initial_objective);
  for (size_t i = 1; i < g.accepted.size(); ++i) EXPECT_LE(g.accepted[i], g.accepted[i - 1]);
  EXPECT_GT(g.sigma2_hat, 0.0);
  EXPECT_LT(std::abs(g.theta.rho), 1.0);
}

TEST(FitPair, InitialisationRules) {
  Stage1Fit f1, f2;
  f1.nu_hat = VectorXd::LinSpaced(10, 0.0, 9.0);
  f2.nu_hat = 2.0 * f1.nu_hat;
  f1.sigma2_hat = 1.0;
  f2.sigma2_hat = 3.0;
  const PairTheta t = initial_pair_theta(f1, f2, Stage2Options{});
  EXPECT_EQ(t.rho, 0.95);
  EXPECT_EQ(t.tau_eta, 0.25);
  EXPECT_EQ(t.nugget_ratio, 0.1);
  // Spreads 8.25 and 33 around their means, averaged, over the averaged noise variance 2.
  EXPECT_NEAR(t.k_eta_ratio, 0.5 * (8.25 + 33.0) / 2.0, 1e-12);
  f2.nu_hat = -f1.nu_hat;
  EXPECT_EQ(initial_pair_theta(f1, f2, Stage2Options{}).rho, -0.95);
  f2.nu_hat.setZero();
  EXPECT_THROW(initial_pair_theta(f1, f2, Stage2Options{}), std::invalid_argument);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TEST(FitPairSimulation, ZeroCorrelationIsUnbiased) {
  ModelConfig c = preset_config("paper-s4");
  c.J = 2;
  c.mu = c.mu.head(2).eval();
  c.R = MatrixXd::Identity(2, 2);
  c.regions.resize(2);
  c.seed = 303;
  const DatasetSampler sampler(c);
  Stage1Options o1;
  o1.K = 45;
  std::vector<double> rho, s2;
  for (int r = 0; r < 50; ++r) {
    const auto d = sampler.sample(static_cast<std::uint64_t>(r));
    const Stage2Fit g = fit_pair(d[0], d[1], fit_region(d[0], o1), fit_region(d[1], o1));
    rho.push_back(g.theta.rho);
    s2.push_back(g.sigma2_hat);
  }
  double mean = 0.0;
  for (double x : rho) mean += x / 50.0;
  EXPECT_NEAR(mean, 0.0, 0.06);
  EXPECT_NEAR(median(s2), 1.0, 0.15);
}

TEST(FitPairSimulation, SelfPairIsNearOne) {
  // One region's latent signal observed twice with independent measurement noise.
  ModelConfig c = preset_config("paper-s4");
  c.J = 1;
  c.mu = c.mu.head(1).eval();
  c.R = MatrixXd::Ones(1, 1);
  c.regions.resize(1);
  // Parameters are ratios to the noise variance; shrink the noise, keep the latent scale.
  const double shrink = 1e-6;
  c.sigma2 = shrink;
  c.eta.k_eta_ratio /= shrink;
  c.eta.nugget_ratio /= shrink;
  c.regions[0].k_gamma_ratio /= shrink;
  c.seed = 404;
  Stage1Options o1;
  o1.K = 45;
  for (int r = 0; r < 3; ++r) {
    const RegionData latent = simulate_dataset(c, static_cast<std::uint64_t>(r))[0];
    Rng noise(c.seed + 1, static_cast<std::uint64_t>(r));
    RegionData a = latent, b = latent;
    a.X += noise.normal_matrix(a.X.rows(), a.X.cols());
    b.X += noise.normal_matrix(b.X.rows(), b.X.cols());
    const Stage2Fit g = fit_pair(a, b, fit_region(a, o1), fit_region(b, o1));
    EXPECT_GE(g.theta.rho, 0.9) << "replicate " << r;
  }
}

}  // namespace
}  // namespace fcreml
