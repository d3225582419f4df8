#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fash/errors.hpp"
#include "fash/lgp.hpp"
#include "oracles.hpp"

using namespace fash;

TEST(IwpCovariance, MatchesQuadrature) {
  const double times[] = {0.0, 0.3, 1.0, 2.5, 7.0, 15.0};
  for (int p : {1, 2, 3})
    for (double s : times)
      for (double t : times) {
        const double want = oracle::covariance(p, 0.7, s, t);
        EXPECT_NEAR(iwp_covariance(p, 0.7, s, t), want, 1e-10 * std::max(1.0, std::abs(want)))
            << "p=" << p << " s=" << s << " t=" << t;
      }
}

TEST(IwpCovariance, BrownianMotionIsMin) {
  EXPECT_DOUBLE_EQ(iwp_covariance(1, 2.0, 3.0, 5.0), 4.0 * 3.0);
  EXPECT_DOUBLE_EQ(iwp_covariance(1, 1.0, 0.0, 5.0), 0.0);
}

TEST(IwpCovariance, OnceIntegratedClosedForm) {
  // m^2 M / 2 - m^3 / 6
  const double s = 2.0, t = 5.0;
  EXPECT_NEAR(iwp_covariance(2, 1.0, s, t), s * s * t / 2 - s * s * s / 6, 1e-12);
  EXPECT_NEAR(iwp_covariance(2, 1.0, t, s), s * s * t / 2 - s * s * s / 6, 1e-12);
}

TEST(IwpCovariance, ZeroSigmaIsZero) { EXPECT_EQ(iwp_covariance(2, 0.0, 1.0, 2.0), 0.0); }

TEST(IwpCovariance, RejectsBadInput) {
  EXPECT_THROW(iwp_covariance(0, 1.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(iwp_covariance(1, -1.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(iwp_covariance(1, 1.0, -1.0, 1.0), InvalidArgument);
}

TEST(Psd, EqualsSqrtOfVarianceFromZeroState) {
  for (int p : {1, 2, 3})
    for (double h : {0.5, 1.0, 4.0, 16.0}) {
      const double want = std::sqrt(oracle::covariance(p, 1.3, h, h));
      EXPECT_NEAR(psd(p, 1.3, h), want, 1e-10 * want);
    }
}

TEST(Psd, InverseRoundTrip) {
  for (int p : {1, 2, 3})
    for (double target : {1e-3, 0.2, 5.0}) {
      const double s = psd_to_sigma(p, 16.0, target);
      EXPECT_NEAR(psd(p, s, 16.0), target, 1e-13 * target);
    }
  EXPECT_EQ(psd_to_sigma(2, 16.0, 0.0), 0.0);
}

TEST(Psd, ScalesLinearlyInSigma) {
  EXPECT_NEAR(psd(2, 3.0, 4.0), 3.0 * psd(2, 1.0, 4.0), 1e-14);
}

TEST(Transition, MatchesTaylorAndCovariance) {
  const double d = 0.8;
  const auto st = transition(2, d);
  EXPECT_DOUBLE_EQ(st.A(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(st.A(0, 1), d);
  EXPECT_DOUBLE_EQ(st.A(1, 0), 0.0);
  EXPECT_NEAR(st.q_unit(0, 0), d * d * d / 3, 1e-15);
  EXPECT_NEAR(st.q_unit(0, 1), d * d / 2, 1e-15);
  EXPECT_NEAR(st.q_unit(1, 1), d, 1e-15);
  // Position block of Q is the variance of the process started at zero.
  for (int p : {1, 2, 3}) {
    const auto s = transition(p, 2.0);
    EXPECT_NEAR(s.q_unit(0, 0), oracle::covariance(p, 1.0, 2.0, 2.0), 1e-10);
    EXPECT_TRUE(s.q_unit.isApprox(s.q_unit.transpose()));
  }
  EXPECT_THROW(transition(2, 0.0), InvalidArgument);
}

TEST(Gram, IsCovarianceMatrix) {
  const std::vector<double> t{0.5, 1.0, 3.0, 4.0};
  const auto g = iwp_gram(2, 0.5, t);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(g(i, j), iwp_covariance(2, 0.5, t[i], t[j]), 1e-14);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(PriorPaths, EmpiricalCovarianceMatchesKernel) {
  const std::vector<double> grid{0.0, 1.0, 2.0, 5.0};
  const std::size_t n = 20000;
  const auto paths = sample_prior_paths({2, 1.0}, grid, n, 11);
  ASSERT_EQ(paths.size(), n);
  for (const auto& p : paths) EXPECT_EQ(p[0], 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i)
    for (std::size_t j = i; j < grid.size(); ++j) {
      double acc = 0.0;
      for (const auto& p : paths) acc += p[i] * p[j];
      const double cov = acc / n;
      const double want = iwp_covariance(2, 1.0, grid[i], grid[j]);
      const double se = std::sqrt((want * want + iwp_covariance(2, 1.0, grid[i], grid[i]) *
                                                     iwp_covariance(2, 1.0, grid[j], grid[j])) / n);
      EXPECT_NEAR(cov, want, 4.5 * se) << grid[i] << "," << grid[j];
    }
}

TEST(PriorPaths, SeedDeterminesPaths) {
  const std::vector<double> grid{0.5, 1.0, 2.0};
  EXPECT_EQ(sample_prior_paths({1, 1.0}, grid, 5, 3), sample_prior_paths({1, 1.0}, grid, 5, 3));
  EXPECT_NE(sample_prior_paths({1, 1.0}, grid, 5, 3), sample_prior_paths({1, 1.0}, grid, 5, 4));
}

TEST(PriorPaths, ZeroSigmaGivesZeroPaths) {
  const std::vector<double> grid{0.5, 1.0, 2.0};
  for (const auto& p : sample_prior_paths({2, 0.0}, grid, 3, 1))
    for (double v : p) EXPECT_EQ(v, 0.0);
}

TEST(PriorPaths, RejectsUnsortedGrid) {
  const std::vector<double> grid{1.0, 0.5};
  EXPECT_THROW(sample_prior_paths({1, 1.0}, grid, 2, 1), InvalidArgument);
}
