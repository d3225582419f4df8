#include <cmath>

#include <gtest/gtest.h>

#include "fash/errors.hpp"
#include "fash/simulate.hpp"

using namespace fash;

TEST(CategoryCounts, RoundingAndTotals) {
  const auto c = category_counts(1000, 0.2);
  EXPECT_EQ(c.a, 800u);
  EXPECT_EQ(c.b, 100u);
  EXPECT_EQ(c.c, 100u);
  for (double rho : {0.0, 0.05, 0.35, 0.5, 1.0})
    for (std::size_t j : {1u, 7u, 999u}) {
      const auto k = category_counts(j, rho);
      EXPECT_EQ(k.a + k.b + k.c, j);
    }
}

TEST(Simulate, ShapesAndTruth) {
  SimulationConfig cfg;
  cfg.units = 50;
  cfg.rho = 0.4;
  const auto sim = generate_dataset(cfg);
  ASSERT_EQ(sim.data.size(), 50u);
  const auto counts = category_counts(50, 0.4);
  std::size_t a = 0, b = 0;
  for (std::size_t j = 0; j < 50; ++j) {
    const auto& u = sim.data[j];
    EXPECT_EQ(u.times, SimulationConfig::default_times());
    EXPECT_NO_THROW(u.validate());
    for (double s : u.se) EXPECT_TRUE(s == 0.1 || s == 0.3 || s == 0.5);
    const auto& beta = sim.truth.beta[j];
    switch (sim.truth.category[j]) {
      case Category::A:
        ++a;
        for (double v : beta) EXPECT_DOUBLE_EQ(v, beta[0]);
        break;
      case Category::B: {
        ++b;
        const double slope = beta[1] - beta[0];
        for (std::size_t r = 2; r < beta.size(); ++r) EXPECT_NEAR(beta[r] - beta[r - 1], slope, 1e-12);
        break;
      }
      case Category::C:
        break;
    }
  }
  EXPECT_EQ(a, counts.a);
  EXPECT_EQ(b, counts.b);
  EXPECT_DOUBLE_EQ(sim.truth.null_fraction(1), static_cast<double>(counts.a) / 50);
  EXPECT_DOUBLE_EQ(sim.truth.null_fraction(2), static_cast<double>(counts.a + counts.b) / 50);
}

TEST(Simulate, NonlinearUnitsDeviateFromLines) {
  SimulationConfig cfg;
  cfg.units = 400;
  cfg.rho = 1.0;
  const auto sim = generate_dataset(cfg);
  double curvature = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < sim.data.size(); ++j) {
    if (sim.truth.category[j] != Category::C) continue;
    const auto& b = sim.truth.beta[j];
    for (std::size_t r = 1; r + 1 < b.size(); ++r) curvature += std::abs(b[r + 1] - 2 * b[r] + b[r - 1]);
    ++n;
  }
  EXPECT_EQ(n, 200u);
  EXPECT_GT(curvature / n, 0.1);
}

TEST(Simulate, SeedReproducibility) {
  SimulationConfig cfg;
  cfg.units = 20;
  const auto a = generate_dataset(cfg);
  const auto b = generate_dataset(cfg);
  cfg.seed = 2;
  const auto c = generate_dataset(cfg);
  for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(a.data[j].beta_hat, b.data[j].beta_hat);
  EXPECT_NE(a.data[0].beta_hat, c.data[0].beta_hat);
}

TEST(Simulate, Validation) {
  SimulationConfig cfg;
  cfg.rho = 1.5;
  EXPECT_THROW(generate_dataset(cfg), InvalidArgument);
  cfg.rho = 0.2;
  cfg.units = 0;
  EXPECT_THROW(generate_dataset(cfg), InvalidArgument);
  cfg.units = 5;
  cfg.se_choices = {};
  EXPECT_THROW(generate_dataset(cfg), InvalidArgument);
}

TEST(Studies, SmallCalibrationIsDeterministicAndThreadFree) {
  StudyOptions opt;
  opt.units = 150;
  opt.replicates = 2;
  opt.grid_size = 11;
  const auto a = run_calibration(0.2, {0.05, 0.2}, opt);
  opt.threads = 3;
  const auto b = run_calibration(0.2, {0.05, 0.2}, opt);
  ASSERT_EQ(a.size(), 2u * 2u * 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].empirical_fdr, b[i].empirical_fdr);
    EXPECT_EQ(a[i].power, b[i].power);
    EXPECT_GE(a[i].power, 0.0);
    EXPECT_LE(a[i].power, 1.0);
  }
}

TEST(Studies, SweepRows) {
  StudyOptions opt;
  opt.units = 100;
  opt.replicates = 2;
  opt.grid_size = 11;
  const auto rows = run_pi0_sweep({0.1, 0.3}, opt);
  ASSERT_EQ(rows.size(), 2u * 2u * 2u);
  for (const auto& r : rows) {
    EXPECT_GE(r.pi0_adjusted, 0.0);
    EXPECT_LE(r.pi0_adjusted, 1.0);
    EXPECT_NEAR(r.true_pi0, r.order == 1 ? 1.0 - r.rho : 1.0 - r.rho / 2, 0.011);
  }
}
