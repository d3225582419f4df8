#pragma once

// Calibration study: non-dynamic (A), linear-dynamic (B) and nonlinear-dynamic
// (C) effect functions observed with noise, used to check the null-proportion
// estimates and the FDR / power of the testing pipeline.

#include <cstdint>
#include <string>
#include <vector>

#include "fash/likelihood.hpp"
#include "fash/pipeline.hpp"

namespace fash {

enum class Category { A, B, C };

char category_label(Category c);

struct SimulationConfig {
  std::size_t units = 1000;
  double rho = 0.2;
  std::vector<double> times = default_times();
  std::vector<double> se_choices{0.1, 0.3, 0.5};
  // Category C: IWP_2 with this PSD at this horizon.
  double nonlinear_psd = 5.0;
  double nonlinear_horizon = 16.0;
  std::uint64_t seed = 1;

  static std::vector<double> default_times();  // 0, 1, ..., 15
  void validate() const;
};

struct CategoryCounts {
  std::size_t a = 0, b = 0, c = 0;
};

// A = round(J (1 - rho)), B = round(J rho / 2), C = J - A - B.
CategoryCounts category_counts(std::size_t units, double rho);

struct GroundTruth {
  std::vector<Category> category;
  std::vector<std::vector<double>> beta;  // true effect on the time grid

  // Null under the order-p test: constant (p = 1) or linear (p = 2) truth.
  bool is_null(std::size_t j, int order) const;
  double null_fraction(int order) const;
};

struct SimulatedData {
  Dataset data;
  GroundTruth truth;
};

SimulatedData generate_dataset(const SimulationConfig& config);

struct StudyOptions {
  std::size_t units = 1000;
  int replicates = 20;
  int grid_size = 51;
  double qmax = 10.0;
  double epsilon = 0.05;
  std::vector<int> orders{1, 2};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct Pi0Row {
  double rho;
  int replicate;
  int order;
  double true_pi0;
  double pi0_mle;
  double pi0_adjusted;
};

std::vector<Pi0Row> run_pi0_sweep(const std::vector<double>& rho_grid, const StudyOptions& options);

struct CalibrationRow {
  double rho;
  double alpha;
  int order;
  std::string pipeline;  // "mle" or "bf_adjusted"
  int replicates;
  double empirical_fdr;  // mean over replicates of false / max(1, discoveries)
  double power;          // mean over replicates of true discoveries / alternatives
};

std::vector<CalibrationRow> run_calibration(double rho, const std::vector<double>& alpha_grid,
                                            const StudyOptions& options);

}  // namespace fash
