#pragma once

// Reading summary statistics and writing every result artifact. Reals are
// written with 17 significant digits so that files round-trip exactly.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fash/bfadjust.hpp"
#include "fash/likelihood.hpp"
#include "fash/pipeline.hpp"
#include "fash/posterior.hpp"
#include "fash/simulate.hpp"

namespace fash {

struct LongRecord {
  std::string unit;
  double t = 0.0;
  double beta_hat = 0.0;
  double se = 1.0;
  std::optional<double> df;
  std::size_t line = 0;  // 1-based line in the source file
};

// Header `unit,t,beta_hat,se[,df]`. Throws DataError with the line number
// for malformed rows, nonpositive se, df <= 2 or a duplicated (unit, t).
std::vector<LongRecord> read_long_records(const std::filesystem::path& path);

// Groups by unit (first-appearance order) and sorts each unit by t. When a
// record carries df and `apply_t_adjust` is set, se is replaced by adjust_se.
Dataset group_records(const std::vector<LongRecord>& records, bool apply_t_adjust = true);

Dataset read_long_csv(const std::filesystem::path& path, bool apply_t_adjust = true);

// s~ with Phi(|b|/s~) = P(T_nu <= |b|/se); the analytic limit
// se * phi(0) / f_nu(0) when |b/se| < 1e-8. Throws InvalidArgument if nu <= 2
// or se <= 0, NumericFailure if the tail probability underflows.
double adjust_se(double beta_hat, double se, double nu);

std::string format_real(double x);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
void write_truth_csv(const std::filesystem::path& path, const Dataset& data,
                     const GroundTruth& truth);
void write_test_table_csv(const std::filesystem::path& path, const TestTable& table);
void write_smooth_csv(const std::filesystem::path& path, const SmoothResult& result);
void write_components_csv(const std::filesystem::path& path, const SmoothResult& result);
void write_mu_curve_csv(const std::filesystem::path& path, const BfAdjustResult& result);
void write_pi0_sweep_csv(const std::filesystem::path& path, const std::vector<Pi0Row>& rows);
void write_calibration_csv(const std::filesystem::path& path,
                           const std::vector<CalibrationRow>& rows);

// Log-likelihood cache: unit,row_offset,l0..lK.
void write_loglik_cache(const std::filesystem::path& path, const LikelihoodMatrix& lik);
LikelihoodMatrix read_loglik_cache(const std::filesystem::path& path);

struct StoredPrior {
  MixturePrior prior_mle;
  MixturePrior prior;
  bool adjusted = false;
  double c_star = 0.0;
};

void write_prior_json(const std::filesystem::path& path, const FitOutput& fit);
StoredPrior read_prior_json(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  // As given, in order. Thread count is left out so the manifest does not
  // depend on it.
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<double> sigma_grid;
  std::vector<std::string> outputs;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

const char* library_version();

}  // namespace fash
