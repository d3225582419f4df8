#pragma once

// End-to-end orchestration shared by the CLI, the simulation harness and the
// Python bindings.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fash/bfadjust.hpp"
#include "fash/ebayes.hpp"
#include "fash/likelihood.hpp"
#include "fash/posterior.hpp"

namespace fash {

struct FitConfig {
  int order = 1;
  int grid_size = 51;
  double qmax = 10.0;
  std::vector<double> sigma_list;  // explicit positive sigmas; overrides grid_size/qmax
  double null_lambda = 1.0;        // Dirichlet penalty on pi_0 (10 for the penalized variant)
  bool bf_adjust = true;
  double epsilon = 0.05;
  std::vector<double> cutoffs;     // empty: sorted unique BFs plus +inf
  double diffuse_variance = 0.0;   // <= 0: default_diffuse_variance(data)
  double tol = 1e-8;
  int max_iter = 5000;
  unsigned threads = 1;
};

struct FitOutput {
  MixturePrior prior_mle;  // EM weights
  MixturePrior prior;      // weights used downstream (adjusted unless disabled)
  LikelihoodMatrix lik;
  FitResult em;
  std::optional<BfAdjustResult> adjustment;
};

std::vector<double> sigma_grid_for(const FitConfig& config);

FitOutput fit_prior(const Dataset& data, const FitConfig& config);

}  // namespace fash
