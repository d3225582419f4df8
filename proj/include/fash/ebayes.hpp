#pragma once

#include <vector>

#include "fash/likelihood.hpp"

namespace fash {

// Dirichlet penalty h(pi) = prod_k pi_k^(lambda_k - 1); all lambda_k >= 1.
struct PenaltyConfig {
  std::vector<double> lambda;

  static PenaltyConfig flat(std::size_t components);
  // lambda_0 = null_lambda, lambda_k = 1 otherwise.
  static PenaltyConfig null_biased(std::size_t components, double null_lambda);

  void validate(std::size_t components) const;
};

struct FitResult {
  std::vector<double> weights;
  std::vector<double> objective_trace;  // penalized log-likelihood after each iterate
  int iterations = 0;
  bool converged = false;
};

// sigma_0 = 0 followed by `count` values whose one-unit PSD satisfies
// -2 log psd_k(1) equally spaced on [0, qmax], ordered small to large.
std::vector<double> default_grid(int order, int count = 51, double qmax = 10.0);

// sum_j log(sum_k pi_k exp(L_jk)) + sum_k (lambda_k - 1) log pi_k, on the
// row-shifted scale of L.
double penalized_objective(const std::vector<double>& weights, const LikelihoodMatrix& lik,
                           const PenaltyConfig& penalty);

// One EM step: pi_k' proportional to sum_j resp_jk + lambda_k - 1.
std::vector<double> em_update(const std::vector<double>& weights, const LikelihoodMatrix& lik,
                              const PenaltyConfig& penalty);

// EM from uniform weights; stops when successive objectives differ by less
// than tol * (number of rows). Non-convergence is reported, not thrown.
FitResult fit_weights(const LikelihoodMatrix& lik, const PenaltyConfig& penalty,
                      double tol = 1e-8, int max_iter = 5000);

}  // namespace fash
