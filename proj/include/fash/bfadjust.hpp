#pragma once

// Bayes-factor based conservative adjustment of the null weight pi_0.
//
// Under the null, a Bayes factor in favor of the alternative has expectation
// one whatever the alternative is. The adjustment therefore looks for the
// smallest cutoff c whose set {BF_j < c} has mean BF at least 1 + epsilon,
// and declares the units below that cutoff null.

#include <cstdint>
#include <vector>

#include "fash/likelihood.hpp"

namespace fash {

struct BfAdjustConfig {
  double epsilon = 0.05;
  // Candidate cutoffs, ascending. Empty selects the default: the sorted unique
  // Bayes factors followed by +infinity.
  std::vector<double> cutoffs;

  void validate() const;
};

struct MuPoint {
  double cutoff;
  double mu;
  double pi0;
};

struct BfAdjustResult {
  std::vector<double> bayes_factors;
  double c_star = 0.0;  // +inf when the all-null fallback applies
  double pi0_adjusted = 1.0;
  std::vector<double> adjusted_weights;
  std::vector<MuPoint> mu_curve;  // candidates with at least one BF below them
};

// log BF_j = log sum_{k>=1} pi*_k exp(L_jk) - L_j0, pi*_k = pi_k / sum_{k'>=1} pi_k'.
std::vector<double> collapse_log_bayes_factors(const LikelihoodMatrix& lik,
                                               const std::vector<double>& weights);

// exp() of the above, clamped to the finite double range.
std::vector<double> collapse_bayes_factors(const LikelihoodMatrix& lik,
                                           const std::vector<double>& weights);

BfAdjustResult adjust_pi0(const std::vector<double>& bayes_factors, const BfAdjustConfig& config,
                          const std::vector<double>& weights);

// Convenience: collapse then adjust.
BfAdjustResult bf_adjust(const LikelihoodMatrix& lik, const std::vector<double>& weights,
                         const BfAdjustConfig& config = {});

// Design shared by simulated null units.
struct UnitTemplate {
  std::vector<double> times;
  std::vector<double> se_choices;  // each observation draws one uniformly
};

// Mean BF over `n_null` units simulated from the null component of `prior`
// (polynomial with N(0, V0) coefficients plus noise), using the prior's
// alternative weights.
double bf_moment_check(std::size_t n_null, const MixturePrior& prior,
                       const UnitTemplate& unit_template, std::uint64_t seed,
                       unsigned threads = 1);

}  // namespace fash
