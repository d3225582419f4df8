#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fash/functional.hpp"
#include "fash/likelihood.hpp"

namespace fash {

// Posterior weights below this are dropped from smoothing and sampling, and
// the remaining weights renormalized. lfdr always uses the exact weights.
inline constexpr double kPosteriorSparsityFloor = 1e-10;

// pi~_k = pi_k exp(L_k) / sum_k' pi_k' exp(L_k'), evaluated in log space.
std::vector<double> posterior_weights(std::span<const double> loglik_row,
                                      std::span<const double> prior_weights);

// lfdr(j) = pi~_j0 for every row of the likelihood matrix.
std::vector<double> lfdr_values(const LikelihoodMatrix& lik, std::span<const double> prior_weights);

struct PosteriorMixture {
  std::string unit_id;
  int order = 1;
  double diffuse_variance = 1e6;
  std::vector<double> sigma_grid;
  std::vector<double> weights;               // exact pi~ over all components
  std::vector<std::size_t> active;           // components at or above the floor
  std::vector<double> active_weights;        // renormalized over `active`

  double lfdr() const { return weights.front(); }
};

PosteriorMixture posterior_mixture(const ObservationUnit& unit, const MixturePrior& prior,
                                   std::span<const double> loglik_row);

// Computes the likelihood row itself.
PosteriorMixture posterior_mixture(const ObservationUnit& unit, const MixturePrior& prior);

// Cumulative FDR / FSR from local rates.
struct FdrCurve {
  std::vector<std::size_t> order;     // indices sorted by ascending local rate (stable)
  std::vector<double> cumulative;     // running mean along `order`
  std::vector<double> by_unit;        // cumulative value at each index's rank

  // Size of the largest prefix whose running mean is <= alpha.
  std::size_t num_selected(double alpha) const;
  std::vector<bool> decisions(double alpha) const;
};

FdrCurve fdr_curve(std::span<const double> local_rates);

struct ComponentCurve {
  std::size_t component = 0;
  double sigma = 0.0;
  double weight = 0.0;
  std::vector<double> mean;
  std::vector<double> sd;
};

struct SmoothResult {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<ComponentCurve> components;
};

// Pointwise posterior summary; bands are exact mixture-of-normal quantiles.
// `deriv` selects beta (0), beta' (1), ... up to order - 1.
SmoothResult smooth(const ObservationUnit& unit, const PosteriorMixture& posterior,
                    std::span<const double> query, double level = 0.95, int deriv = 0);

// Quantile of sum_k w_k N(m_k, s_k^2), solved by bisection to 1e-10 relative.
double mixture_quantile(std::span<const double> weights, std::span<const double> means,
                        std::span<const double> sds, double prob);

struct PathSample {
  std::vector<double> grid;
  std::size_t count = 0;
  std::vector<double> values;  // count x grid.size(), row-major

  std::span<const double> path(std::size_t m) const {
    return {values.data() + m * grid.size(), grid.size()};
  }
};

// M joint posterior paths. The random stream is derived from (seed, unit id),
// so results do not depend on which thread or in which order units are drawn.
PathSample sample_posterior(const ObservationUnit& unit, const PosteriorMixture& posterior,
                            std::size_t count, std::span<const double> query,
                            std::uint64_t seed);

struct LfsrResult {
  double lfsr = 0.0;
  double mc_se = 0.0;  // sqrt(lfsr (1 - lfsr) / M), at most 0.5 / sqrt(M)
};

LfsrResult lfsr_functional(const PathSample& paths, const FunctionalSpec& functional);

// Query grid used for functionals: observed times, with `refine - 1` equally
// spaced points inserted between consecutive observations.
std::vector<double> functional_grid(const ObservationUnit& unit, int refine = 1);

struct TestOptions {
  std::size_t samples = 3000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  int refine = 1;
  unsigned threads = 1;
};

struct TestTable {
  std::vector<std::string> unit_ids;
  std::vector<double> lfdr;
  FdrCurve fdr;
  std::vector<std::string> functional_names;
  std::vector<std::vector<double>> lfsr;     // [functional][unit]
  std::vector<std::vector<double>> lfsr_se;  // [functional][unit]
  std::vector<FdrCurve> fsr;                 // [functional]
  double alpha = 0.05;
};

// lfdr for every unit plus lfsr for each functional (shared paths per unit).
TestTable build_test_table(const Dataset& data, const MixturePrior& prior,
                           const LikelihoodMatrix& lik,
                           const std::vector<FunctionalSpec>& functionals,
                           const TestOptions& options);

}  // namespace fash
