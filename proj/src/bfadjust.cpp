#include "fash/bfadjust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fash/errors.hpp"
#include "fash/parallel.hpp"
#include "fash/rng.hpp"
#include "linalg.hpp"

namespace fash {

void BfAdjustConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be positive");
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (!(cutoffs[i] > 0.0)) throw InvalidArgument("cutoffs must be positive");
    if (i > 0 && !(cutoffs[i] > cutoffs[i - 1]))
      throw InvalidArgument("cutoffs must be sorted ascending without duplicates");
  }
}

namespace {

std::vector<double> alternative_weights(const std::vector<double>& weights) {
  if (weights.size() < 2) throw InvalidArgument("weights need a null and at least one alternative");
  double alt = 0.0;
  for (std::size_t k = 1; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0)) throw InvalidArgument("weights must be nonnegative");
    alt += weights[k];
  }
  if (!(alt > 0.0))
    throw InvalidArgument(
        "no alternative mass (pi_0 = 1); supply normalized alternative weights instead");
  std::vector<double> star(weights.size(), 0.0);
  for (std::size_t k = 1; k < weights.size(); ++k) star[k] = weights[k] / alt;
  return star;
}

}  // namespace

std::vector<double> collapse_log_bayes_factors(const LikelihoodMatrix& lik,
                                               const std::vector<double>& weights) {
  if (static_cast<Eigen::Index>(weights.size()) != lik.cols())
    throw InvalidArgument("weights length does not match likelihood matrix columns");
  const auto star = alternative_weights(weights);
  std::vector<double> log_star(star.size());
  for (std::size_t k = 0; k < star.size(); ++k)
    log_star[k] = star[k] > 0.0 ? std::log(star[k]) : -std::numeric_limits<double>::infinity();

  std::vector<double> out(static_cast<std::size_t>(lik.rows()));
  std::vector<double> buf(star.size() - 1);
  for (Eigen::Index j = 0; j < lik.rows(); ++j) {
    for (std::size_t k = 1; k < star.size(); ++k)
      buf[k - 1] = lik.loglik(j, static_cast<Eigen::Index>(k)) + log_star[k];
    const double alt = detail::log_sum_exp(buf.data(), buf.size());
    const double null = lik.loglik(j, 0);
    if (!std::isfinite(null))
      throw NumericFailure("null likelihood is zero for unit '" +
                           (lik.unit_ids.empty() ? std::to_string(j) : lik.unit_ids[j]) + "'");
    out[static_cast<std::size_t>(j)] = alt - null;
  }
  return out;
}

std::vector<double> collapse_bayes_factors(const LikelihoodMatrix& lik,
                                           const std::vector<double>& weights) {
  auto out = collapse_log_bayes_factors(lik, weights);
  const double hi = std::log(std::numeric_limits<double>::max());
  for (double& v : out) v = v >= hi ? std::numeric_limits<double>::max() : std::exp(v);
  return out;
}

BfAdjustResult adjust_pi0(const std::vector<double>& bayes_factors, const BfAdjustConfig& config,
                          const std::vector<double>& weights) {
  config.validate();
  if (bayes_factors.empty()) throw InvalidArgument("no Bayes factors supplied");
  for (double b : bayes_factors)
    if (!(b >= 0.0) || !std::isfinite(b))
      throw InvalidArgument("Bayes factors must be finite and nonnegative");
  const auto star = alternative_weights(weights);

  std::vector<double> sorted = bayes_factors;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];

  std::vector<double> candidates = config.cutoffs;
  if (candidates.empty()) {
    std::unique_copy(sorted.begin(), sorted.end(), std::back_inserter(candidates));
    candidates.push_back(std::numeric_limits<double>::infinity());
  }

  const double j_total = static_cast<double>(sorted.size());
  BfAdjustResult out;
  out.bayes_factors = bayes_factors;
  out.c_star = std::numeric_limits<double>::infinity();
  out.pi0_adjusted = 1.0;
  bool found = false;
  for (double c : candidates) {
    // J0(c) = #{BF_j < c}
    const auto j0 = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
    if (j0 == 0) continue;
    const double mu = prefix[j0] / static_cast<double>(j0);
    const double pi0 = static_cast<double>(j0) / j_total;
    out.mu_curve.push_back({c, mu, pi0});
    if (!found && mu >= 1.0 + config.epsilon) {
      found = true;
      out.c_star = c;
      out.pi0_adjusted = pi0;
    }
  }

  out.adjusted_weights.assign(weights.size(), 0.0);
  out.adjusted_weights[0] = out.pi0_adjusted;
  for (std::size_t k = 1; k < weights.size(); ++k)
    out.adjusted_weights[k] = star[k] * (1.0 - out.pi0_adjusted);
  return out;
}

BfAdjustResult bf_adjust(const LikelihoodMatrix& lik, const std::vector<double>& weights,
                         const BfAdjustConfig& config) {
  return adjust_pi0(collapse_bayes_factors(lik, weights), config, weights);
}

double bf_moment_check(std::size_t n_null, const MixturePrior& prior,
                       const UnitTemplate& unit_template, std::uint64_t seed, unsigned threads) {
  if (n_null < 1000) throw InvalidArgument("bf_moment_check needs at least 1000 null units");
  prior.validate();
  if (unit_template.times.empty() || unit_template.se_choices.empty())
    throw InvalidArgument("unit template needs times and standard errors");
  const auto star = alternative_weights(prior.weights);
  const int p = prior.order;
  const double v0_sd = std::sqrt(prior.diffuse_variance);

  std::vector<double> bfs(n_null);
  parallel_for(n_null, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> pick(0, unit_template.se_choices.size() - 1);
    std::vector<double> coef(static_cast<std::size_t>(p));
    for (double& c : coef) c = v0_sd * normal(rng);
    ObservationUnit unit;
    unit.id = "null" + std::to_string(i);
    unit.times = unit_template.times;
    for (double t : unit.times) {
      double beta = 0.0, basis = 1.0;
      for (int k = 0; k < p; ++k) {
        if (k > 0) basis *= t / k;
        beta += coef[static_cast<std::size_t>(k)] * basis;
      }
      const double se = unit_template.se_choices[pick(rng)];
      unit.se.push_back(se);
      unit.beta_hat.push_back(beta + se * normal(rng));
    }
    const auto row = marginal_loglik_grid(unit, p, prior.sigma_grid, prior.diffuse_variance);
    std::vector<double> buf;
    for (std::size_t k = 1; k < row.size(); ++k)
      buf.push_back(star[k] > 0.0 ? row[k] + std::log(star[k])
                                  : -std::numeric_limits<double>::infinity());
    bfs[i] = std::exp(detail::log_sum_exp(buf.data(), buf.size()) - row[0]);
  });
  return std::accumulate(bfs.begin(), bfs.end(), 0.0) / static_cast<double>(n_null);
}

}  // namespace fash
