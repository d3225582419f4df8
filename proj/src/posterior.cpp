#include "fash/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "fash/errors.hpp"
#include "fash/parallel.hpp"
#include "fash/rng.hpp"
#include "linalg.hpp"
#include "state_space.hpp"

namespace fash {

std::vector<double> posterior_weights(std::span<const double> loglik_row,
                                      std::span<const double> prior_weights) {
  if (loglik_row.size() != prior_weights.size())
    throw InvalidArgument("likelihood row and prior weights differ in length");
  std::vector<double> v(loglik_row.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (std::isnan(loglik_row[k]) || loglik_row[k] == std::numeric_limits<double>::infinity())
      throw InvalidArgument("likelihood row must not contain NaN or +inf");
    if (!(prior_weights[k] >= 0.0)) throw InvalidArgument("prior weights must be nonnegative");
    v[k] = prior_weights[k] > 0.0 ? std::log(prior_weights[k]) + loglik_row[k]
                                  : -std::numeric_limits<double>::infinity();
  }
  const double norm = detail::log_sum_exp(v.data(), v.size());
  if (!std::isfinite(norm))
    throw NumericFailure("posterior weights undefined: no component has both prior mass and likelihood");
  for (double& x : v) x = std::exp(x - norm);
  return v;
}

std::vector<double> lfdr_values(const LikelihoodMatrix& lik, std::span<const double> prior_weights) {
  std::vector<double> out(static_cast<std::size_t>(lik.rows()));
  for (Eigen::Index j = 0; j < lik.rows(); ++j) {
    const std::span<const double> row(lik.loglik.row(j).data(), static_cast<std::size_t>(lik.cols()));
    out[static_cast<std::size_t>(j)] = posterior_weights(row, prior_weights).front();
  }
  return out;
}

PosteriorMixture posterior_mixture(const ObservationUnit& unit, const MixturePrior& prior,
                                   std::span<const double> loglik_row) {
  PosteriorMixture out;
  out.unit_id = unit.id;
  out.order = prior.order;
  out.diffuse_variance = prior.diffuse_variance;
  out.sigma_grid = prior.sigma_grid;
  out.weights = posterior_weights(loglik_row, prior.weights);
  double kept = 0.0;
  for (std::size_t k = 0; k < out.weights.size(); ++k) {
    if (out.weights[k] >= kPosteriorSparsityFloor) {
      out.active.push_back(k);
      kept += out.weights[k];
    }
  }
  for (std::size_t k : out.active) out.active_weights.push_back(out.weights[k] / kept);
  return out;
}

PosteriorMixture posterior_mixture(const ObservationUnit& unit, const MixturePrior& prior) {
  prior.validate();
  const auto row = marginal_loglik_grid(unit, prior.order, prior.sigma_grid, prior.diffuse_variance);
  return posterior_mixture(unit, prior, row);
}

std::size_t FdrCurve::num_selected(double alpha) const {
  // cumulative is nondecreasing, so the selected prefix is a partition point.
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), alpha);
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<bool> FdrCurve::decisions(double alpha) const {
  std::vector<bool> out(order.size(), false);
  const std::size_t n = num_selected(alpha);
  for (std::size_t i = 0; i < n; ++i) out[order[i]] = true;
  return out;
}

FdrCurve fdr_curve(std::span<const double> local_rates) {
  for (double v : local_rates)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("local rates must lie in [0, 1]");
  FdrCurve c;
  c.order.resize(local_rates.size());
  std::iota(c.order.begin(), c.order.end(), std::size_t{0});
  std::stable_sort(c.order.begin(), c.order.end(),
                   [&](std::size_t a, std::size_t b) { return local_rates[a] < local_rates[b]; });
  c.cumulative.resize(local_rates.size());
  c.by_unit.resize(local_rates.size());
  double sum = 0.0;
  double running_max = 0.0;
  for (std::size_t i = 0; i < c.order.size(); ++i) {
    sum += local_rates[c.order[i]];
    // Guard against rounding making the running mean dip by an ulp.
    running_max = std::max(running_max, sum / static_cast<double>(i + 1));
    c.cumulative[i] = running_max;
    c.by_unit[c.order[i]] = running_max;
  }
  return c;
}

double mixture_quantile(std::span<const double> weights, std::span<const double> means,
                        std::span<const double> sds, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size())
    throw InvalidArgument("mixture components are inconsistent");
  const auto cdf = [&](double x) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (sds[k] > 0.0)
        acc += weights[k] * 0.5 * std::erfc(-(x - means[k]) / (sds[k] * std::sqrt(2.0)));
      else
        acc += x >= means[k] ? weights[k] : 0.0;
    }
    return acc;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    lo = std::min(lo, means[k] - 40.0 * sds[k]);
    hi = std::max(hi, means[k] + 40.0 * sds[k]);
  }
  if (lo == hi) return lo;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < prob)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-10 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::vector<std::unique_ptr<detail::ComponentSmoother>> build_smoothers(
    const ObservationUnit& unit, const PosteriorMixture& posterior, std::span<const double> query) {
  if (posterior.unit_id != unit.id)
    throw InvalidArgument("posterior belongs to unit '" + posterior.unit_id + "', not '" + unit.id + "'");
  unit.validate();
  std::vector<std::unique_ptr<detail::ComponentSmoother>> out;
  for (std::size_t k : posterior.active)
    out.push_back(detail::make_component_smoother(unit, posterior.order, posterior.sigma_grid[k],
                                                  posterior.diffuse_variance, query));
  return out;
}

}  // namespace

SmoothResult smooth(const ObservationUnit& unit, const PosteriorMixture& posterior,
                    std::span<const double> query, double level, int deriv) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("credible level must lie in (0, 1)");
  const auto smoothers = build_smoothers(unit, posterior, query);
  const std::size_t g = query.size();
  const std::size_t a = smoothers.size();

  SmoothResult out;
  out.t.assign(query.begin(), query.end());
  out.components.resize(a);
  for (std::size_t i = 0; i < a; ++i) {
    auto& c = out.components[i];
    c.component = posterior.active[i];
    c.sigma = posterior.sigma_grid[c.component];
    c.weight = posterior.active_weights[i];
    c.mean.resize(g);
    std::vector<double> var(g);
    smoothers[i]->moments(deriv, c.mean, var);
    c.sd.resize(g);
    for (std::size_t q = 0; q < g; ++q) c.sd[q] = std::sqrt(var[q]);
  }

  out.mean.resize(g);
  out.sd.resize(g);
  out.lower.resize(g);
  out.upper.resize(g);
  std::vector<double> m(a), s(a);
  const double tail = 0.5 * (1.0 - level);
  for (std::size_t q = 0; q < g; ++q) {
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
      const auto& c = out.components[i];
      m[i] = c.mean[q];
      s[i] = c.sd[q];
      mean += c.weight * m[i];
      second += c.weight * (s[i] * s[i] + m[i] * m[i]);
    }
    out.mean[q] = mean;
    out.sd[q] = std::sqrt(std::max(second - mean * mean, 0.0));
    if (a == 1) {
      // Exact Gaussian quantiles when a single component remains.
      if (s[0] > 0.0) {
        const boost::math::normal_distribution<double> nd(m[0], s[0]);
        out.lower[q] = boost::math::quantile(nd, tail);
        out.upper[q] = boost::math::quantile(boost::math::complement(nd, tail));
      } else {
        out.lower[q] = out.upper[q] = m[0];
      }
    } else {
      out.lower[q] = mixture_quantile(posterior.active_weights, m, s, tail);
      out.upper[q] = mixture_quantile(posterior.active_weights, m, s, 1.0 - tail);
    }
  }
  return out;
}

PathSample sample_posterior(const ObservationUnit& unit, const PosteriorMixture& posterior,
                            std::size_t count, std::span<const double> query,
                            std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("need at least one posterior sample");
  const auto smoothers = build_smoothers(unit, posterior, query);
  PathSample out;
  out.grid.assign(query.begin(), query.end());
  out.count = count;
  out.values.assign(count * query.size(), 0.0);

  std::vector<double> cdf(posterior.active_weights.size());
  std::partial_sum(posterior.active_weights.begin(), posterior.active_weights.end(), cdf.begin());
  Rng rng(derive_seed(seed, unit.id));
  std::uniform_real_distribution<double> unif(0.0, cdf.back());
  for (std::size_t m = 0; m < count; ++m) {
    const double u = unif(rng);
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    idx = std::min(idx, cdf.size() - 1);
    smoothers[idx]->sample(rng, 0, {out.values.data() + m * query.size(), query.size()});
  }
  return out;
}

LfsrResult lfsr_functional(const PathSample& paths, const FunctionalSpec& functional) {
  if (paths.count == 0) throw InvalidArgument("no posterior paths");
  std::size_t nonneg = 0, nonpos = 0;
  for (std::size_t m = 0; m < paths.count; ++m) {
    const double f = functional.evaluate(paths.grid, paths.path(m));
    if (f >= 0.0) ++nonneg;
    if (f <= 0.0) ++nonpos;
  }
  const double n = static_cast<double>(paths.count);
  LfsrResult out;
  out.lfsr = functional.sided == Sidedness::two_sided
                 ? std::min(static_cast<double>(nonneg), static_cast<double>(nonpos)) / n
                 : static_cast<double>(nonpos) / n;
  out.mc_se = std::sqrt(out.lfsr * (1.0 - out.lfsr) / n);
  return out;
}

std::vector<double> functional_grid(const ObservationUnit& unit, int refine) {
  if (refine < 1) throw InvalidArgument("grid refinement factor must be >= 1");
  std::vector<double> grid;
  for (std::size_t r = 0; r < unit.times.size(); ++r) {
    if (r > 0) {
      const double a = unit.times[r - 1], b = unit.times[r];
      for (int i = 1; i < refine; ++i) grid.push_back(a + (b - a) * i / refine);
    }
    grid.push_back(unit.times[r]);
  }
  return grid;
}

TestTable build_test_table(const Dataset& data, const MixturePrior& prior,
                           const LikelihoodMatrix& lik,
                           const std::vector<FunctionalSpec>& functionals,
                           const TestOptions& options) {
  prior.validate();
  if (lik.rows() != static_cast<Eigen::Index>(data.size()) ||
      lik.cols() != static_cast<Eigen::Index>(prior.num_components()))
    throw InvalidArgument("likelihood matrix does not match the dataset and prior");
  TestTable table;
  table.alpha = options.alpha;
  table.unit_ids.reserve(data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (!lik.unit_ids.empty() && lik.unit_ids[j] != data[j].id)
      throw DataError("likelihood cache row " + std::to_string(j) + " is for unit '" +
                      lik.unit_ids[j] + "' but the dataset has '" + data[j].id + "'");
    table.unit_ids.push_back(data[j].id);
  }
  table.lfdr = lfdr_values(lik, prior.weights);
  table.fdr = fdr_curve(table.lfdr);

  const std::size_t nf = functionals.size();
  for (const auto& f : functionals) table.functional_names.push_back(f.name);
  table.lfsr.assign(nf, std::vector<double>(data.size(), 0.0));
  table.lfsr_se.assign(nf, std::vector<double>(data.size(), 0.0));
  if (nf > 0) {
    parallel_for(data.size(), options.threads, [&](std::size_t j) {
      const std::span<const double> row(lik.loglik.row(static_cast<Eigen::Index>(j)).data(),
                                        prior.num_components());
      const auto post = posterior_mixture(data[j], prior, row);
      const auto grid = functional_grid(data[j], options.refine);
      const auto paths = sample_posterior(data[j], post, options.samples, grid, options.seed);
      for (std::size_t f = 0; f < nf; ++f) {
        const auto r = lfsr_functional(paths, functionals[f]);
        table.lfsr[f][j] = r.lfsr;
        table.lfsr_se[f][j] = r.mc_se;
      }
    });
  }
  for (std::size_t f = 0; f < nf; ++f) table.fsr.push_back(fdr_curve(table.lfsr[f]));
  return table;
}

}  // namespace fash
