#include "fash/pipeline.hpp"

#include <algorithm>

#include "fash/errors.hpp"

namespace fash {

std::vector<double> sigma_grid_for(const FitConfig& config) {
  if (config.sigma_list.empty()) return default_grid(config.order, config.grid_size, config.qmax);
  std::vector<double> grid{0.0};
  for (double s : config.sigma_list) {
    if (!(s > 0.0)) throw InvalidArgument("explicit sigma values must be positive");
    grid.push_back(s);
  }
  std::sort(grid.begin() + 1, grid.end());
  if (std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    throw InvalidArgument("explicit sigma values must be distinct");
  return grid;
}

FitOutput fit_prior(const Dataset& data, const FitConfig& config) {
  if (data.empty()) throw DataError("dataset is empty");
  FitOutput out;
  MixturePrior prior;
  prior.order = config.order;
  prior.sigma_grid = sigma_grid_for(config);
  prior.weights.assign(prior.sigma_grid.size(), 1.0 / static_cast<double>(prior.sigma_grid.size()));
  prior.diffuse_variance =
      config.diffuse_variance > 0.0 ? config.diffuse_variance : default_diffuse_variance(data);

  out.lik = likelihood_matrix(data, prior, config.threads);
  out.em = fit_weights(out.lik, PenaltyConfig::null_biased(prior.num_components(), config.null_lambda),
                       config.tol, config.max_iter);
  prior.weights = out.em.weights;
  out.prior_mle = prior;
  out.prior = prior;

  const bool has_alternative =
      std::any_of(prior.weights.begin() + 1, prior.weights.end(), [](double w) { return w > 0.0; });
  if (config.bf_adjust && has_alternative) {
    BfAdjustConfig bc;
    bc.epsilon = config.epsilon;
    bc.cutoffs = config.cutoffs;
    out.adjustment = bf_adjust(out.lik, prior.weights, bc);
    out.prior.weights = out.adjustment->adjusted_weights;
  }
  return out;
}

}  // namespace fash
