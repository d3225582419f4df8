#pragma once

// Kalman filtering / smoothing for beta(t) = x_poly(t) + f(t), where f is the
// zero-initialized IWP_p and x_poly carries the diffuse polynomial
// coefficients a ~ N(0, V0 I). The filter runs on f only; the p basis columns
// are filtered alongside the data (augmented filter), and `a` is integrated
// out in closed form at the end. No quantity of size V0 ever enters the
// covariance recursion.

#include <memory>
#include <span>
#include <vector>

#include "fash/likelihood.hpp"
#include "fash/rng.hpp"

namespace fash::detail {

std::vector<double> augmented_loglik(const ObservationUnit& unit, int order,
                                     std::span<const double> sigmas, double diffuse_variance);

// Gaussian posterior of one mixture component evaluated on a query grid.
class ComponentSmoother {
 public:
  virtual ~ComponentSmoother() = default;

  virtual std::size_t grid_size() const = 0;

  // Pointwise posterior mean / variance of the `deriv`-th derivative.
  virtual void moments(int deriv, std::span<double> mean, std::span<double> var) const = 0;

  // One joint posterior draw of the `deriv`-th derivative on the query grid.
  virtual void sample(Rng& rng, int deriv, std::span<double> out) const = 0;
};

// `query` must be strictly increasing and nonnegative.
std::unique_ptr<ComponentSmoother> make_component_smoother(const ObservationUnit& unit,
                                                           int order, double sigma,
                                                           double diffuse_variance,
                                                           std::span<const double> query);

}  // namespace fash::detail
