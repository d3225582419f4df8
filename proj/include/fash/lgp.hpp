#pragma once

// Integrated Wiener process IWP_p: the Gaussian process solving D^p beta = sigma * xi
// with zero initial conditions beta(0) = ... = beta^{(p-1)}(0) = 0.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fash {

struct LgpSpec {
  int order = 1;       // p, operator L = D^p
  double sigma = 0.0;  // 0 pins the process to the polynomial null space
};

// Exact one-step discretization of the IWP_p state (beta, beta', ..., beta^{(p-1)}).
// x(t + delta) = A x(t) + w,  w ~ N(0, sigma^2 * q_unit).
struct StateTransition {
  double delta = 0.0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd q_unit;
};

// Prior covariance K(s, t) of the zero-initialized process.
double iwp_covariance(int order, double sigma, double s, double t);

// h-unit predictive standard deviation SD[beta(t + h) | beta(u), u <= t].
double psd(int order, double sigma, double h);

// Inverse of psd() in sigma.
double psd_to_sigma(int order, double h, double target_psd);

StateTransition transition(int order, double delta);

// Matrix exp(F * delta) only; shared by transition() and the smoother.
Eigen::MatrixXd transition_matrix(int order, double delta);

// Dense Gram matrix [K(t_i, t_j)].
Eigen::MatrixXd iwp_gram(int order, double sigma, std::span<const double> times);

// n independent zero-initialized paths evaluated on `grid`; each inner vector
// has grid.size() entries.
std::vector<std::vector<double>> sample_prior_paths(const LgpSpec& spec,
                                                    std::span<const double> grid,
                                                    std::size_t n, std::uint64_t seed);

}  // namespace fash
