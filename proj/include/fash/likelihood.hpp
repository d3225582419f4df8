#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fash {

// Smallest standard error accepted; smaller values are rejected, not clamped.
inline constexpr double kMinStandardError = 1e-8;

// Effect estimates of one unit at R condition values (e.g. days).
struct ObservationUnit {
  std::string id;
  std::vector<double> times;     // strictly increasing, >= 0
  std::vector<double> beta_hat;  // effect estimates
  std::vector<double> se;        // standard errors, >= kMinStandardError

  std::size_t size() const { return times.size(); }

  // Throws DataError naming the unit when an invariant fails.
  void validate() const;
};

using Dataset = std::vector<ObservationUnit>;

// Mixture of IWP_p priors with a shared diffuse prior N(0, V0 I_p) on the
// coefficients of the polynomial null space.
struct MixturePrior {
  int order = 1;
  std::vector<double> sigma_grid;  // sigma_0 = 0 < sigma_1 < ... < sigma_K
  std::vector<double> weights;     // on the simplex, same length as sigma_grid
  double diffuse_variance = 1e6;

  std::size_t num_components() const { return sigma_grid.size(); }
  void validate() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-unit log marginal likelihoods, each row shifted so its maximum is 0.
// Entries may be -inf (zero likelihood) but never +inf or NaN.
struct LikelihoodMatrix {
  RowMatrix loglik;                 // J x (K+1)
  std::vector<double> row_offset;   // log-scale removed from each row
  std::vector<std::string> unit_ids;

  Eigen::Index rows() const { return loglik.rows(); }
  Eigen::Index cols() const { return loglik.cols(); }
};

// log N(beta_hat; 0, C_sigma + V0 X X^T + diag(se^2)) via Kalman filtering on
// the zero-initialized process, with the polynomial coefficients integrated
// out in closed form. O(R p^3).
double marginal_loglik(const ObservationUnit& unit, int order, double sigma,
                       double diffuse_variance);

// Same quantity from the dense R x R covariance (extended precision Cholesky).
// Intended as a reference for small R.
double marginal_loglik_dense(const ObservationUnit& unit, int order, double sigma,
                             double diffuse_variance);

// marginal_loglik for every sigma in `sigmas`, sharing the per-unit setup.
std::vector<double> marginal_loglik_grid(const ObservationUnit& unit, int order,
                                         const std::vector<double>& sigmas,
                                         double diffuse_variance);

LikelihoodMatrix likelihood_matrix(const Dataset& data, const MixturePrior& prior,
                                   unsigned threads = 1);

// 1e6 times the mean square of all effect estimates (1e6 if all are zero).
double default_diffuse_variance(const Dataset& data);

}  // namespace fash
