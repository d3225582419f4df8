#include "fash/ebayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fash/errors.hpp"
#include "fash/lgp.hpp"

namespace fash {

PenaltyConfig PenaltyConfig::flat(std::size_t components) {
  return PenaltyConfig{std::vector<double>(components, 1.0)};
}

PenaltyConfig PenaltyConfig::null_biased(std::size_t components, double null_lambda) {
  auto p = flat(components);
  if (!p.lambda.empty()) p.lambda[0] = null_lambda;
  return p;
}

void PenaltyConfig::validate(std::size_t components) const {
  if (lambda.size() != components)
    throw InvalidArgument("penalty has " + std::to_string(lambda.size()) + " entries, expected " +
                          std::to_string(components));
  for (double l : lambda)
    if (!(l >= 1.0) || !std::isfinite(l)) throw InvalidArgument("penalty lambda_k must be >= 1");
}

std::vector<double> default_grid(int order, int count, double qmax) {
  if (count < 2) throw InvalidArgument("grid needs at least 2 nonzero components");
  if (!(qmax > 0.0) || !std::isfinite(qmax)) throw InvalidArgument("qmax must be positive");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count) + 1);
  grid.push_back(0.0);
  for (int i = count - 1; i >= 0; --i) {
    const double log_precision = qmax * static_cast<double>(i) / (count - 1);
    grid.push_back(psd_to_sigma(order, 1.0, std::exp(-0.5 * log_precision)));
  }
  return grid;
}

namespace {

void check_weights(const std::vector<double>& w, const LikelihoodMatrix& lik) {
  if (static_cast<Eigen::Index>(w.size()) != lik.cols())
    throw InvalidArgument("weights length does not match likelihood matrix columns");
  for (double x : w)
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("weights must be nonnegative");
}

double penalty_term(const std::vector<double>& w, const PenaltyConfig& penalty) {
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double a = penalty.lambda[k] - 1.0;
    if (a == 0.0) continue;
    acc += w[k] > 0.0 ? a * std::log(w[k]) : -std::numeric_limits<double>::infinity();
  }
  return acc;
}

// One E/M pass over precomputed exp(L). Returns the objective at `w`.
double em_pass(const std::vector<double>& w, const RowMatrix& lik_exp,
               const PenaltyConfig& penalty, std::vector<double>& next) {
  const Eigen::Index j_count = lik_exp.rows();
  const Eigen::Index k_count = lik_exp.cols();
  std::vector<double> resp(static_cast<std::size_t>(k_count), 0.0);
  double loglik = 0.0;
  for (Eigen::Index j = 0; j < j_count; ++j) {
    const double* row = lik_exp.row(j).data();
    double denom = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) denom += w[static_cast<std::size_t>(k)] * row[k];
    if (!(denom > 0.0))
      throw NumericFailure("all responsibilities are zero for row " + std::to_string(j));
    const double inv = 1.0 / denom;
    for (Eigen::Index k = 0; k < k_count; ++k)
      resp[static_cast<std::size_t>(k)] += w[static_cast<std::size_t>(k)] * row[k] * inv;
    loglik += std::log(denom);
  }
  double total = 0.0;
  next.assign(resp.size(), 0.0);
  for (std::size_t k = 0; k < resp.size(); ++k) {
    next[k] = std::max(resp[k] + penalty.lambda[k] - 1.0, 0.0);
    total += next[k];
  }
  if (!(total > 0.0)) throw NumericFailure("EM update produced no mass");
  for (double& x : next) x /= total;
  return loglik + penalty_term(w, penalty);
}

RowMatrix exp_matrix(const LikelihoodMatrix& lik) {
  RowMatrix e = lik.loglik.array().exp().matrix();
  if (!e.allFinite()) throw InvalidArgument("likelihood matrix has +inf or NaN entries");
  return e;
}

}  // namespace

double penalized_objective(const std::vector<double>& weights, const LikelihoodMatrix& lik,
                           const PenaltyConfig& penalty) {
  check_weights(weights, lik);
  penalty.validate(weights.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < lik.rows(); ++j) {
    double denom = 0.0;
    for (Eigen::Index k = 0; k < lik.cols(); ++k)
      denom += weights[static_cast<std::size_t>(k)] * std::exp(lik.loglik(j, k));
    acc += std::log(denom);
  }
  return acc + penalty_term(weights, penalty);
}

std::vector<double> em_update(const std::vector<double>& weights, const LikelihoodMatrix& lik,
                              const PenaltyConfig& penalty) {
  check_weights(weights, lik);
  penalty.validate(weights.size());
  std::vector<double> next;
  em_pass(weights, exp_matrix(lik), penalty, next);
  return next;
}

FitResult fit_weights(const LikelihoodMatrix& lik, const PenaltyConfig& penalty, double tol,
                      int max_iter) {
  const auto k_count = static_cast<std::size_t>(lik.cols());
  if (k_count == 0) throw InvalidArgument("likelihood matrix has no columns");
  penalty.validate(k_count);
  const RowMatrix lik_exp = exp_matrix(lik);

  FitResult out;
  std::vector<double> w(k_count, 1.0 / static_cast<double>(k_count));
  std::vector<double> next;
  // trace[0] is the objective at the uniform start; trace[i] after iterate i.
  double previous = em_pass(w, lik_exp, penalty, next);
  out.objective_trace.push_back(previous);
  for (int it = 1; it <= max_iter; ++it) {
    w.swap(next);
    const double current = em_pass(w, lik_exp, penalty, next);
    out.objective_trace.push_back(current);
    out.iterations = it;
    // Scaled by row count, not |objective|, so per-row shifts of the matrix
    // do not change when the loop stops.
    if (std::abs(current - previous) < tol * static_cast<double>(std::max<Eigen::Index>(lik.rows(), 1))) {
      out.converged = true;
      break;
    }
    previous = current;
  }
  out.weights = w;
  return out;
}

}  // namespace fash
