#include "fash/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fash/errors.hpp"
#include "fash/lgp.hpp"
#include "fash/parallel.hpp"
#include "state_space.hpp"

namespace fash {

void ObservationUnit::validate() const {
  const auto fail = [&](const std::string& what) {
    throw DataError("unit '" + id + "': " + what);
  };
  if (times.empty()) fail("no observations");
  if (beta_hat.size() != times.size() || se.size() != times.size())
    fail("times, beta_hat and se differ in length");
  for (std::size_t r = 0; r < times.size(); ++r) {
    if (!std::isfinite(times[r]) || !std::isfinite(beta_hat[r]) || !std::isfinite(se[r]))
      fail("non-finite value at position " + std::to_string(r));
    if (times[r] < 0.0) fail("negative time " + std::to_string(times[r]));
    if (r > 0 && !(times[r] > times[r - 1])) fail("times are not strictly increasing");
    if (!(se[r] >= kMinStandardError))
      fail("standard error below " + std::to_string(kMinStandardError) + " at t=" +
           std::to_string(times[r]));
  }
}

void MixturePrior::validate() const {
  if (order < 1) throw InvalidArgument("prior order must be >= 1");
  if (sigma_grid.size() < 2) throw InvalidArgument("prior needs sigma_0 = 0 and at least one alternative");
  if (sigma_grid.front() != 0.0) throw InvalidArgument("sigma_0 must be 0");
  for (std::size_t k = 1; k < sigma_grid.size(); ++k)
    if (!(sigma_grid[k] > sigma_grid[k - 1]) || !std::isfinite(sigma_grid[k]))
      throw InvalidArgument("sigma grid must be strictly increasing and finite");
  if (weights.size() != sigma_grid.size())
    throw InvalidArgument("prior weights and sigma grid differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("prior weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("prior weights must sum to 1");
  if (!(diffuse_variance > 0.0) || !std::isfinite(diffuse_variance))
    throw InvalidArgument("diffuse variance must be positive");
}

namespace {

void check_call(const ObservationUnit& unit, int order, double sigma, double v0) {
  if (order < 1) throw InvalidArgument("order must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be finite and >= 0");
  if (!(v0 > 0.0) || !std::isfinite(v0)) throw InvalidArgument("diffuse variance must be positive");
  try {
    unit.validate();
  } catch (const DataError& e) {
    throw InvalidArgument(e.what());
  }
}

}  // namespace

double marginal_loglik(const ObservationUnit& unit, int order, double sigma,
                       double diffuse_variance) {
  check_call(unit, order, sigma, diffuse_variance);
  const double s[] = {sigma};
  return detail::augmented_loglik(unit, order, s, diffuse_variance).front();
}

std::vector<double> marginal_loglik_grid(const ObservationUnit& unit, int order,
                                         const std::vector<double>& sigmas,
                                         double diffuse_variance) {
  for (double s : sigmas) check_call(unit, order, s, diffuse_variance);
  if (sigmas.empty()) return {};
  return detail::augmented_loglik(unit, order, sigmas, diffuse_variance);
}

double marginal_loglik_dense(const ObservationUnit& unit, int order, double sigma,
                             double diffuse_variance) {
  check_call(unit, order, sigma, diffuse_variance);
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(unit.size());
  // Adding V0 X X^T straight onto the covariance loses digits once V0 is
  // large, so the polynomial part goes through the determinant lemma instead.
  LMat cov = iwp_gram(order, sigma, unit.times).cast<long double>();
  LMat x(n, order);
  LVec y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const long double se = unit.se[r];
    cov(r, r) += se * se;
    y(r) = unit.beta_hat[r];
    long double v = 1.0L;
    for (int i = 0; i < order; ++i) {
      if (i > 0) v *= static_cast<long double>(unit.times[r]) / i;
      x(r, i) = v;
    }
  }
  Eigen::LLT<LMat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericFailure("dense covariance for unit '" + unit.id + "' is not positive definite");
  const LMat cx = llt.solve(x);
  const LVec cy = llt.solve(y);
  LMat inner = x.transpose() * cx;
  inner.diagonal().array() += 1.0L / static_cast<long double>(diffuse_variance);
  Eigen::LLT<LMat> inner_llt(inner);
  if (inner_llt.info() != Eigen::Success)
    throw NumericFailure("dense covariance for unit '" + unit.id + "' is not positive definite");
  long double log_det = order * std::log(static_cast<long double>(diffuse_variance));
  for (Eigen::Index r = 0; r < n; ++r) log_det += 2.0L * std::log(llt.matrixL()(r, r));
  for (int i = 0; i < order; ++i) log_det += 2.0L * std::log(inner_llt.matrixL()(i, i));
  const LVec xty = x.transpose() * cy;
  const long double quad = y.dot(cy) - xty.dot(inner_llt.solve(xty));
  const long double ll = -0.5L * (n * std::log(2.0L * std::numbers::pi_v<long double>) + log_det + quad);
  return static_cast<double>(ll);
}

LikelihoodMatrix likelihood_matrix(const Dataset& data, const MixturePrior& prior,
                                   unsigned threads) {
  prior.validate();
  const auto j_count = static_cast<Eigen::Index>(data.size());
  const auto k_count = static_cast<Eigen::Index>(prior.num_components());
  LikelihoodMatrix out;
  out.loglik.resize(j_count, k_count);
  out.row_offset.assign(data.size(), 0.0);
  out.unit_ids.resize(data.size());
  parallel_for(data.size(), threads, [&](std::size_t j) {
    const auto& unit = data[j];
    out.unit_ids[j] = unit.id;
    std::vector<double> row;
    try {
      unit.validate();
      row = detail::augmented_loglik(unit, prior.order, prior.sigma_grid, prior.diffuse_variance);
    } catch (const std::exception& e) {
      const std::string what = e.what();
      if (what.find(unit.id) != std::string::npos) throw;
      throw NumericFailure("unit '" + unit.id + "': " + what);
    }
    const double offset = *std::max_element(row.begin(), row.end());
    out.row_offset[j] = offset;
    for (Eigen::Index k = 0; k < k_count; ++k)
      out.loglik(static_cast<Eigen::Index>(j), k) = row[static_cast<std::size_t>(k)] - offset;
  });
  return out;
}

double default_diffuse_variance(const Dataset& data) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& u : data)
    for (double b : u.beta_hat) {
      sum += b * b;
      ++n;
    }
  const double scale2 = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return scale2 > 0.0 ? 1e6 * scale2 : 1e6;
}

}  // namespace fash
