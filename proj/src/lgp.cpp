#include "fash/lgp.hpp"

#include <cmath>
#include <string>

#include "fash/errors.hpp"
#include "fash/rng.hpp"
#include "linalg.hpp"

namespace fash {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

void check_order(int order) {
  if (order < 1) throw InvalidArgument("IWP order must be >= 1, got " + std::to_string(order));
}

void check_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw InvalidArgument("sigma must be finite and nonnegative");
}

}  // namespace

double iwp_covariance(int order, double sigma, double s, double t) {
  check_order(order);
  check_sigma(sigma);
  if (!(s >= 0.0) || !(t >= 0.0) || !std::isfinite(s) || !std::isfinite(t))
    throw InvalidArgument("iwp_covariance requires finite nonnegative times");
  if (sigma == 0.0) return 0.0;
  // Substituting v = min(s,t) - u turns the defining integral into
  // int_0^m v^{p-1} (d + v)^{p-1} dv, expanded binomially in d = |s - t|.
  const double m = std::min(s, t);
  const double d = std::abs(s - t);
  const int q = order - 1;
  double acc = 0.0;
  for (int i = 0; i <= q; ++i)
    acc += binomial(q, i) * std::pow(d, q - i) * std::pow(m, order + i) / (order + i);
  const double fq = factorial(q);
  return sigma * sigma * acc / (fq * fq);
}

double psd(int order, double sigma, double h) {
  check_order(order);
  check_sigma(sigma);
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("psd horizon must be positive");
  return sigma * std::pow(h, (2.0 * order - 1.0) / 2.0) /
         (factorial(order - 1) * std::sqrt(2.0 * order - 1.0));
}

double psd_to_sigma(int order, double h, double target_psd) {
  check_order(order);
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("psd horizon must be positive");
  if (!(target_psd >= 0.0) || !std::isfinite(target_psd))
    throw InvalidArgument("target psd must be finite and nonnegative");
  if (target_psd == 0.0) return 0.0;
  return target_psd * factorial(order - 1) * std::sqrt(2.0 * order - 1.0) /
         std::pow(h, (2.0 * order - 1.0) / 2.0);
}

Eigen::MatrixXd transition_matrix(int order, double delta) {
  check_order(order);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i < order; ++i)
    for (int j = i; j < order; ++j) a(i, j) = std::pow(delta, j - i) / factorial(j - i);
  return a;
}

StateTransition transition(int order, double delta) {
  check_order(order);
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw InvalidArgument("transition step must be positive");
  StateTransition out;
  out.delta = delta;
  out.A = transition_matrix(order, delta);
  out.q_unit.resize(order, order);
  const int top = 2 * order - 1;
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      const int e = top - i - j;
      out.q_unit(i, j) =
          std::pow(delta, e) / (factorial(order - 1 - i) * factorial(order - 1 - j) * e);
    }
  }
  return out;
}

Eigen::MatrixXd iwp_gram(int order, double sigma, std::span<const double> times) {
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      k(i, j) = k(j, i) = iwp_covariance(order, sigma, times[i], times[j]);
  return k;
}

std::vector<std::vector<double>> sample_prior_paths(const LgpSpec& spec,
                                                    std::span<const double> grid,
                                                    std::size_t n, std::uint64_t seed) {
  check_order(spec.order);
  check_sigma(spec.sigma);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
      throw InvalidArgument("sample grid must be finite and nonnegative");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw InvalidArgument("sample grid must be strictly increasing");
  }
  std::vector<std::vector<double>> paths(n, std::vector<double>(grid.size(), 0.0));
  if (spec.sigma == 0.0 || grid.empty()) return paths;

  // Per-step (A, sigma * sqrt(Q)) factors, shared by all paths.
  std::vector<Eigen::MatrixXd> steps_a;
  std::vector<Eigen::MatrixXd> steps_l;
  double prev = 0.0;
  for (double t : grid) {
    const double delta = t - prev;
    if (delta > 0.0) {
      auto tr = transition(spec.order, delta);
      steps_a.push_back(tr.A);
      steps_l.push_back(spec.sigma * detail::psd_sqrt(tr.q_unit));
    } else {
      steps_a.emplace_back();
      steps_l.emplace_back();
    }
    prev = t;
  }

  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(spec.order);
  Eigen::VectorXd z(spec.order);
  for (auto& path : paths) {
    x.setZero();
    for (std::size_t r = 0; r < grid.size(); ++r) {
      if (steps_a[r].size() > 0) {
        for (int i = 0; i < spec.order; ++i) z[i] = normal(rng);
        x = steps_a[r] * x + steps_l[r] * z;
      }
      path[r] = x[0];
    }
  }
  return paths;
}

}  // namespace fash
