#include "state_space.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fash/errors.hpp"
#include "fash/lgp.hpp"
#include "linalg.hpp"

namespace fash::detail {

namespace {

template <int P>
struct Types {
  static constexpr int C = (P == Eigen::Dynamic) ? Eigen::Dynamic : P + 1;
  using Vec = Eigen::Matrix<double, P, 1>;
  using Mat = Eigen::Matrix<double, P, P>;
  using MeanMat = Eigen::Matrix<double, P, C>;  // col 0: data, cols 1..p: basis
  using RowC = Eigen::Matrix<double, 1, C>;
  using AccMat = Eigen::Matrix<double, C, C>;
};

double basis_value(double t, int i) {
  double v = 1.0;
  for (int k = 1; k <= i; ++k) v *= t / k;
  return v;
}

// Closed-form integration of the polynomial coefficients given the whitened
// cross-products acc = sum_r [y_r, X_r]^T [y_r, X_r] / S_r.
template <int P>
double integrate_coefficients(const typename Types<P>::AccMat& acc, int p, double log_det_s,
                              std::size_t n_obs, double v0) {
  using Mat = typename Types<P>::Mat;
  using Vec = typename Types<P>::Vec;
  Mat omega = acc.bottomRightCorner(p, p);
  omega.diagonal().array() += 1.0 / v0;
  Eigen::LLT<Mat> llt(omega);
  if (llt.info() != Eigen::Success) throw NumericFailure("posterior precision of null-space coefficients is not positive definite");
  const Vec b = acc.col(0).tail(p);
  const double quad = acc(0, 0) - b.dot(llt.solve(b));
  double log_det_omega = 0.0;
  for (int i = 0; i < p; ++i) log_det_omega += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (static_cast<double>(n_obs) * std::log(2.0 * std::numbers::pi) + log_det_s +
                 p * std::log(v0) + log_det_omega + quad);
}

template <int P>
std::vector<double> augmented_loglik_impl(const ObservationUnit& unit, int p,
                                          std::span<const double> sigmas, double v0) {
  using T = Types<P>;
  using Mat = typename T::Mat;
  using Vec = typename T::Vec;
  const std::size_t r_count = unit.size();

  std::vector<Mat> a(r_count), q(r_count);
  std::vector<char> moves(r_count, 0);
  std::vector<typename T::RowC> data(r_count);
  double prev = 0.0;
  for (std::size_t r = 0; r < r_count; ++r) {
    const double delta = unit.times[r] - prev;
    if (delta > 0.0) {
      const auto tr = transition(p, delta);
      a[r] = tr.A;
      q[r] = tr.q_unit;
      moves[r] = 1;
    }
    data[r].resize(1, p + 1);
    data[r](0) = unit.beta_hat[r];
    for (int i = 0; i < p; ++i) data[r](1 + i) = basis_value(unit.times[r], i);
    prev = unit.times[r];
  }

  std::vector<double> out;
  out.reserve(sigmas.size());
  typename T::MeanMat m(p, p + 1), m_tmp(p, p + 1);
  Mat cov(p, p), cov_tmp(p, p);
  typename T::AccMat acc(p + 1, p + 1);
  typename T::RowC e(1, p + 1);
  Vec pc(p);
  for (double sigma : sigmas) {
    const double s2 = sigma * sigma;
    m.setZero();
    cov.setZero();
    acc.setZero();
    double log_det_s = 0.0;
    for (std::size_t r = 0; r < r_count; ++r) {
      if (moves[r]) {
        m_tmp.noalias() = a[r] * m;
        m = m_tmp;
        cov_tmp.noalias() = a[r] * cov;
        cov.noalias() = cov_tmp * a[r].transpose();
        if (s2 > 0.0) cov += s2 * q[r];
      }
      const double se = unit.se[r];
      const double s = cov(0, 0) + se * se;
      e = data[r] - m.row(0);
      pc = cov.col(0);
      m.noalias() += (pc / s) * e;
      cov.noalias() -= (pc / s) * pc.transpose();
      cov = 0.5 * (cov + cov.transpose()).eval();
      acc.noalias() += e.transpose() * (e / s);
      log_det_s += std::log(s);
    }
    const double ll = integrate_coefficients<P>(acc, p, log_det_s, r_count, v0);
    if (!std::isfinite(ll))
      throw NumericFailure("non-finite marginal likelihood for unit '" + unit.id + "'");
    out.push_back(ll);
  }
  return out;
}

template <int P>
class ComponentSmootherImpl final : public ComponentSmoother {
  using T = Types<P>;
  using Mat = typename T::Mat;
  using Vec = typename T::Vec;
  using MeanMat = typename T::MeanMat;

 public:
  ComponentSmootherImpl(const ObservationUnit& unit, int p, double sigma, double v0,
                        std::span<const double> query)
      : p_(p), degenerate_(sigma == 0.0) {
    build_grid(unit, query);
    const std::size_t n = t_.size();
    const double s2 = sigma * sigma;

    mp_.resize(n);
    mf_.resize(n);
    pp_.resize(n);
    pf_.resize(n);
    aorig_.resize(n);
    std::vector<Mat> step_a(n);

    MeanMat m = MeanMat::Zero(p, p + 1);
    Mat cov = Mat::Zero(p, p);
    typename T::AccMat acc(p + 1, p + 1);
    acc.setZero();
    typename T::RowC e(1, p + 1);
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double delta = t_[k] - prev;
      aorig_[k] = transition_matrix(p, t_[k]);
      if (delta > 0.0) {
        const auto tr = transition(p, delta);
        step_a[k] = tr.A;
        m = (step_a[k] * m).eval();
        cov = (step_a[k] * cov * step_a[k].transpose()).eval();
        if (s2 > 0.0) cov += s2 * Mat(tr.q_unit);
      }
      mp_[k] = m;
      pp_[k] = cov;
      if (obs_index_[k] >= 0) {
        const auto r = static_cast<std::size_t>(obs_index_[k]);
        const double se = unit.se[r];
        const double s = cov(0, 0) + se * se;
        e(0) = unit.beta_hat[r];
        for (int i = 0; i < p; ++i) e(1 + i) = aorig_[k](0, i);
        e -= m.row(0);
        const Vec pc = cov.col(0);
        m.noalias() += (pc / s) * e;
        cov.noalias() -= (pc / s) * pc.transpose();
        cov = 0.5 * (cov + cov.transpose()).eval();
        acc.noalias() += e.transpose() * (e / s);
      }
      mf_[k] = m;
      pf_[k] = cov;
      prev = t_[k];
    }

    Mat omega = acc.bottomRightCorner(p, p);
    omega.diagonal().array() += 1.0 / v0;
    Eigen::LLT<Mat> llt(omega);
    if (llt.info() != Eigen::Success)
      throw NumericFailure("posterior precision of null-space coefficients is not positive definite");
    const Vec b = acc.col(0).tail(p);
    a_hat_ = llt.solve(b);
    omega_inv_ = llt.solve(Mat::Identity(p, p));
    omega_inv_ = 0.5 * (omega_inv_ + omega_inv_.transpose()).eval();
    omega_inv_sqrt_ = psd_sqrt(omega_inv_);

    // Rauch-Tung-Striebel pass; also stores backward-sampling factors.
    ms_.resize(n);
    ps_.resize(n);
    gain_.resize(n);
    cond_sqrt_.resize(n);
    ms_[n - 1] = mf_[n - 1];
    ps_[n - 1] = pf_[n - 1];
    last_sqrt_ = psd_sqrt(pf_[n - 1]);
    for (std::size_t k = n - 1; k-- > 0;) {
      Mat g = Mat::Zero(p, p);
      if (!degenerate_) {
        const Mat af = step_a[k + 1] * pf_[k];
        g = pp_[k + 1].ldlt().solve(af).transpose();
      }
      gain_[k] = g;
      ms_[k] = mf_[k] + g * (ms_[k + 1] - mp_[k + 1]);
      Mat ps = pf_[k] + g * (ps_[k + 1] - pp_[k + 1]) * g.transpose();
      ps_[k] = 0.5 * (ps + ps.transpose());
      Mat cond = pf_[k] - g * pp_[k + 1] * g.transpose();
      cond_sqrt_[k] = psd_sqrt(cond);
    }
  }

  std::size_t grid_size() const override { return query_pos_.size(); }

  void moments(int deriv, std::span<double> mean, std::span<double> var) const override {
    check_deriv(deriv);
    for (std::size_t qi = 0; qi < query_pos_.size(); ++qi) {
      const std::size_t k = query_pos_[qi];
      const Mat b = aorig_[k] - ms_[k].rightCols(p_);
      const Vec mu = ms_[k].col(0) + b * a_hat_;
      const Mat cov = ps_[k] + b * omega_inv_ * b.transpose();
      mean[qi] = mu(deriv);
      var[qi] = std::max(cov(deriv, deriv), 0.0);
    }
  }

  void sample(Rng& rng, int deriv, std::span<double> out) const override {
    check_deriv(deriv);
    std::normal_distribution<double> normal;
    Vec z(p_);
    auto draw = [&] {
      for (int i = 0; i < p_; ++i) z(i) = normal(rng);
    };
    draw();
    const Vec a = a_hat_ + omega_inv_sqrt_ * z;
    const std::size_t n = t_.size();
    Vec x = Vec::Zero(p_);
    if (!degenerate_) {
      draw();
      x = mf_[n - 1].col(0) - mf_[n - 1].rightCols(p_) * a + last_sqrt_ * z;
    }
    emit(n - 1, a, x, deriv, out);
    for (std::size_t k = n - 1; k-- > 0;) {
      if (!degenerate_) {
        draw();
        const Vec mf = mf_[k].col(0) - mf_[k].rightCols(p_) * a;
        const Vec mp = mp_[k + 1].col(0) - mp_[k + 1].rightCols(p_) * a;
        x = mf + gain_[k] * (x - mp) + cond_sqrt_[k] * z;
      }
      emit(k, a, x, deriv, out);
    }
  }

 private:
  void build_grid(const ObservationUnit& unit, std::span<const double> query) {
    for (std::size_t i = 0; i < query.size(); ++i) {
      if (!(query[i] >= 0.0) || !std::isfinite(query[i]))
        throw InvalidArgument("query grid must be finite and nonnegative");
      if (i > 0 && !(query[i] > query[i - 1]))
        throw InvalidArgument("query grid must be strictly increasing");
    }
    if (query.empty()) throw InvalidArgument("query grid is empty");
    std::size_t i = 0, j = 0;
    const auto& obs = unit.times;
    while (i < obs.size() || j < query.size()) {
      const bool take_obs = j >= query.size() || (i < obs.size() && obs[i] <= query[j]);
      const bool take_query = i >= obs.size() || (j < query.size() && query[j] <= obs[i]);
      t_.push_back(take_obs ? obs[i] : query[j]);
      obs_index_.push_back(take_obs ? static_cast<int>(i) : -1);
      query_of_.push_back(take_query ? static_cast<int>(j) : -1);
      if (take_query) query_pos_.push_back(t_.size() - 1);
      if (take_obs) ++i;
      if (take_query) ++j;
    }
  }

  void check_deriv(int deriv) const {
    if (deriv < 0 || deriv >= p_)
      throw InvalidArgument("derivative order must be in [0, " + std::to_string(p_ - 1) + "]");
  }

  void emit(std::size_t k, const Vec& a, const Vec& x, int deriv, std::span<double> out) const {
    const int qi = query_of_[k];
    if (qi < 0) return;
    out[static_cast<std::size_t>(qi)] = aorig_[k].row(deriv).dot(a) + x(deriv);
  }

  int p_;
  bool degenerate_;
  std::vector<double> t_;
  std::vector<int> obs_index_;
  std::vector<int> query_of_;
  std::vector<std::size_t> query_pos_;
  std::vector<MeanMat> mp_, mf_, ms_;
  std::vector<Mat> pp_, pf_, ps_, gain_, cond_sqrt_, aorig_;
  Mat last_sqrt_;
  Vec a_hat_;
  Mat omega_inv_, omega_inv_sqrt_;
};

}  // namespace

std::vector<double> augmented_loglik(const ObservationUnit& unit, int order,
                                     std::span<const double> sigmas, double diffuse_variance) {
  switch (order) {
    case 1: return augmented_loglik_impl<1>(unit, order, sigmas, diffuse_variance);
    case 2: return augmented_loglik_impl<2>(unit, order, sigmas, diffuse_variance);
    case 3: return augmented_loglik_impl<3>(unit, order, sigmas, diffuse_variance);
    default: return augmented_loglik_impl<Eigen::Dynamic>(unit, order, sigmas, diffuse_variance);
  }
}

std::unique_ptr<ComponentSmoother> make_component_smoother(const ObservationUnit& unit,
                                                           int order, double sigma,
                                                           double diffuse_variance,
                                                           std::span<const double> query) {
  switch (order) {
    case 1: return std::make_unique<ComponentSmootherImpl<1>>(unit, order, sigma, diffuse_variance, query);
    case 2: return std::make_unique<ComponentSmootherImpl<2>>(unit, order, sigma, diffuse_variance, query);
    case 3: return std::make_unique<ComponentSmootherImpl<3>>(unit, order, sigma, diffuse_variance, query);
    default:
      return std::make_unique<ComponentSmootherImpl<Eigen::Dynamic>>(unit, order, sigma,
                                                                      diffuse_variance, query);
  }
}

}  // namespace fash::detail
