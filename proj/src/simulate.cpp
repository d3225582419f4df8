#include "fash/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "fash/errors.hpp"
#include "fash/lgp.hpp"
#include "fash/posterior.hpp"
#include "fash/rng.hpp"

namespace fash {

char category_label(Category c) {
  switch (c) {
    case Category::A: return 'A';
    case Category::B: return 'B';
    case Category::C: return 'C';
  }
  return '?';
}

std::vector<double> SimulationConfig::default_times() {
  std::vector<double> t(16);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return t;
}

void SimulationConfig::validate() const {
  if (units == 0) throw InvalidArgument("simulation needs at least one unit");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in [0, 1]");
  if (times.empty()) throw InvalidArgument("simulation time grid is empty");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < 0.0 || (i > 0 && !(times[i] > times[i - 1])))
      throw InvalidArgument("simulation times must be nonnegative and strictly increasing");
  if (se_choices.empty()) throw InvalidArgument("no standard-error choices");
  for (double s : se_choices)
    if (!(s >= kMinStandardError)) throw InvalidArgument("standard-error choices must be positive");
}

CategoryCounts category_counts(std::size_t units, double rho) {
  const double j = static_cast<double>(units);
  CategoryCounts c;
  c.a = static_cast<std::size_t>(std::llround(j * (1.0 - rho)));
  c.b = static_cast<std::size_t>(std::llround(j * rho / 2.0));
  if (c.a > units) c.a = units;
  if (c.a + c.b > units) c.b = units - c.a;
  c.c = units - c.a - c.b;
  return c;
}

bool GroundTruth::is_null(std::size_t j, int order) const {
  const Category c = category[j];
  if (order <= 1) return c == Category::A;
  return c == Category::A || c == Category::B;
}

double GroundTruth::null_fraction(int order) const {
  if (category.empty()) return 1.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < category.size(); ++j) n += is_null(j, order) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(category.size());
}

SimulatedData generate_dataset(const SimulationConfig& config) {
  config.validate();
  const auto counts = category_counts(config.units, config.rho);
  const double nonlinear_sigma = psd_to_sigma(2, config.nonlinear_horizon, config.nonlinear_psd);

  Rng rng(config.seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick(0, config.se_choices.size() - 1);
  const int width = static_cast<int>(std::to_string(config.units).size());

  SimulatedData out;
  out.data.reserve(config.units);
  for (std::size_t j = 0; j < config.units; ++j) {
    const Category cat = j < counts.a ? Category::A
                         : j < counts.a + counts.b ? Category::B
                                                   : Category::C;
    std::vector<double> beta(config.times.size());
    const double intercept = normal(rng);
    const double slope = cat == Category::A ? 0.0 : 0.5 * normal(rng);
    for (std::size_t r = 0; r < beta.size(); ++r) beta[r] = intercept + slope * config.times[r];
    if (cat == Category::C) {
      const auto path = sample_prior_paths({2, nonlinear_sigma}, config.times, 1, rng());
      for (std::size_t r = 0; r < beta.size(); ++r) beta[r] += path[0][r];
    }
    ObservationUnit unit;
    char id[32];
    std::snprintf(id, sizeof id, "unit%0*zu", width, j + 1);
    unit.id = id;
    unit.times = config.times;
    for (std::size_t r = 0; r < beta.size(); ++r) {
      const double se = config.se_choices[pick(rng)];
      unit.se.push_back(se);
      unit.beta_hat.push_back(beta[r] + se * normal(rng));
    }
    out.data.push_back(std::move(unit));
    out.truth.category.push_back(cat);
    out.truth.beta.push_back(std::move(beta));
  }
  return out;
}

namespace {

FitConfig study_fit_config(const StudyOptions& options, int order) {
  FitConfig fc;
  fc.order = order;
  fc.grid_size = options.grid_size;
  fc.qmax = options.qmax;
  fc.epsilon = options.epsilon;
  fc.threads = options.threads;
  fc.bf_adjust = true;
  return fc;
}

SimulationConfig study_sim_config(const StudyOptions& options, double rho, std::uint64_t seed) {
  SimulationConfig sc;
  sc.units = options.units;
  sc.rho = rho;
  sc.seed = seed;
  return sc;
}

}  // namespace

std::vector<Pi0Row> run_pi0_sweep(const std::vector<double>& rho_grid,
                                  const StudyOptions& options) {
  if (options.replicates < 1) throw InvalidArgument("need at least one replicate");
  std::vector<Pi0Row> rows;
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    for (int rep = 0; rep < options.replicates; ++rep) {
      const auto sim = generate_dataset(
          study_sim_config(options, rho, derive_seed(options.seed, i, static_cast<std::uint64_t>(rep))));
      for (int order : options.orders) {
        const auto fit = fit_prior(sim.data, study_fit_config(options, order));
        rows.push_back({rho, rep, order, sim.truth.null_fraction(order),
                        fit.prior_mle.weights.front(), fit.prior.weights.front()});
      }
    }
  }
  return rows;
}

std::vector<CalibrationRow> run_calibration(double rho, const std::vector<double>& alpha_grid,
                                            const StudyOptions& options) {
  if (options.replicates < 1) throw InvalidArgument("need at least one replicate");
  const std::size_t na = alpha_grid.size();
  const std::size_t no = options.orders.size();
  // sums[order][pipeline][alpha] = {fdr, power}
  std::vector<std::vector<std::vector<std::pair<double, double>>>> sums(
      no, std::vector<std::vector<std::pair<double, double>>>(2, std::vector<std::pair<double, double>>(na, {0.0, 0.0})));

  constexpr std::uint64_t kCalibrationStream = 0xCA11B;
  for (int rep = 0; rep < options.replicates; ++rep) {
    const auto sim = generate_dataset(study_sim_config(
        options, rho, derive_seed(options.seed, kCalibrationStream, static_cast<std::uint64_t>(rep))));
    for (std::size_t oi = 0; oi < no; ++oi) {
      const int order = options.orders[oi];
      const auto fit = fit_prior(sim.data, study_fit_config(options, order));
      const std::vector<double>* weights[2] = {&fit.prior_mle.weights, &fit.prior.weights};
      std::size_t alternatives = 0;
      for (std::size_t j = 0; j < sim.data.size(); ++j) alternatives += sim.truth.is_null(j, order) ? 0 : 1;
      for (int pl = 0; pl < 2; ++pl) {
        const auto lfdr = lfdr_values(fit.lik, *weights[pl]);
        const auto curve = fdr_curve(lfdr);
        for (std::size_t ai = 0; ai < na; ++ai) {
          const std::size_t n = curve.num_selected(alpha_grid[ai]);
          std::size_t false_disc = 0;
          for (std::size_t i = 0; i < n; ++i) false_disc += sim.truth.is_null(curve.order[i], order) ? 1 : 0;
          const double fdr = static_cast<double>(false_disc) / static_cast<double>(std::max<std::size_t>(n, 1));
          const double power = alternatives > 0
                                   ? static_cast<double>(n - false_disc) / static_cast<double>(alternatives)
                                   : 0.0;
          sums[oi][pl][ai].first += fdr;
          sums[oi][pl][ai].second += power;
        }
      }
    }
  }

  std::vector<CalibrationRow> rows;
  const double reps = options.replicates;
  for (std::size_t ai = 0; ai < na; ++ai)
    for (std::size_t oi = 0; oi < no; ++oi)
      for (int pl = 0; pl < 2; ++pl)
        rows.push_back({rho, alpha_grid[ai], options.orders[oi], pl == 0 ? "mle" : "bf_adjusted",
                        options.replicates, sums[oi][pl][ai].first / reps,
                        sums[oi][pl][ai].second / reps});
  return rows;
}

}  // namespace fash
