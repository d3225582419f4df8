#include "fash/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <span>

#include <CLI11.hpp>

#include "fash/errors.hpp"
#include "fash/functional.hpp"
#include "fash/ingest.hpp"
#include "fash/pipeline.hpp"
#include "fash/posterior.hpp"
#include "fash/simulate.hpp"

namespace fash::cli {

namespace fs = std::filesystem;

std::vector<double> parse_real_list(const std::string& text) {
  auto to_real = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw InvalidArgument("cannot parse number '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      const auto pos = text.find(':', start);
      parts.push_back(text.substr(start, pos == std::string::npos ? pos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (parts.size() != 3) throw InvalidArgument("range must look like lo:hi:step, got '" + text + "'");
    const double lo = to_real(parts[0]), hi = to_real(parts[1]), step = to_real(parts[2]);
    if (!(step > 0.0) || hi < lo) throw InvalidArgument("bad range '" + text + "'");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(',', start);
    const std::string item = text.substr(start, pos == std::string::npos ? pos : pos - start);
    if (!item.empty()) out.push_back(to_real(item));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw InvalidArgument("empty list '" + text + "'");
  return out;
}

namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> near_matches(const std::string& id, const std::vector<std::string>& ids) {
  const std::size_t limit = std::max<std::size_t>(2, id.size() / 3);
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& s : ids) {
    std::size_t d = edit_distance(id, s);
    if (!id.empty() && s.find(id) != std::string::npos) d = std::min<std::size_t>(d, 1);
    if (d <= limit) scored.emplace_back(d, s);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < 5; ++i) out.push_back(scored[i].second);
  return out;
}

std::string file_safe(const std::string& id) {
  std::string s = id;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

// Resolved option values of a subcommand, in declaration order.
std::vector<std::pair<std::string, std::string>> echo_config(const CLI::App* sub) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "threads" || name == "config") continue;
    const bool flag = opt->get_expected_max() == 0;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      if (flag) value = "true";
    } else if (flag) {
      value = "false";
    } else {
      value = opt->get_default_str();
      if (value == "{}") value.clear();
    }
    out.emplace_back(name, value);
  }
  return out;
}

std::span<const double> loglik_row(const LikelihoodMatrix& lik, std::size_t j) {
  return {lik.loglik.data() + j * static_cast<std::size_t>(lik.cols()), static_cast<std::size_t>(lik.cols())};
}

struct Shared {
  std::string input;
  std::string out;
  std::string fit_dir;
  bool no_t_adjust = false;
  bool recompute = false;
  unsigned threads = 1;
};

LikelihoodMatrix load_or_compute(const Shared& s, const Dataset& data, const MixturePrior& prior) {
  if (s.recompute) return likelihood_matrix(data, prior, s.threads);
  auto lik = read_loglik_cache(fs::path(s.fit_dir) / "loglik.csv");
  if (lik.cols() != static_cast<Eigen::Index>(prior.num_components()))
    throw DataError("log-likelihood cache does not match the prior's sigma grid; rerun fit or use --recompute");
  if (lik.unit_ids.size() != data.size())
    throw DataError("log-likelihood cache has " + std::to_string(lik.unit_ids.size()) +
                    " units but the input has " + std::to_string(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j)
    if (lik.unit_ids[j] != data[j].id)
      throw DataError("log-likelihood cache row " + std::to_string(j + 1) + " is unit '" + lik.unit_ids[j] +
                      "' but the input has '" + data[j].id + "'");
  return lik;
}

void add_threads(CLI::App* sub, unsigned& threads) {
  sub->add_option("--threads", threads, "Worker threads")
      ->envname("FASH_THREADS")
      ->check(CLI::PositiveNumber);
}

int dispatch(CLI::App& app, int argc, const char* const* argv);

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Adaptive shrinkage of effect functions with integrated Wiener process priors", "fash"};
  return dispatch(app, argc, argv);
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"fash"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

namespace {

int dispatch(CLI::App& app, int argc, const char* const* argv) {
  app.set_version_flag("--version", std::string(library_version()));
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Shared sh;

  // fit
  FitConfig fc;
  bool no_bf = false;
  auto* fit = app.add_subcommand("fit", "Estimate the mixture prior and cache per-unit log-likelihoods");
  fit->add_option("--input", sh.input, "Long CSV: unit,t,beta_hat,se[,df]")->required();
  fit->add_option("--out", sh.out, "Output directory")->required();
  fit->add_option("--order", fc.order, "IWP order p (1 or 2 typical)")->check(CLI::Range(1, 8));
  fit->add_option("--grid-size", fc.grid_size, "Number of nonzero sigma values")->check(CLI::PositiveNumber);
  fit->add_option("--qmax", fc.qmax, "Largest log-precision of the grid");
  fit->add_option("--sigma", fc.sigma_list, "Explicit positive sigma values (replaces the grid)")->delimiter(',');
  fit->add_option("--null-lambda", fc.null_lambda, "Dirichlet penalty on the null weight (>= 1)");
  fit->add_flag("--no-bf-adjust", no_bf, "Keep the raw maximum-likelihood weights");
  fit->add_option("--epsilon", fc.epsilon, "Tolerance of the Bayes-factor adjustment");
  fit->add_option("--cutoffs", fc.cutoffs, "Candidate BF cutoffs (default: observed BFs and +inf)")->delimiter(',');
  fit->add_option("--diffuse-variance", fc.diffuse_variance, "V0 (<= 0 picks a data-based default)");
  fit->add_option("--tol", fc.tol, "EM stops when the objective moves less than tol per unit");
  fit->add_option("--max-iter", fc.max_iter, "EM iteration cap");
  fit->add_flag("--no-t-adjust", sh.no_t_adjust, "Ignore the df column");
  add_threads(fit, sh.threads);

  // test
  std::vector<std::string> functional_names;
  TestOptions topt;
  auto* test = app.add_subcommand("test", "lfdr / FDR and functional lfsr / FSR per unit");
  test->add_option("--input", sh.input, "Long CSV used for fit")->required();
  test->add_option("--fit", sh.fit_dir, "Directory written by fit")->required();
  test->add_option("--out", sh.out, "Output directory")->required();
  test->add_option("--functional", functional_names,
                   "early, middle, late, switch[:c[:lo:hi]], max_threshold[:c[:lo:hi]], window:lo:hi");
  test->add_option("--alpha", topt.alpha, "FDR / FSR level")->check(CLI::Range(0.0, 1.0));
  test->add_option("--samples", topt.samples, "Posterior paths per unit")->check(CLI::PositiveNumber);
  test->add_option("--seed", topt.seed, "Master seed");
  test->add_option("--refine", topt.refine, "Grid points per observation interval for functionals")
      ->check(CLI::PositiveNumber);
  test->add_flag("--recompute", sh.recompute, "Recompute log-likelihoods instead of reading the cache");
  test->add_flag("--no-t-adjust", sh.no_t_adjust, "Ignore the df column");
  add_threads(test, sh.threads);

  // smooth
  std::vector<std::string> unit_ids;
  std::string grid_text;
  double level = 0.95;
  int deriv = 0;
  bool components = false;
  auto* sm = app.add_subcommand("smooth", "Posterior mean and credible band of selected units");
  sm->add_option("--input", sh.input, "Long CSV used for fit")->required();
  sm->add_option("--fit", sh.fit_dir, "Directory written by fit")->required();
  sm->add_option("--out", sh.out, "Output directory")->required();
  sm->add_option("--unit", unit_ids, "Unit id (repeatable)")->required();
  sm->add_option("--grid", grid_text, "Query times: lo:hi:step or a comma list (default: observed)");
  sm->add_option("--level", level, "Credible level")->check(CLI::Range(0.0, 1.0));
  sm->add_option("--deriv", deriv, "Derivative order of the smoothed curve")->check(CLI::NonNegativeNumber);
  sm->add_flag("--components", components, "Also write the per-component decomposition");
  sm->add_flag("--recompute", sh.recompute, "Recompute log-likelihoods instead of reading the cache");
  sm->add_flag("--no-t-adjust", sh.no_t_adjust, "Ignore the df column");
  add_threads(sm, sh.threads);

  // simulate / calibrate
  SimulationConfig simc;
  StudyOptions study;
  std::string rho_grid_text, alpha_text = "0.01,0.05,0.1,0.2";
  auto* sim = app.add_subcommand("simulate", "Simulated dataset, or a null-proportion sweep with --rho-grid");
  sim->add_option("--out", sh.out, "Output directory")->required();
  sim->add_option("--units", study.units, "Units per dataset")->check(CLI::PositiveNumber);
  sim->add_option("--rho", simc.rho, "Share of dynamic units")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--seed", study.seed, "Master seed");
  sim->add_option("--rho-grid", rho_grid_text, "lo:hi:step or list; runs the sweep");
  sim->add_option("--replicates", study.replicates, "Datasets per rho (sweep)")->check(CLI::PositiveNumber);
  sim->add_option("--orders", study.orders, "Test orders (sweep)")->delimiter(',');
  sim->add_option("--grid-size", study.grid_size, "Number of nonzero sigma values")->check(CLI::PositiveNumber);
  sim->add_option("--qmax", study.qmax, "Largest log-precision of the grid");
  sim->add_option("--epsilon", study.epsilon, "Tolerance of the Bayes-factor adjustment");
  add_threads(sim, sh.threads);

  double calib_rho = 0.2;
  auto* cal = app.add_subcommand("calibrate", "Empirical FDR and power over simulated replicates");
  cal->add_option("--out", sh.out, "Output directory")->required();
  cal->add_option("--rho", calib_rho, "Share of dynamic units")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--alpha", alpha_text, "Levels: lo:hi:step or list");
  cal->add_option("--units", study.units, "Units per dataset")->check(CLI::PositiveNumber);
  cal->add_option("--replicates", study.replicates, "Datasets")->check(CLI::PositiveNumber);
  cal->add_option("--orders", study.orders, "Test orders")->delimiter(',');
  cal->add_option("--seed", study.seed, "Master seed");
  cal->add_option("--grid-size", study.grid_size, "Number of nonzero sigma values")->check(CLI::PositiveNumber);
  cal->add_option("--qmax", study.qmax, "Largest log-precision of the grid");
  cal->add_option("--epsilon", study.epsilon, "Tolerance of the Bayes-factor adjustment");
  add_threads(cal, sh.threads);

  // adjust-se
  std::string adj_out;
  double one_beta = 0.0, one_se = 1.0, one_df = 0.0;
  auto* adj = app.add_subcommand("adjust-se", "t-adjusted standard errors");
  auto* adj_in = adj->add_option("--input", sh.input, "Long CSV with a df column");
  adj->add_option("--out", adj_out, "Output CSV (with --input)");
  auto* adj_beta = adj->add_option("--beta", one_beta, "Single estimate");
  adj->add_option("--se", one_se, "Its standard error");
  auto* adj_df = adj->add_option("--df", one_df, "Degrees of freedom");
  adj_in->excludes(adj_beta);

  for (auto* sub : {fit, test, sm, sim, cal, adj}) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) {
      fc.bf_adjust = !no_bf;
      fc.threads = sh.threads;
      const auto data = read_long_csv(sh.input, !sh.no_t_adjust);
      const auto result = fit_prior(data, fc);
      const fs::path dir(sh.out);
      write_prior_json(dir / "prior.json", result);
      write_loglik_cache(dir / "loglik.csv", result.lik);
      RunManifest m{"fit", 0, echo_config(fit), result.prior.sigma_grid, {"prior.json", "loglik.csv"}};
      if (result.adjustment) {
        write_mu_curve_csv(dir / "mu_curve.csv", *result.adjustment);
        m.outputs.push_back("mu_curve.csv");
      }
      write_manifest(dir / "manifest.json", m);
      if (!result.em.converged)
        std::cerr << "warning: EM stopped after " << result.em.iterations << " iterations without converging\n";
      std::cout << "units " << data.size() << ", components " << result.prior.num_components()
                << ", pi0 (mle) " << format_real(result.prior_mle.weights.front()) << ", pi0 "
                << format_real(result.prior.weights.front()) << '\n';
    } else if (*test) {
      topt.threads = sh.threads;
      std::vector<FunctionalSpec> fns;
      for (const auto& f : functional_names) fns.push_back(parse_functional(f));
      const auto data = read_long_csv(sh.input, !sh.no_t_adjust);
      const auto stored = read_prior_json(fs::path(sh.fit_dir) / "prior.json");
      const auto lik = load_or_compute(sh, data, stored.prior);
      const auto table = build_test_table(data, stored.prior, lik, fns, topt);
      const fs::path dir(sh.out);
      write_test_table_csv(dir / "test_table.csv", table);
      write_manifest(dir / "manifest_test.json",
                     {"test", topt.seed, echo_config(test), stored.prior.sigma_grid, {"test_table.csv"}});
      std::cout << "significant at alpha " << topt.alpha << ": "
                << table.fdr.num_selected(topt.alpha) << " of " << data.size() << '\n';
    } else if (*sm) {
      const auto data = read_long_csv(sh.input, !sh.no_t_adjust);
      const auto stored = read_prior_json(fs::path(sh.fit_dir) / "prior.json");
      const auto lik = load_or_compute(sh, data, stored.prior);
      std::vector<std::string> ids;
      for (const auto& u : data) ids.push_back(u.id);
      const std::vector<double> grid = grid_text.empty() ? std::vector<double>{} : parse_real_list(grid_text);
      const fs::path dir(sh.out);
      RunManifest m{"smooth", 0, echo_config(sm), stored.prior.sigma_grid, {}};
      for (const auto& id : unit_ids) {
        const auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) {
          std::string msg = "unknown unit '" + id + "'";
          const auto near = near_matches(id, ids);
          if (!near.empty()) {
            msg += "; did you mean:";
            for (const auto& n : near) msg += " " + n;
          }
          throw DataError(msg);
        }
        const auto j = static_cast<std::size_t>(it - ids.begin());
        const auto post = posterior_mixture(data[j], stored.prior, loglik_row(lik, j));
        const auto res = smooth(data[j], post, grid.empty() ? data[j].times : grid, level, deriv);
        const std::string base = file_safe(id);
        write_smooth_csv(dir / ("smooth_" + base + ".csv"), res);
        m.outputs.push_back("smooth_" + base + ".csv");
        if (components) {
          write_components_csv(dir / ("components_" + base + ".csv"), res);
          m.outputs.push_back("components_" + base + ".csv");
        }
      }
      write_manifest(dir / "manifest_smooth.json", m);
    } else if (*sim) {
      study.threads = sh.threads;
      const fs::path dir(sh.out);
      if (rho_grid_text.empty()) {
        simc.units = study.units;
        simc.seed = study.seed;
        const auto s = generate_dataset(simc);
        write_dataset_csv(dir / "data.csv", s.data);
        write_truth_csv(dir / "truth.csv", s.data, s.truth);
        write_manifest(dir / "manifest_simulate.json",
                       {"simulate", study.seed, echo_config(sim), {}, {"data.csv", "truth.csv"}});
      } else {
        const auto rows = run_pi0_sweep(parse_real_list(rho_grid_text), study);
        write_pi0_sweep_csv(dir / "pi0_sweep.csv", rows);
        write_manifest(dir / "manifest_simulate.json",
                       {"simulate", study.seed, echo_config(sim), {}, {"pi0_sweep.csv"}});
      }
    } else if (*cal) {
      study.threads = sh.threads;
      const auto rows = run_calibration(calib_rho, parse_real_list(alpha_text), study);
      const fs::path dir(sh.out);
      write_calibration_csv(dir / "calibration.csv", rows);
      write_manifest(dir / "manifest_calibrate.json",
                     {"calibrate", study.seed, echo_config(cal), {}, {"calibration.csv"}});
    } else if (*adj) {
      if (!sh.input.empty()) {
        if (adj_out.empty()) throw InvalidArgument("adjust-se: --out is required with --input");
        const auto records = read_long_records(sh.input);
        write_dataset_csv(adj_out, group_records(records, true));
      } else {
        if (adj_beta->count() == 0 || adj_df->count() == 0)
          throw InvalidArgument("adjust-se: give --input, or --beta, --se and --df");
        std::cout << format_real(adjust_se(one_beta, one_se, one_df)) << '\n';
      }
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

}  // namespace

}  // namespace fash::cli
