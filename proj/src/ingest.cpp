#include "fash/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "fash/errors.hpp"

#ifndef FASH_VERSION
#define FASH_VERSION "0.0.0"
#endif

namespace fash {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const char* library_version() { return FASH_VERSION; }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

double parse_real(std::string_view text, const fs::path& path, std::size_t line, const char* column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last)
    throw DataError(where(path, line) + "cannot parse " + column + " value '" + std::string(text) + "'");
  return v;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<LongRecord> read_long_records(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  int col_unit = -1, col_t = -1, col_beta = -1, col_se = -1, col_df = -1;
  std::size_t ncols = 0;

  std::vector<LongRecord> records;
  std::unordered_map<std::string, std::map<double, std::size_t>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    auto fields = split(view);
    if (!have_header) {
      if (lineno == 1 && fields[0].size() >= 3 && fields[0].substr(0, 3) == "\xEF\xBB\xBF")
        fields[0].remove_prefix(3);
      for (std::size_t c = 0; c < fields.size(); ++c) {
        const auto f = fields[c];
        int* slot = f == "unit" ? &col_unit : f == "t" ? &col_t : f == "beta_hat" ? &col_beta
                  : f == "se" ? &col_se : f == "df" ? &col_df : nullptr;
        if (slot == nullptr)
          throw DataError(where(path, lineno) + "unexpected column '" + std::string(f) +
                          "' (expected unit,t,beta_hat,se[,df])");
        if (*slot >= 0) throw DataError(where(path, lineno) + "duplicate column '" + std::string(f) + "'");
        *slot = static_cast<int>(c);
      }
      if (col_unit < 0 || col_t < 0 || col_beta < 0 || col_se < 0)
        throw DataError(where(path, lineno) + "header must contain unit,t,beta_hat,se");
      ncols = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != ncols)
      throw DataError(where(path, lineno) + "expected " + std::to_string(ncols) + " fields, found " +
                      std::to_string(fields.size()));
    LongRecord r;
    r.line = lineno;
    r.unit = std::string(fields[col_unit]);
    if (r.unit.empty()) throw DataError(where(path, lineno) + "empty unit id");
    r.t = parse_real(fields[col_t], path, lineno, "t");
    r.beta_hat = parse_real(fields[col_beta], path, lineno, "beta_hat");
    r.se = parse_real(fields[col_se], path, lineno, "se");
    if (!std::isfinite(r.t) || !std::isfinite(r.beta_hat))
      throw DataError(where(path, lineno) + "t and beta_hat must be finite");
    if (!(r.se > 0.0) || !std::isfinite(r.se))
      throw DataError(where(path, lineno) + "se must be positive and finite");
    if (col_df >= 0 && !fields[col_df].empty()) {
      r.df = parse_real(fields[col_df], path, lineno, "df");
      if (!(*r.df > 2.0)) throw DataError(where(path, lineno) + "df must exceed 2");
    }
    auto& times = seen[r.unit];
    const auto [it, inserted] = times.emplace(r.t, lineno);
    if (!inserted)
      throw DataError(where(path, lineno) + "duplicate (unit, t) = (" + r.unit + ", " +
                      format_real(r.t) + "), first seen on line " + std::to_string(it->second));
    records.push_back(std::move(r));
  }
  if (!have_header) throw DataError(path.string() + ": empty file (no header, no data)");
  if (records.empty()) throw DataError(path.string() + ": empty dataset (header only)");
  return records;
}

Dataset group_records(const std::vector<LongRecord>& records, bool apply_t_adjust) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<const LongRecord*>> groups;
  for (const auto& r : records) {
    const auto [it, inserted] = index.emplace(r.unit, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  Dataset data;
  data.reserve(groups.size());
  for (auto& g : groups) {
    std::stable_sort(g.begin(), g.end(), [](const LongRecord* a, const LongRecord* b) { return a->t < b->t; });
    ObservationUnit u;
    u.id = g.front()->unit;
    for (const LongRecord* r : g) {
      u.times.push_back(r->t);
      u.beta_hat.push_back(r->beta_hat);
      double se = r->se;
      if (apply_t_adjust && r->df) {
        try {
          se = adjust_se(r->beta_hat, r->se, *r->df);
        } catch (const std::exception& e) {
          throw DataError("line " + std::to_string(r->line) + ": " + e.what());
        }
      }
      u.se.push_back(se);
    }
    u.validate();
    data.push_back(std::move(u));
  }
  return data;
}

Dataset read_long_csv(const fs::path& path, bool apply_t_adjust) {
  return group_records(read_long_records(path), apply_t_adjust);
}

double adjust_se(double beta_hat, double se, double nu) {
  if (!(nu > 2.0)) throw InvalidArgument("adjust_se: degrees of freedom must exceed 2");
  if (!(se > 0.0) || !std::isfinite(se)) throw InvalidArgument("adjust_se: se must be positive");
  if (!std::isfinite(beta_hat)) throw InvalidArgument("adjust_se: beta_hat must be finite");
  const boost::math::students_t_distribution<double> tdist(nu);
  const boost::math::normal_distribution<double> ndist;
  const double x = std::abs(beta_hat) / se;
  if (x < 1e-8) {
    const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return se * phi0 / boost::math::pdf(tdist, 0.0);
  }
  const double tail = boost::math::cdf(boost::math::complement(tdist, x));
  if (!(tail > std::numeric_limits<double>::min()))
    throw NumericFailure("adjust_se: t tail probability underflows at |beta_hat/se| = " + format_real(x));
  const double z = boost::math::quantile(boost::math::complement(ndist, tail));
  return std::abs(beta_hat) / z;
}

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  auto out = open_output(path);
  out << "unit,t,beta_hat,se\n";
  for (const auto& u : data)
    for (std::size_t r = 0; r < u.size(); ++r)
      out << u.id << ',' << format_real(u.times[r]) << ',' << format_real(u.beta_hat[r]) << ','
          << format_real(u.se[r]) << '\n';
  finish(out, path);
}

void write_truth_csv(const fs::path& path, const Dataset& data, const GroundTruth& truth) {
  auto out = open_output(path);
  out << "unit,category,t,beta\n";
  for (std::size_t j = 0; j < data.size(); ++j)
    for (std::size_t r = 0; r < data[j].size(); ++r)
      out << data[j].id << ',' << category_label(truth.category[j]) << ','
          << format_real(data[j].times[r]) << ',' << format_real(truth.beta[j][r]) << '\n';
  finish(out, path);
}

void write_test_table_csv(const fs::path& path, const TestTable& table) {
  auto out = open_output(path);
  out << "unit,lfdr,fdr,significant";
  for (const auto& name : table.functional_names)
    out << ",lfsr_" << name << ",lfsr_se_" << name << ",fsr_" << name << ",significant_" << name;
  out << '\n';
  const auto sig = table.fdr.decisions(table.alpha);
  std::vector<std::vector<bool>> fsig;
  for (const auto& c : table.fsr) fsig.push_back(c.decisions(table.alpha));
  for (std::size_t j = 0; j < table.unit_ids.size(); ++j) {
    out << table.unit_ids[j] << ',' << format_real(table.lfdr[j]) << ','
        << format_real(table.fdr.by_unit[j]) << ',' << (sig[j] ? 1 : 0);
    for (std::size_t f = 0; f < table.functional_names.size(); ++f)
      out << ',' << format_real(table.lfsr[f][j]) << ',' << format_real(table.lfsr_se[f][j]) << ','
          << format_real(table.fsr[f].by_unit[j]) << ',' << (fsig[f][j] ? 1 : 0);
    out << '\n';
  }
  finish(out, path);
}

void write_smooth_csv(const fs::path& path, const SmoothResult& result) {
  auto out = open_output(path);
  out << "t,mean,sd,lower,upper\n";
  for (std::size_t i = 0; i < result.t.size(); ++i)
    out << format_real(result.t[i]) << ',' << format_real(result.mean[i]) << ','
        << format_real(result.sd[i]) << ',' << format_real(result.lower[i]) << ','
        << format_real(result.upper[i]) << '\n';
  finish(out, path);
}

void write_components_csv(const fs::path& path, const SmoothResult& result) {
  auto out = open_output(path);
  out << "component,sigma,weight,t,mean,sd\n";
  for (const auto& c : result.components)
    for (std::size_t i = 0; i < result.t.size(); ++i)
      out << c.component << ',' << format_real(c.sigma) << ',' << format_real(c.weight) << ','
          << format_real(result.t[i]) << ',' << format_real(c.mean[i]) << ','
          << format_real(c.sd[i]) << '\n';
  finish(out, path);
}

void write_mu_curve_csv(const fs::path& path, const BfAdjustResult& result) {
  auto out = open_output(path);
  out << "c,mu,pi0\n";
  for (const auto& m : result.mu_curve)
    out << format_real(m.cutoff) << ',' << format_real(m.mu) << ',' << format_real(m.pi0) << '\n';
  finish(out, path);
}

void write_pi0_sweep_csv(const fs::path& path, const std::vector<Pi0Row>& rows) {
  auto out = open_output(path);
  out << "rho,replicate,order,true_pi0,pi0_mle,pi0_adjusted\n";
  for (const auto& r : rows)
    out << format_real(r.rho) << ',' << r.replicate << ',' << r.order << ',' << format_real(r.true_pi0)
        << ',' << format_real(r.pi0_mle) << ',' << format_real(r.pi0_adjusted) << '\n';
  finish(out, path);
}

void write_calibration_csv(const fs::path& path, const std::vector<CalibrationRow>& rows) {
  auto out = open_output(path);
  out << "rho,alpha,order,pipeline,replicates,empirical_fdr,power\n";
  for (const auto& r : rows)
    out << format_real(r.rho) << ',' << format_real(r.alpha) << ',' << r.order << ',' << r.pipeline
        << ',' << r.replicates << ',' << format_real(r.empirical_fdr) << ',' << format_real(r.power)
        << '\n';
  finish(out, path);
}

void write_loglik_cache(const fs::path& path, const LikelihoodMatrix& lik) {
  auto out = open_output(path);
  out << "unit,row_offset";
  for (Eigen::Index k = 0; k < lik.cols(); ++k) out << ",l" << k;
  out << '\n';
  for (Eigen::Index j = 0; j < lik.rows(); ++j) {
    out << lik.unit_ids[j] << ',' << format_real(lik.row_offset[j]);
    for (Eigen::Index k = 0; k < lik.cols(); ++k) out << ',' << format_real(lik.loglik(j, k));
    out << '\n';
  }
  finish(out, path);
}

LikelihoodMatrix read_loglik_cache(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> rows;
  LikelihoodMatrix lik;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view);
    if (cols == 0) {
      if (fields.size() < 3 || fields[0] != "unit" || fields[1] != "row_offset")
        throw DataError(where(path, lineno) + "not a log-likelihood cache");
      cols = fields.size() - 2;
      continue;
    }
    if (fields.size() != cols + 2)
      throw DataError(where(path, lineno) + "wrong number of fields in cache row");
    lik.unit_ids.emplace_back(fields[0]);
    lik.row_offset.push_back(parse_real(fields[1], path, lineno, "row_offset"));
    std::vector<double> row(cols);
    for (std::size_t k = 0; k < cols; ++k) row[k] = parse_real(fields[k + 2], path, lineno, "loglik");
    rows.push_back(std::move(row));
  }
  if (cols == 0 || rows.empty()) throw DataError(path.string() + ": empty log-likelihood cache");
  lik.loglik.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t k = 0; k < cols; ++k) lik.loglik(j, k) = rows[j][k];
  return lik;
}

void write_prior_json(const fs::path& path, const FitOutput& fit) {
  ordered_json j;
  j["order"] = fit.prior.order;
  j["diffuse_variance"] = fit.prior.diffuse_variance;
  j["sigma_grid"] = fit.prior.sigma_grid;
  j["weights_mle"] = fit.prior_mle.weights;
  j["weights"] = fit.prior.weights;
  j["pi0_mle"] = fit.prior_mle.weights.front();
  j["pi0"] = fit.prior.weights.front();
  j["bf_adjusted"] = fit.adjustment.has_value();
  if (fit.adjustment) {
    const double c = fit.adjustment->c_star;
    if (std::isinf(c))
      j["c_star"] = "inf";
    else
      j["c_star"] = c;
  }
  j["em_iterations"] = fit.em.iterations;
  j["em_converged"] = fit.em.converged;
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

StoredPrior read_prior_json(const fs::path& path) {
  auto in = open_input(path);
  StoredPrior s;
  try {
    const auto j = ordered_json::parse(in);
    MixturePrior p;
    p.order = j.at("order").get<int>();
    p.diffuse_variance = j.at("diffuse_variance").get<double>();
    p.sigma_grid = j.at("sigma_grid").get<std::vector<double>>();
    p.weights = j.at("weights_mle").get<std::vector<double>>();
    s.prior_mle = p;
    p.weights = j.at("weights").get<std::vector<double>>();
    s.prior = p;
    s.adjusted = j.value("bf_adjusted", false);
    if (j.contains("c_star")) {
      const auto& c = j["c_star"];
      s.c_star = c.is_string() ? std::numeric_limits<double>::infinity() : c.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed prior file: " + e.what());
  }
  try {
    s.prior.validate();
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return s;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  ordered_json j;
  j["command"] = manifest.command;
  j["version"] = library_version();
  j["seed"] = manifest.seed;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : manifest.config) cfg[k] = v;
  j["config"] = cfg;
  j["sigma_grid"] = manifest.sigma_grid;
  j["outputs"] = manifest.outputs;
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

}  // namespace fash
