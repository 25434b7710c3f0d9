#include "tfo/rate.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "tfo/csv.hpp"

namespace tfo::rate {

namespace {

std::vector<double> toc_from(const double* gamma, const double* priority, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
  std::vector<double> prefix(n);
  double s = 0;
  for (std::size_t k = 0; k < n; ++k) prefix[k] = (s += gamma[order[k]]);
  // The overall mean uses the same prefix sum so toc at q = 1 is exactly zero.
  const double overall = prefix[n - 1] / double(n);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = prefix[k] / double(k + 1) - overall;
  return out;
}

}  // namespace

std::vector<double> toc(const Vec& gamma, const Vec& priority) {
  if (gamma.size() != priority.size()) throw Error(ErrorCode::InvalidArgument, "gamma and priority differ in length");
  if (gamma.size() < 2) throw Error(ErrorCode::InsufficientData, "TOC needs at least two rows");
  return toc_from(gamma.data(), priority.data(), std::size_t(gamma.size()));
}

double autoc(const std::vector<double>& toc_values) {
  if (toc_values.empty()) return 0;
  return std::accumulate(toc_values.begin(), toc_values.end(), 0.0) / double(toc_values.size());
}

TocCurve rate(const Vec& gamma, const Vec& priority, int n_bootstrap, std::uint64_t seed) {
  TocCurve c;
  c.toc = toc(gamma, priority);
  c.rate = autoc(c.toc);
  c.n_bootstrap = n_bootstrap;
  const std::size_t n = std::size_t(gamma.size());
  for (std::size_t i = 1; i <= n; ++i) c.q.push_back(double(i) / double(n));
  if (n_bootstrap < 2) {
    c.band_lo = c.band_hi = c.toc;
    return c;
  }
  std::vector<std::vector<double>> curves(static_cast<std::size_t>(n_bootstrap));
  std::vector<double> rates(static_cast<std::size_t>(n_bootstrap));
  parallel_for(curves.size(), [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> g(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = Eigen::Index(pick(rng));
      g[i] = gamma[j];
      p[i] = priority[j];
    }
    curves[b] = toc_from(g.data(), p.data(), n);
    rates[b] = autoc(curves[b]);
  });
  const Eigen::Map<const Vec> r(rates.data(), Eigen::Index(rates.size()));
  c.se = sample_sd(r);
  c.band_lo.resize(n);
  c.band_hi.resize(n);
  std::vector<double> column(curves.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t b = 0; b < curves.size(); ++b) column[b] = curves[b][k];
    c.band_lo[k] = quantile(column, 0.025);
    c.band_hi[k] = quantile(column, 0.975);
  }
  return c;
}

CrossfitScores crossfit_scores(const Mat& x_train, const Vec& y_train, const Vec& w_train,
                               const Mat& x_eval, const Vec& y_eval, const Vec& w_eval,
                               const std::vector<std::string>& names,
                               const forest::ForestConfig& config) {
  if (x_train.cols() != x_eval.cols())
    throw Error(ErrorCode::SchemaMismatch, "training and evaluation covariates differ");
  forest::ForestConfig eval_config = config;
  eval_config.seed = derive_seed(config.seed, 0xe7a1);
  const auto train_fit = forest::fit_causal_forest(x_train, y_train, w_train, names, config);
  CrossfitScores s;
  s.priority = train_fit.forest.predict(x_eval);
  s.eval_fit = forest::fit_causal_forest(x_eval, y_eval, w_eval, names, eval_config);
  s.gamma = forest::dr_scores(y_eval, w_eval, s.eval_fit.nuisances.e, s.eval_fit.nuisances.m,
                              s.eval_fit.tau_oob);
  return s;
}

Mat covariate_matrix(const std::vector<data::CovariateRow>& rows, const std::vector<std::string>& covariates) {
  const glm::Frame f = data::to_frame(rows);
  Mat x(f.rows(), Eigen::Index(covariates.size()));
  for (std::size_t j = 0; j < covariates.size(); ++j) x.col(Eigen::Index(j)) = f.column(covariates[j]);
  return x;
}

CrossfitScores crossfit_scores(const std::vector<data::CovariateRow>& train,
                               const std::vector<data::CovariateRow>& eval,
                               const std::vector<std::string>& covariates,
                               const forest::ForestConfig& config) {
  const auto ts = data::seasons(train);
  const std::set<std::string> train_seasons(ts.begin(), ts.end());
  for (const auto& s : data::seasons(eval))
    if (train_seasons.count(s))
      throw Error(ErrorCode::SeasonOverlap, "season " + s + " is in both training and evaluation sets");
  const auto outcome = [](const std::vector<data::CovariateRow>& rows, bool treatment) {
    Vec v(Eigen::Index(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) v[Eigen::Index(i)] = treatment ? rows[i].w : rows[i].y;
    return v;
  };
  return crossfit_scores(covariate_matrix(train, covariates), outcome(train, false), outcome(train, true),
                         covariate_matrix(eval, covariates), outcome(eval, false), outcome(eval, true),
                         covariates, config);
}

void write_toc_csv(std::ostream& out, const TocCurve& curve) {
  csv::write_row(out, {"q", "toc", "band_lo", "band_hi"});
  for (std::size_t k = 0; k < curve.q.size(); ++k)
    csv::write_row(out, {csv::format_number(curve.q[k]), csv::format_number(curve.toc[k]),
                         csv::format_number(curve.band_lo[k]), csv::format_number(curve.band_hi[k])});
}

nlohmann::ordered_json to_json(const TocCurve& curve, const std::string& rule) {
  nlohmann::ordered_json j;
  j["rule"] = rule;
  j["estimate"] = curve.rate;
  j["se"] = curve.se;
  j["n_bootstrap"] = curve.n_bootstrap;
  j["n"] = curve.q.size();
  return j;
}

}  // namespace tfo::rate
