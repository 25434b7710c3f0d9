#include "tfo/ate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tfo/csv.hpp"

namespace tfo::ate {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::IPW: return "IPW";
    case Method::IPWHajek: return "IPW-Hajek";
    case Method::AIPW: return "AIPW";
    case Method::Forest: return "Forest";
  }
  return "";
}

AteResult from_scores(Vec psi, Method method, std::size_t n1, std::size_t n0) {
  AteResult r;
  r.method = method;
  r.n1 = n1;
  r.n0 = n0;
  const double n = double(psi.size());
  r.estimate = psi.mean();
  r.se = sample_sd(psi) / std::sqrt(n);
  r.ci_lo = r.estimate - 1.96 * r.se;
  r.ci_hi = r.estimate + 1.96 * r.se;
  r.p_value = r.se > 0 ? two_sided_p(r.estimate / r.se) : (r.estimate == 0 ? 1.0 : 0.0);
  r.psi = std::move(psi);
  return r;
}

namespace {

std::pair<std::size_t, std::size_t> check_inputs(const Vec& y, const Vec& w, const Vec& e) {
  if (y.size() != w.size() || y.size() != e.size())
    throw Error(ErrorCode::InvalidArgument, "y, w and e must have equal length");
  std::size_t n1 = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] != 0 && w[i] != 1) throw Error(ErrorCode::InvalidArgument, "treatment must be 0/1");
    if (!(e[i] > 0 && e[i] < 1))
      throw Error(ErrorCode::PositivityViolation, "propensity outside (0, 1) at row " + std::to_string(i));
    if (w[i] == 1) ++n1;
  }
  const std::size_t n0 = std::size_t(w.size()) - n1;
  if (n1 == 0 || n0 == 0)
    throw Error(ErrorCode::DegenerateGroups, "need both attempts and non-attempts (n1=" +
                                                 std::to_string(n1) + ", n0=" + std::to_string(n0) + ")");
  return {n1, n0};
}

}  // namespace

AteResult ipw(const Vec& y, const Vec& w, const Vec& e) {
  const auto [n1, n0] = check_inputs(y, w, e);
  Vec psi = (w.array() * y.array() / e.array() -
             (1.0 - w.array()) * y.array() / (1.0 - e.array()))
                .matrix();
  return from_scores(std::move(psi), Method::IPW, n1, n0);
}

AteResult ipw_hajek(const Vec& y, const Vec& w, const Vec& e) {
  const auto [n1, n0] = check_inputs(y, w, e);
  const Eigen::ArrayXd a1 = w.array() / e.array();
  const Eigen::ArrayXd a0 = (1.0 - w.array()) / (1.0 - e.array());
  const double mu1 = (a1 * y.array()).sum() / a1.sum();
  const double mu0 = (a0 * y.array()).sum() / a0.sum();
  Vec psi = (mu1 + a1 * (y.array() - mu1) / a1.mean() - mu0 - a0 * (y.array() - mu0) / a0.mean()).matrix();
  return from_scores(std::move(psi), Method::IPWHajek, n1, n0);
}

AteResult aipw(const Vec& y, const Vec& w, const Vec& e, const Vec& m1, const Vec& m0) {
  const auto [n1, n0] = check_inputs(y, w, e);
  if (m1.size() != y.size() || m0.size() != y.size())
    throw Error(ErrorCode::InvalidArgument, "outcome predictions must match y in length");
  Vec psi = (m1.array() - m0.array() + w.array() * (y.array() - m1.array()) / e.array() -
             (1.0 - w.array()) * (y.array() - m0.array()) / (1.0 - e.array()))
                .matrix();
  return from_scores(std::move(psi), Method::AIPW, n1, n0);
}

Vec ipw_weights(const Vec& w, const Vec& e) {
  return (w.array() / e.array() + (1.0 - w.array()) / (1.0 - e.array())).matrix();
}

std::vector<glm::Term> model_terms(int spline_df, bool with_season) {
  std::vector<glm::Term> terms;
  for (const auto& c : data::table1_covariates()) terms.push_back(glm::Term::spline(c, spline_df));
  terms.push_back(glm::Term::linear("period_2"));
  terms.push_back(glm::Term::linear("period_3"));
  if (with_season) terms.push_back(glm::Term::categorical("season"));
  return terms;
}

glm::FittedGlm fit_propensity(const glm::Frame& frame, bool with_season, const PipelineConfig& cfg) {
  glm::IrlsOptions opt;
  opt.clip = cfg.clip;
  return glm::fit(frame, model_terms(cfg.spline_df, with_season), frame.column("w"),
                  glm::Family::Binomial, cfg.propensity_link, opt);
}

Nuisances fit_nuisances(const glm::Frame& frame, bool with_season, const PipelineConfig& cfg) {
  Nuisances n;
  n.propensity = fit_propensity(frame, with_season, cfg);
  n.e = glm::predict(n.propensity, frame);

  const Vec w = frame.column("w");
  std::vector<int> treated, control;
  for (Eigen::Index i = 0; i < w.size(); ++i) (w[i] == 1 ? treated : control).push_back(int(i));
  if (treated.empty() || control.empty())
    throw Error(ErrorCode::DegenerateGroups, "need both attempts and non-attempts");
  const auto terms = model_terms(cfg.spline_df, with_season);
  const auto fit_arm = [&](const std::vector<int>& idx) {
    const glm::Frame arm = frame.select_rows(idx);
    // The basis is learned on the full frame so both arms share knots and levels.
    glm::FittedGlm m;
    m.family = glm::Family::Gaussian;
    m.link = glm::Link::Identity;
    m.basis = glm::learn_basis(frame, terms);
    m.names = glm::column_names(m.basis);
    const Mat x = glm::apply_basis(m.basis, arm);
    glm::check_rank(x, m.names);
    const auto r = glm::fit_irls<double>(x, arm.column("y"), m.family, m.link);
    m.coef = r.coef;
    m.iterations = r.iterations;
    m.deviance = r.deviance;
    return m;
  };
  n.outcome1 = fit_arm(treated);
  n.outcome0 = fit_arm(control);
  n.m1 = glm::predict(n.outcome1, frame);
  n.m0 = glm::predict(n.outcome0, frame);
  return n;
}

std::vector<StratumResult> estimate_pipeline(const std::vector<data::CovariateRow>& rows,
                                             const PipelineConfig& cfg, const std::string& stratum) {
  std::vector<std::pair<std::string, std::vector<data::CovariateRow>>> strata;
  const auto all_seasons = data::seasons(rows);
  if (stratum.empty() || stratum != "pooled") {
    for (const auto& s : all_seasons)
      if (stratum.empty() || stratum == s) strata.emplace_back(s, data::filter_season(rows, s));
  }
  if (stratum.empty() || stratum == "pooled") strata.emplace_back("pooled", rows);
  if (strata.empty() || strata.front().second.empty())
    throw Error(ErrorCode::InsufficientData, "no rows for stratum '" + stratum + "'");

  std::vector<StratumResult> results;
  for (auto& [name, subset] : strata) {
    StratumResult r;
    r.stratum = name;
    r.frame = data::to_frame(subset);
    const bool with_season = name == "pooled" && data::seasons(subset).size() > 1;
    r.nuisances = fit_nuisances(r.frame, with_season, cfg);
    const Vec y = r.frame.column("y"), w = r.frame.column("w");
    r.aipw = aipw(y, w, r.nuisances.e, r.nuisances.m1, r.nuisances.m0);
    r.ipw = ipw(y, w, r.nuisances.e);
    results.push_back(std::move(r));
  }
  return results;
}

BalanceReport balance_report(const glm::Frame& frame, const std::vector<std::string>& covariates,
                             const Vec& w, const Vec& weights) {
  BalanceReport report;
  for (const auto& name : covariates) {
    const Vec x = frame.column(name);
    double s1 = 0, s0 = 0, ws1 = 0, ws0 = 0, sw1 = 0, sw0 = 0;
    std::size_t n1 = 0, n0 = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (w[i] == 1) {
        s1 += x[i], ws1 += weights[i] * x[i], sw1 += weights[i], ++n1;
      } else {
        s0 += x[i], ws0 += weights[i] * x[i], sw0 += weights[i], ++n0;
      }
    }
    if (n1 < 2 || n0 < 2) throw Error(ErrorCode::DegenerateGroups, "balance needs two rows per arm");
    const double m1 = s1 / double(n1), m0 = s0 / double(n0);
    double v1 = 0, v0 = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (w[i] == 1) v1 += (x[i] - m1) * (x[i] - m1);
      else v0 += (x[i] - m0) * (x[i] - m0);
    }
    v1 /= double(n1 - 1);
    v0 /= double(n0 - 1);
    const double sd = std::sqrt((v1 + v0) / 2.0);
    BalanceRow row;
    row.covariate = name;
    if (sd <= 0) {
      row.zero_variance = true;
    } else {
      row.raw_smd = (m1 - m0) / sd;
      row.weighted_smd = (ws1 / sw1 - ws0 / sw0) / sd;
    }
    report.rows.push_back(row);
  }
  return report;
}

OverlapReport overlap_report(const Vec& e, const Vec& w, int bins) {
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "need at least one bin");
  if (e.size() == 0) throw Error(ErrorCode::InsufficientData, "no propensities");
  OverlapReport r;
  const double lo = e.minCoeff(), hi = e.maxCoeff();
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  for (int b = 0; b <= bins; ++b) r.edges.push_back(lo + width * b);
  r.counts0.assign(std::size_t(bins), 0);
  r.counts1.assign(std::size_t(bins), 0);
  r.min0 = r.min1 = 1;
  r.max0 = r.max1 = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const int b = std::clamp(int((e[i] - lo) / width), 0, bins - 1);
    if (w[i] == 1) {
      ++r.counts1[std::size_t(b)];
      r.min1 = std::min(r.min1, e[i]), r.max1 = std::max(r.max1, e[i]);
    } else {
      ++r.counts0[std::size_t(b)];
      r.min0 = std::min(r.min0, e[i]), r.max0 = std::max(r.max0, e[i]);
    }
  }
  return r;
}

nlohmann::ordered_json to_json(const AteResult& r, const std::string& stratum) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(r.method));
  j["stratum"] = stratum;
  j["n1"] = r.n1;
  j["n0"] = r.n0;
  j["estimate"] = r.estimate;
  j["se"] = r.se;
  j["ci"] = {r.ci_lo, r.ci_hi};
  j["p"] = r.p_value;
  return j;
}

void write_balance_csv(std::ostream& out, const BalanceReport& report) {
  csv::write_row(out, {"covariate", "raw_smd", "weighted_smd", "zero_variance"});
  for (const auto& r : report.rows)
    csv::write_row(out, {r.covariate, csv::format_number(r.raw_smd), csv::format_number(r.weighted_smd),
                         r.zero_variance ? "1" : "0"});
}

void write_overlap_csv(std::ostream& out, const OverlapReport& report) {
  csv::write_row(out, {"bin_lo", "bin_hi", "count_nonattempt", "count_attempt"});
  for (std::size_t b = 0; b < report.counts0.size(); ++b)
    csv::write_row(out, {csv::format_number(report.edges[b]), csv::format_number(report.edges[b + 1]),
                         std::to_string(report.counts0[b]), std::to_string(report.counts1[b])});
}

}  // namespace tfo::ate
