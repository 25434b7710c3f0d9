// Average treatment effect estimators (inverse probability weighting and its
// augmented, doubly robust form) with influence-function standard errors, and
// the balance / overlap diagnostics of the fitted propensity.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfo/dataset.hpp"
#include "tfo/glm.hpp"

namespace tfo::ate {

enum class Method { IPW, IPWHajek, AIPW, Forest };
std::string_view to_string(Method m);

struct AteResult {
  Method method = Method::AIPW;
  double estimate = 0;
  double se = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  double p_value = 1;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  /// Per-unit influence scores; their mean is `estimate`.
  Vec psi;
};

/// estimate = mean(psi), se = sd(psi)/sqrt(n), ci = estimate -/+ 1.96 se.
AteResult from_scores(Vec psi, Method method, std::size_t n1, std::size_t n0);

/// Horvitz-Thompson: psi = w y / e - (1 - w) y / (1 - e).
AteResult ipw(const Vec& y, const Vec& w, const Vec& e);
/// Weights normalized within arm; psi is the linearized influence function.
AteResult ipw_hajek(const Vec& y, const Vec& w, const Vec& e);
/// psi = m1 - m0 + w (y - m1) / e - (1 - w)(y - m0) / (1 - e).
AteResult aipw(const Vec& y, const Vec& w, const Vec& e, const Vec& m1, const Vec& m0);

/// Inverse probability weights: w / e + (1 - w) / (1 - e).
Vec ipw_weights(const Vec& w, const Vec& e);

struct PipelineConfig {
  int spline_df = 4;
  double clip = 0.01;
  glm::Link propensity_link = glm::Link::Probit;
};

/// Propensity terms: splines on the continuous covariates, period indicators,
/// and season indicators when `with_season`.
std::vector<glm::Term> model_terms(int spline_df, bool with_season);

struct Nuisances {
  glm::FittedGlm propensity;
  glm::FittedGlm outcome1;
  glm::FittedGlm outcome0;
  Vec e;   // clipped propensity
  Vec m1;  // predicted outcome under attempt
  Vec m0;  // predicted outcome under non-attempt
};

/// Probit propensity on all rows, Gaussian outcome models within each arm,
/// all predicted on every row.
Nuisances fit_nuisances(const glm::Frame& frame, bool with_season, const PipelineConfig& cfg);
/// Propensity only.
glm::FittedGlm fit_propensity(const glm::Frame& frame, bool with_season, const PipelineConfig& cfg);

struct StratumResult {
  std::string stratum;  // season label or "pooled"
  AteResult aipw;
  AteResult ipw;
  Nuisances nuisances;
  glm::Frame frame;
};

/// One result per season (sorted) followed by the pooled result. When
/// `stratum` is non-empty only that stratum is estimated.
std::vector<StratumResult> estimate_pipeline(const std::vector<data::CovariateRow>& rows,
                                             const PipelineConfig& cfg,
                                             const std::string& stratum = {});

struct BalanceRow {
  std::string covariate;
  double raw_smd = 0;
  double weighted_smd = 0;
  bool zero_variance = false;
};

struct BalanceReport {
  double threshold = 0.05;
  std::vector<BalanceRow> rows;
};

/// SMD = (treated mean - control mean) / pooled unweighted SD, where the pooled
/// SD is sqrt((var1 + var0) / 2). Weighted means normalize weights within arm.
BalanceReport balance_report(const glm::Frame& frame, const std::vector<std::string>& covariates,
                             const Vec& w, const Vec& weights);

struct OverlapReport {
  std::vector<double> edges;  // bins + 1 edges shared by both groups
  std::vector<std::size_t> counts0;
  std::vector<std::size_t> counts1;
  double min0 = 0, max0 = 0, min1 = 0, max1 = 0;
};

OverlapReport overlap_report(const Vec& e, const Vec& w, int bins = 20);

nlohmann::ordered_json to_json(const AteResult& r, const std::string& stratum);
void write_balance_csv(std::ostream& out, const BalanceReport& report);
void write_overlap_csv(std::ostream& out, const OverlapReport& report);

}  // namespace tfo::ate
