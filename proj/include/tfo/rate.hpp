// Targeting operator characteristic (TOC) curves and the rank-weighted average
// treatment effect (RATE, AUTOC variant) with bootstrap inference.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfo/dataset.hpp"
#include "tfo/forest.hpp"

namespace tfo::rate {

/// toc[i-1] = mean of gamma over the top i rows by priority minus the overall
/// mean, for i = 1..n (q = i/n). Descending stable order; ties keep row order.
std::vector<double> toc(const Vec& gamma, const Vec& priority);
/// Mean of the TOC over the q grid.
double autoc(const std::vector<double>& toc_values);

struct TocCurve {
  std::vector<double> q;
  std::vector<double> toc;
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  double rate = 0;
  double se = 0;
  int n_bootstrap = 0;
};

/// Point TOC/RATE plus a nonparametric bootstrap over rows (gamma and priority
/// resampled jointly): se is the sd of replicate RATEs and the band holds the
/// per-q 2.5/97.5 percentiles.
TocCurve rate(const Vec& gamma, const Vec& priority, int n_bootstrap = 200, std::uint64_t seed = 42);

struct CrossfitScores {
  Vec gamma;     // DR scores on the evaluation set, from a forest fit there
  Vec priority;  // CATEs on the evaluation set from the forest fit on training
  forest::CausalForestFit eval_fit;
};

/// Training and evaluation sets are given as design matrices over the same
/// covariates.
CrossfitScores crossfit_scores(const Mat& x_train, const Vec& y_train, const Vec& w_train,
                               const Mat& x_eval, const Vec& y_eval, const Vec& w_eval,
                               const std::vector<std::string>& names,
                               const forest::ForestConfig& config);

/// Row-level form; throws SeasonOverlap when the two sets share a season.
CrossfitScores crossfit_scores(const std::vector<data::CovariateRow>& train,
                               const std::vector<data::CovariateRow>& eval,
                               const std::vector<std::string>& covariates,
                               const forest::ForestConfig& config);

/// Design matrix of the named covariates, one row per CovariateRow.
Mat covariate_matrix(const std::vector<data::CovariateRow>& rows, const std::vector<std::string>& covariates);

void write_toc_csv(std::ostream& out, const TocCurve& curve);
nlohmann::ordered_json to_json(const TocCurve& curve, const std::string& rule);

}  // namespace tfo::rate
