// Robustness analyses: marginal sensitivity model bounds on the stabilized IPW
// estimate under unmeasured confounding, and the sweep over alternative
// opportunity / attempt timing definitions.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tfo/ate.hpp"
#include "tfo/dataset.hpp"
#include "tfo/label.hpp"

namespace tfo::sensitivity {

struct Bounds {
  double min = 0;
  double max = 0;
};

/// Extreme values of sum(v_i y_i) / sum(v_i) over v_i = 1 + r_i t_i with
/// t_i in [1/lambda, lambda]. The optimum puts lambda on the largest (max) or
/// smallest (min) outcomes, so scanning the n + 1 sorted thresholds is exact.
Bounds weighted_mean_bounds(const std::vector<double>& y, const std::vector<double>& odds, double lambda);

/// Bounds of the Hajek IPW contrast: treated weights 1 + t (1 - e)/e, control
/// weights 1 + t e/(1 - e). lambda = 1 gives the point estimate twice.
Bounds extremize(const Vec& y, const Vec& w, const Vec& e, double lambda);

/// Hajek IPW point estimate.
double hajek_estimate(const Vec& y, const Vec& w, const Vec& e);

struct LambdaResult {
  double lambda = 1;
  double lo = 0;
  double hi = 0;
  bool significant = false;  // 0 outside [lo, hi]
};

struct LambdaSweep {
  std::vector<LambdaResult> results;  // ascending lambda
  std::vector<double> hajek_replicates;
  double hajek_point = 0;
  int failed_replicates = 0;
};

/// 1, 1.05, ..., 1.5.
std::vector<double> default_lambdas();

/// Per bootstrap replicate the propensity is refit and every lambda is
/// extremized on the same resample, so intervals are nested in lambda.
/// CI = [2.5th percentile of minima, 97.5th percentile of maxima].
LambdaSweep lambda_sweep(const glm::Frame& frame, bool with_season, const ate::PipelineConfig& cfg,
                         std::vector<double> lambdas, int n_bootstrap = 1000, std::uint64_t seed = 42);

struct CutoffResult {
  label::TfoDefinition definition;
  double estimate = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  bool skipped = false;  // fewer than min_per_arm observations in an arm
};

/// Window pairs (43,35), (42,34), (44,36), (43,33), (45,35) crossed with attempt
/// cutoffs 27, 28, 29.
std::vector<label::TfoDefinition> default_grid();

/// Relabels every game per definition, rebuilds the analysis matrix and runs
/// the pooled AIPW pipeline.
std::vector<CutoffResult> cutoff_sweep(const std::vector<pbp::Game>& games, const data::RatingsTable& ratings,
                                       const data::OddsTable& odds, const data::Aliases& aliases,
                                       const std::vector<label::TfoDefinition>& grid,
                                       const ate::PipelineConfig& cfg, std::size_t min_per_arm = 50);

void write_lambda_csv(std::ostream& out, const LambdaSweep& sweep);
void write_cutoff_csv(std::ostream& out, const std::vector<CutoffResult>& results);

}  // namespace tfo::sensitivity
