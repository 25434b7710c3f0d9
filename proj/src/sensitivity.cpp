#include "tfo/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "tfo/csv.hpp"

namespace tfo::sensitivity {

Bounds weighted_mean_bounds(const std::vector<double>& y, const std::vector<double>& odds, double lambda) {
  if (!(lambda >= 1)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 1");
  if (y.size() != odds.size() || y.empty())
    throw Error(ErrorCode::InvalidArgument, "bounds need matching, non-empty inputs");
  const std::size_t n = y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  const double lo_t = 1.0 / lambda, hi_t = lambda;

  // Suffix sums with the high multiplier; prefix sums with the low one.
  std::vector<double> lo_num(n + 1, 0), lo_den(n + 1, 0), hi_num(n + 1, 0), hi_den(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    const double vl = 1 + odds[i] * lo_t, vh = 1 + odds[i] * hi_t;
    lo_num[k + 1] = lo_num[k] + vl * y[i];
    lo_den[k + 1] = lo_den[k] + vl;
    hi_num[k + 1] = hi_num[k] + vh * y[i];
    hi_den[k + 1] = hi_den[k] + vh;
  }
  Bounds b{INFINITY, -INFINITY};
  for (std::size_t k = 0; k <= n; ++k) {
    // Smallest k outcomes at the low multiplier, the rest high: candidates for the max.
    const double up = (lo_num[k] + hi_num[n] - hi_num[k]) / (lo_den[k] + hi_den[n] - hi_den[k]);
    // Smallest k outcomes high, the rest low: candidates for the min.
    const double down = (hi_num[k] + lo_num[n] - lo_num[k]) / (hi_den[k] + lo_den[n] - lo_den[k]);
    b.max = std::max(b.max, up);
    b.min = std::min(b.min, down);
  }
  return b;
}

namespace {

void split_arms(const Vec& y, const Vec& w, const Vec& e, std::vector<double>& y1, std::vector<double>& r1,
                std::vector<double>& y0, std::vector<double>& r0) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(e[i] > 0 && e[i] < 1)) throw Error(ErrorCode::PositivityViolation, "propensity outside (0, 1)");
    if (w[i] == 1) {
      y1.push_back(y[i]);
      r1.push_back((1 - e[i]) / e[i]);
    } else {
      y0.push_back(y[i]);
      r0.push_back(e[i] / (1 - e[i]));
    }
  }
  if (y1.empty() || y0.empty()) throw Error(ErrorCode::DegenerateGroups, "need both arms");
}

}  // namespace

Bounds extremize(const Vec& y, const Vec& w, const Vec& e, double lambda) {
  std::vector<double> y1, r1, y0, r0;
  split_arms(y, w, e, y1, r1, y0, r0);
  const Bounds b1 = weighted_mean_bounds(y1, r1, lambda);
  const Bounds b0 = weighted_mean_bounds(y0, r0, lambda);
  return {b1.min - b0.max, b1.max - b0.min};
}

double hajek_estimate(const Vec& y, const Vec& w, const Vec& e) {
  const Bounds b = extremize(y, w, e, 1.0);
  return 0.5 * (b.min + b.max);
}

std::vector<double> default_lambdas() {
  std::vector<double> l{1.0};
  for (int k = 1; k <= 10; ++k) l.push_back(1.0 + 0.05 * k);
  return l;
}

LambdaSweep lambda_sweep(const glm::Frame& frame, bool with_season, const ate::PipelineConfig& cfg,
                         std::vector<double> lambdas, int n_bootstrap, std::uint64_t seed) {
  if (lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "no lambda values");
  for (double l : lambdas)
    if (!(l >= 1)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 1");
  if (n_bootstrap < 2) throw Error(ErrorCode::InvalidArgument, "need at least two bootstrap replicates");
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  LambdaSweep sweep;
  {
    const auto model = ate::fit_propensity(frame, with_season, cfg);
    sweep.hajek_point = hajek_estimate(frame.column("y"), frame.column("w"), glm::predict(model, frame));
  }
  const std::size_t L = lambdas.size(), B = std::size_t(n_bootstrap);
  std::vector<std::vector<Bounds>> reps(B);
  std::vector<char> ok(B, 0);
  const int n = int(frame.rows());
  parallel_for(B, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = pick(rng);
    const glm::Frame sample = frame.select_rows(idx);
    try {
      const auto model = ate::fit_propensity(sample, with_season, cfg);
      const Vec e = glm::predict(model, sample);
      const Vec y = sample.column("y"), w = sample.column("w");
      reps[b].reserve(L);
      for (double l : lambdas) reps[b].push_back(extremize(y, w, e, l));
      ok[b] = 1;
    } catch (const Error&) {
      // A resample can lose an arm or a categorical level; it is dropped and counted.
    }
  });

  std::vector<std::vector<double>> mins(L), maxs(L);
  for (std::size_t b = 0; b < B; ++b) {
    if (!ok[b]) {
      ++sweep.failed_replicates;
      continue;
    }
    for (std::size_t k = 0; k < L; ++k) {
      mins[k].push_back(reps[b][k].min);
      maxs[k].push_back(reps[b][k].max);
    }
    if (lambdas.front() == 1.0) sweep.hajek_replicates.push_back(reps[b][0].min);
  }
  if (mins[0].size() < 2) throw Error(ErrorCode::InsufficientData, "too few successful bootstrap replicates");
  for (std::size_t k = 0; k < L; ++k) {
    LambdaResult r;
    r.lambda = lambdas[k];
    r.lo = quantile(mins[k], 0.025);
    r.hi = quantile(maxs[k], 0.975);
    r.significant = r.lo > 0 || r.hi < 0;
    sweep.results.push_back(r);
  }
  return sweep;
}

std::vector<label::TfoDefinition> default_grid() {
  const std::pair<int, int> windows[] = {{43, 35}, {42, 34}, {44, 36}, {43, 33}, {45, 35}};
  std::vector<label::TfoDefinition> grid;
  for (const auto& [u, l] : windows)
    for (int a : {27, 28, 29}) grid.push_back({u, l, a});
  return grid;
}

std::vector<CutoffResult> cutoff_sweep(const std::vector<pbp::Game>& games, const data::RatingsTable& ratings,
                                       const data::OddsTable& odds, const data::Aliases& aliases,
                                       const std::vector<label::TfoDefinition>& grid,
                                       const ate::PipelineConfig& cfg, std::size_t min_per_arm) {
  std::vector<CutoffResult> results(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    const auto& def = grid[g];
    def.validate();
    std::vector<label::TfoObservation> observations;
    std::vector<Issue> issues;
    for (const auto& game : games) {
      auto obs = label::label_game(game.events, def, issues);
      observations.insert(observations.end(), obs.begin(), obs.end());
    }
    const auto assembled = data::assemble(observations, games, ratings, odds, aliases);
    CutoffResult& r = results[g];
    r.definition = def;
    for (const auto& row : assembled.rows) (row.w == 1 ? r.n1 : r.n0)++;
    if (r.n1 < min_per_arm || r.n0 < min_per_arm) {
      r.skipped = true;
      r.estimate = r.ci_lo = r.ci_hi = NAN;
      return;
    }
    const auto est = ate::estimate_pipeline(assembled.rows, cfg, "pooled");
    r.estimate = est.front().aipw.estimate;
    r.ci_lo = est.front().aipw.ci_lo;
    r.ci_hi = est.front().aipw.ci_hi;
  });
  return results;
}

void write_lambda_csv(std::ostream& out, const LambdaSweep& sweep) {
  csv::write_row(out, {"lambda", "lo", "hi", "significant"});
  for (const auto& r : sweep.results)
    csv::write_row(out, {csv::format_number(r.lambda), csv::format_number(r.lo), csv::format_number(r.hi),
                         r.significant ? "1" : "0"});
}

void write_cutoff_csv(std::ostream& out, const std::vector<CutoffResult>& results) {
  csv::write_row(out, {"upper", "lower", "cutoff", "estimate", "lo", "hi", "n1", "n0", "skipped"});
  for (const auto& r : results)
    csv::write_row(out, {std::to_string(r.definition.window_upper_s), std::to_string(r.definition.window_lower_s),
                         std::to_string(r.definition.attempt_cutoff_s), csv::format_number(r.estimate),
                         csv::format_number(r.ci_lo), csv::format_number(r.ci_hi), std::to_string(r.n1),
                         std::to_string(r.n0), r.skipped ? "1" : "0"});
}

}  // namespace tfo::sensitivity
