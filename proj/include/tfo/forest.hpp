// Honest random forests: regression forests for the nuisance functions and a
// causal forest whose splits and leaves use the residual-on-residual slope
// sum(Y~ W~) / sum(W~^2). Out-of-bag CATEs feed doubly robust scores, the
// calibration test, variable importance and targeting curves.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfo/ate.hpp"

namespace tfo::forest {

struct ForestConfig {
  int n_trees = 2000;
  double subsample_fraction = 0.5;
  double honesty_fraction = 0.5;
  int min_node_size = 5;
  int mtry = 0;  // 0: ceil(sqrt(p))
  std::uint64_t seed = 42;
  double clip = 0.01;  // applied to the treatment nuisance

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
  int resolved_mtry(int p) const;
};

struct Node {
  int feature = -1;  // -1 for a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  int depth = 1;  // root is depth 1
  /// Honest estimate: sum a / sum b over the estimation rows reaching the node,
  /// or the parent's value when that ratio is undefined.
  double value = 0;
  std::size_t n_estimation = 0;
};

struct Tree {
  std::vector<Node> nodes;
  std::vector<int> structure_rows;   // sorted
  std::vector<int> estimation_rows;  // sorted

  /// Index of the leaf reached by row `i` of `x`.
  int leaf(const Mat& x, Eigen::Index i) const;
  double predict(const Mat& x, Eigen::Index i) const { return nodes[std::size_t(leaf(x, i))].value; }
  /// True when row i was in this tree's subsample.
  bool contains(int i) const;
};

/// Generic honest forest over node statistic sum(a) / sum(b) and split
/// criterion n_L n_R (r_L - r_R)^2. Regression: a = y, b = 1. Causal:
/// a = Y~ W~, b = W~^2.
class Forest {
 public:
  Forest() = default;
  Forest(ForestConfig config, std::vector<Tree> trees, std::vector<std::string> names)
      : config_(config), trees_(std::move(trees)), names_(std::move(names)) {}

  const ForestConfig& config() const { return config_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::string>& names() const { return names_; }

  /// Average of per-tree leaf values over all trees.
  Vec predict(const Mat& x) const;
  /// For training rows: average over trees whose subsample excludes the row.
  /// Rows contained in every tree fall back to the all-tree average.
  Vec predict_oob(const Mat& x) const;

 private:
  ForestConfig config_;
  std::vector<Tree> trees_;
  std::vector<std::string> names_;
};

Forest grow_forest(const Mat& x, const Vec& a, const Vec& b, const ForestConfig& config,
                   std::vector<std::string> names = {});

Forest regression_forest(const Mat& x, const Vec& y, const ForestConfig& config,
                         std::vector<std::string> names = {});

struct NuisanceEstimates {
  Vec m;  // OOB E[Y | X]
  Vec e;  // OOB P(W = 1 | X), clipped
};

/// Two regression forests (outcome and treatment). Throws InsufficientData
/// when n < 10 min_node_size.
NuisanceEstimates fit_nuisances(const Mat& x, const Vec& y, const Vec& w, const ForestConfig& config);

struct CausalForestFit {
  Forest forest;
  NuisanceEstimates nuisances;
  Vec y_tilde;
  Vec w_tilde;
  Vec tau_oob;
};

CausalForestFit fit_causal_forest(const Mat& x, const Vec& y, const Vec& w,
                                  const std::vector<std::string>& names, const ForestConfig& config);
/// Causal forest on given nuisances.
CausalForestFit fit_causal_forest(const Mat& x, const Vec& y, const Vec& w,
                                  const std::vector<std::string>& names, const ForestConfig& config,
                                  NuisanceEstimates nuisances);

/// Gamma_i = tau_i + (w_i - e_i) / (e_i (1 - e_i)) (y_i - m_i - (w_i - e_i) tau_i).
Vec dr_scores(const Vec& y, const Vec& w, const Vec& e, const Vec& m, const Vec& tau);
ate::AteResult forest_ate(const CausalForestFit& fit, const Vec& y, const Vec& w);

struct Importance {
  std::string covariate;
  double weight = 0;
};

/// Split-frequency importance over depths 1..max_depth, each depth weighted by
/// decay^(depth-1) and normalized by the number of splits at that depth;
/// result sums to 1, sorted descending (stable on covariate order).
std::vector<Importance> variable_importance(const Forest& forest, int max_depth = 4, double decay = 0.5);
/// Shortest prefix of the ranking whose cumulative weight reaches keep_mass.
std::vector<std::string> filter_variables(const std::vector<Importance>& ranking, double keep_mass = 0.95);

struct CalibrationResult {
  double mean_coef = 0, mean_se = 0, mean_t = 0, mean_p = 1;
  double diff_coef = NAN, diff_se = NAN, diff_t = NAN, diff_p = NAN;
  bool diff_defined = true;
};

/// Regresses Y~ on tau_bar W~ and (tau - tau_bar) W~ without intercept, with
/// HC3 standard errors and one-sided p-values for coef > 0.
CalibrationResult test_calibration(const Vec& y_tilde, const Vec& w_tilde, const Vec& tau_oob);
CalibrationResult test_calibration(const CausalForestFit& fit);

nlohmann::ordered_json to_json(const ForestConfig& c);
nlohmann::ordered_json to_json(const CalibrationResult& c);

}  // namespace tfo::forest
