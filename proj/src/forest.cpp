#include "tfo/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tfo::forest {

void ForestConfig::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1");
  if (!(subsample_fraction > 0 && subsample_fraction <= 1))
    throw Error(ErrorCode::InvalidArgument, "subsample_fraction must be in (0, 1]");
  if (!(honesty_fraction > 0 && honesty_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "honesty_fraction must be in (0, 1)");
  if (min_node_size < 1) throw Error(ErrorCode::InvalidArgument, "min_node_size must be >= 1");
  if (mtry < 0) throw Error(ErrorCode::InvalidArgument, "mtry must be >= 0");
  if (!(clip >= 0 && clip < 0.5)) throw Error(ErrorCode::InvalidArgument, "clip must be in [0, 0.5)");
}

int ForestConfig::resolved_mtry(int p) const {
  const int m = mtry > 0 ? mtry : int(std::ceil(std::sqrt(double(p))));
  return std::clamp(m, 1, std::max(p, 1));
}

int Tree::leaf(const Mat& x, Eigen::Index i) const {
  int k = 0;
  while (nodes[std::size_t(k)].feature >= 0) {
    const Node& n = nodes[std::size_t(k)];
    k = x(i, n.feature) <= n.threshold ? n.left : n.right;
  }
  return k;
}

bool Tree::contains(int i) const {
  return std::binary_search(structure_rows.begin(), structure_rows.end(), i) ||
         std::binary_search(estimation_rows.begin(), estimation_rows.end(), i);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Mat& x, const Vec& a, const Vec& b, int min_node, int mtry, std::mt19937_64& rng)
      : x_(x), a_(a), b_(b), min_node_(min_node), mtry_(mtry), rng_(rng),
        features_(std::size_t(x.cols())) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<Node> build(std::vector<int> rows) {
    nodes_.clear();
    grow(rows, 1);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0;
    double score = 0;
  };

  int grow(std::vector<int>& rows, int depth) {
    const int id = int(nodes_.size());
    nodes_.push_back(Node{});
    nodes_.back().depth = depth;
    double sa = 0, sb = 0;
    for (int i : rows) sa += a_[i], sb += b_[i];
    nodes_.back().value = sb > 0 ? sa / sb : 0.0;
    if (int(rows.size()) < 2 * min_node_ || sb <= 0) return id;

    const Split s = best_split(rows);
    if (s.feature < 0) return id;
    std::vector<int> left, right;
    for (int i : rows) (x_(i, s.feature) <= s.threshold ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    Node& n = nodes_[std::size_t(id)];
    n.feature = s.feature;
    n.threshold = s.threshold;
    n.left = l;
    n.right = r;
    return id;
  }

  Split best_split(const std::vector<int>& rows) {
    // Partial Fisher-Yates: the first mtry entries are the candidate features.
    for (int k = 0; k < mtry_; ++k) {
      std::uniform_int_distribution<int> pick(k, int(features_.size()) - 1);
      std::swap(features_[std::size_t(k)], features_[std::size_t(pick(rng_))]);
    }
    Split best;
    const std::size_t n = rows.size();
    std::vector<int> sorted(rows);
    double total_a = 0, total_b = 0;
    for (int i : rows) total_a += a_[i], total_b += b_[i];
    for (int k = 0; k < mtry_; ++k) {
      const int f = features_[std::size_t(k)];
      std::sort(sorted.begin(), sorted.end(), [&](int p, int q) {
        const double xp = x_(p, f), xq = x_(q, f);
        return xp < xq || (xp == xq && p < q);
      });
      double la = 0, lb = 0;
      for (std::size_t m = 0; m + 1 < n; ++m) {
        const int i = sorted[m];
        la += a_[i];
        lb += b_[i];
        const std::size_t nl = m + 1, nr = n - nl;
        const double xv = x_(i, f), xnext = x_(sorted[m + 1], f);
        if (xv == xnext) continue;
        if (int(nl) < min_node_ || int(nr) < min_node_) continue;
        const double rb = total_b - lb;
        if (lb <= 0 || rb <= 0) continue;
        const double diff = la / lb - (total_a - la) / rb;
        const double score = double(nl) * double(nr) * diff * diff;
        if (score > best.score) {
          best.score = score;
          best.feature = f;
          best.threshold = 0.5 * (xv + xnext);
        }
      }
    }
    return best;
  }

  const Mat& x_;
  const Vec& a_;
  const Vec& b_;
  int min_node_;
  int mtry_;
  std::mt19937_64& rng_;
  std::vector<int> features_;
  std::vector<Node> nodes_;
};

// Fills honest node values from the estimation rows; undefined ratios inherit.
void estimate_leaves(std::vector<Node>& nodes, const Mat& x, const Vec& a, const Vec& b,
                     const std::vector<int>& estimation) {
  std::vector<double> sa(nodes.size(), 0), sb(nodes.size(), 0);
  std::vector<std::size_t> cnt(nodes.size(), 0);
  for (int i : estimation) {
    int k = 0;
    while (true) {
      sa[std::size_t(k)] += a[i];
      sb[std::size_t(k)] += b[i];
      ++cnt[std::size_t(k)];
      const Node& n = nodes[std::size_t(k)];
      if (n.feature < 0) break;
      k = x(i, n.feature) <= n.threshold ? n.left : n.right;
    }
  }
  // Children always follow their parent in `nodes`.
  std::vector<double> parent_value(nodes.size(), nodes[0].value);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    Node& n = nodes[k];
    n.n_estimation = cnt[k];
    n.value = sb[k] > 0 ? sa[k] / sb[k] : parent_value[k];
    if (n.feature >= 0) {
      parent_value[std::size_t(n.left)] = n.value;
      parent_value[std::size_t(n.right)] = n.value;
    }
  }
}

}  // namespace

Forest grow_forest(const Mat& x, const Vec& a, const Vec& b, const ForestConfig& config,
                   std::vector<std::string> names) {
  config.validate();
  const int n = int(x.rows());
  if (a.size() != n || b.size() != n) throw Error(ErrorCode::InvalidArgument, "forest inputs differ in length");
  if (n < 2) throw Error(ErrorCode::InsufficientData, "forest needs at least two rows");
  if (names.empty())
    for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  const int mtry = config.resolved_mtry(int(x.cols()));
  const int sub = std::clamp(int(std::lround(config.subsample_fraction * n)), 2, n);
  const int structure = std::clamp(int(std::lround(config.honesty_fraction * sub)), 1, sub - 1);

  std::vector<Tree> trees(std::size_t(config.n_trees));
  parallel_for(trees.size(), [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(config.seed, t));
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int k = 0; k < sub; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(idx[std::size_t(k)], idx[std::size_t(pick(rng))]);
    }
    Tree& tree = trees[t];
    tree.structure_rows.assign(idx.begin(), idx.begin() + structure);
    tree.estimation_rows.assign(idx.begin() + structure, idx.begin() + sub);
    std::sort(tree.structure_rows.begin(), tree.structure_rows.end());
    std::sort(tree.estimation_rows.begin(), tree.estimation_rows.end());
    TreeBuilder builder(x, a, b, config.min_node_size, mtry, rng);
    tree.nodes = builder.build(tree.structure_rows);
    estimate_leaves(tree.nodes, x, a, b, tree.estimation_rows);
  });
  return Forest(config, std::move(trees), std::move(names));
}

Vec Forest::predict(const Mat& x) const {
  Vec out = Vec::Zero(x.rows());
  parallel_for(std::size_t(x.rows()), [&](std::size_t i) {
    double s = 0;
    for (const auto& t : trees_) s += t.predict(x, Eigen::Index(i));
    out[Eigen::Index(i)] = s / double(trees_.size());
  });
  return out;
}

Vec Forest::predict_oob(const Mat& x) const {
  const auto n = std::size_t(x.rows());
  std::vector<double> sum(n, 0), all(n, 0);
  std::vector<std::size_t> count(n, 0);
  std::vector<char> in(n);
  for (const auto& t : trees_) {
    std::fill(in.begin(), in.end(), 0);
    for (int i : t.structure_rows) if (std::size_t(i) < n) in[std::size_t(i)] = 1;
    for (int i : t.estimation_rows) if (std::size_t(i) < n) in[std::size_t(i)] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = t.predict(x, Eigen::Index(i));
      all[i] += v;
      if (!in[i]) sum[i] += v, ++count[i];
    }
  }
  Vec out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    out[Eigen::Index(i)] = count[i] > 0 ? sum[i] / double(count[i]) : all[i] / double(trees_.size());
  return out;
}

Forest regression_forest(const Mat& x, const Vec& y, const ForestConfig& config,
                         std::vector<std::string> names) {
  return grow_forest(x, y, Vec::Ones(y.size()), config, std::move(names));
}

NuisanceEstimates fit_nuisances(const Mat& x, const Vec& y, const Vec& w, const ForestConfig& config) {
  config.validate();
  if (x.rows() < 10 * config.min_node_size)
    throw Error(ErrorCode::InsufficientData, "forest needs at least " +
                                                 std::to_string(10 * config.min_node_size) + " rows, got " +
                                                 std::to_string(x.rows()));
  ForestConfig cy = config, cw = config;
  cy.seed = derive_seed(config.seed, 0x9e01);
  cw.seed = derive_seed(config.seed, 0x9e02);
  NuisanceEstimates n;
  n.m = regression_forest(x, y, cy).predict_oob(x);
  n.e = regression_forest(x, w, cw).predict_oob(x).cwiseMax(config.clip).cwiseMin(1.0 - config.clip);
  return n;
}

CausalForestFit fit_causal_forest(const Mat& x, const Vec& y, const Vec& w,
                                  const std::vector<std::string>& names, const ForestConfig& config,
                                  NuisanceEstimates nuisances) {
  CausalForestFit fit;
  fit.nuisances = std::move(nuisances);
  fit.y_tilde = y - fit.nuisances.m;
  fit.w_tilde = w - fit.nuisances.e;
  ForestConfig cc = config;
  cc.seed = derive_seed(config.seed, 0x9e03);
  const Vec a = fit.y_tilde.cwiseProduct(fit.w_tilde);
  const Vec b = fit.w_tilde.cwiseAbs2();
  fit.forest = grow_forest(x, a, b, cc, names);
  fit.tau_oob = fit.forest.predict_oob(x);
  return fit;
}

CausalForestFit fit_causal_forest(const Mat& x, const Vec& y, const Vec& w,
                                  const std::vector<std::string>& names, const ForestConfig& config) {
  return fit_causal_forest(x, y, w, names, config, fit_nuisances(x, y, w, config));
}

Vec dr_scores(const Vec& y, const Vec& w, const Vec& e, const Vec& m, const Vec& tau) {
  const Eigen::ArrayXd r = w.array() - e.array();
  return (tau.array() +
          r / (e.array() * (1.0 - e.array())) * (y.array() - m.array() - r * tau.array()))
      .matrix();
}

ate::AteResult forest_ate(const CausalForestFit& fit, const Vec& y, const Vec& w) {
  std::size_t n1 = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) n1 += w[i] == 1;
  return ate::from_scores(dr_scores(y, w, fit.nuisances.e, fit.nuisances.m, fit.tau_oob),
                          ate::Method::Forest, n1, std::size_t(w.size()) - n1);
}

std::vector<Importance> variable_importance(const Forest& forest, int max_depth, double decay) {
  const std::size_t p = forest.names().size();
  std::vector<std::vector<double>> counts(std::size_t(max_depth), std::vector<double>(p, 0));
  for (const auto& t : forest.trees())
    for (const auto& n : t.nodes)
      if (n.feature >= 0 && n.depth <= max_depth) counts[std::size_t(n.depth - 1)][std::size_t(n.feature)] += 1;
  std::vector<double> score(p, 0);
  for (int d = 0; d < max_depth; ++d) {
    const double total = std::accumulate(counts[std::size_t(d)].begin(), counts[std::size_t(d)].end(), 0.0);
    if (total == 0) continue;
    const double weight = std::pow(decay, d);
    for (std::size_t j = 0; j < p; ++j) score[j] += weight * counts[std::size_t(d)][j] / total;
  }
  const double sum = std::accumulate(score.begin(), score.end(), 0.0);
  std::vector<Importance> out;
  for (std::size_t j = 0; j < p; ++j) out.push_back({forest.names()[j], sum > 0 ? score[j] / sum : 0.0});
  std::stable_sort(out.begin(), out.end(),
                   [](const Importance& l, const Importance& r) { return l.weight > r.weight; });
  return out;
}

std::vector<std::string> filter_variables(const std::vector<Importance>& ranking, double keep_mass) {
  std::vector<std::string> keep;
  double mass = 0;
  for (const auto& r : ranking) {
    if (mass >= keep_mass - 1e-12) break;
    keep.push_back(r.covariate);
    mass += r.weight;
  }
  return keep;
}

CalibrationResult test_calibration(const Vec& y_tilde, const Vec& w_tilde, const Vec& tau_oob) {
  const Eigen::Index n = y_tilde.size();
  const double tau_bar = tau_oob.mean();
  const Vec c2 = ((tau_oob.array() - tau_bar) * w_tilde.array()).matrix();
  CalibrationResult r;
  r.diff_defined = (tau_oob.array() - tau_bar).abs().maxCoeff() > 1e-12 * std::max(1.0, std::abs(tau_bar));
  Mat x(n, r.diff_defined ? 2 : 1);
  x.col(0) = tau_bar * w_tilde;
  if (r.diff_defined) x.col(1) = c2;
  if (x.col(0).squaredNorm() == 0)
    throw Error(ErrorCode::DegenerateGroups, "calibration regressor is identically zero");
  const Mat xtx_inv = (x.transpose() * x).inverse();
  const Vec beta = xtx_inv * x.transpose() * y_tilde;
  const Vec resid = y_tilde - x * beta;
  Mat meat = Mat::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = x.row(i) * xtx_inv * x.row(i).transpose();
    const double u = resid[i] / (1.0 - h);
    meat += u * u * x.row(i).transpose() * x.row(i);
  }
  const Mat cov = xtx_inv * meat * xtx_inv;
  r.mean_coef = beta[0];
  r.mean_se = std::sqrt(cov(0, 0));
  r.mean_t = r.mean_coef / r.mean_se;
  r.mean_p = upper_p(r.mean_t);
  if (r.diff_defined) {
    r.diff_coef = beta[1];
    r.diff_se = std::sqrt(cov(1, 1));
    r.diff_t = r.diff_coef / r.diff_se;
    r.diff_p = upper_p(r.diff_t);
  }
  return r;
}

CalibrationResult test_calibration(const CausalForestFit& fit) {
  return test_calibration(fit.y_tilde, fit.w_tilde, fit.tau_oob);
}

nlohmann::ordered_json to_json(const ForestConfig& c) {
  nlohmann::ordered_json j;
  j["n_trees"] = c.n_trees;
  j["subsample_fraction"] = c.subsample_fraction;
  j["honesty_fraction"] = c.honesty_fraction;
  j["min_node_size"] = c.min_node_size;
  j["mtry"] = c.mtry;
  j["seed"] = c.seed;
  j["clip"] = c.clip;
  return j;
}

nlohmann::ordered_json to_json(const CalibrationResult& c) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["mean_forest_prediction"] = {{"estimate", c.mean_coef}, {"se", c.mean_se}, {"t", c.mean_t}, {"p", c.mean_p}};
  j["differential_forest_prediction"] = {
      {"estimate", num(c.diff_coef)}, {"se", num(c.diff_se)}, {"t", num(c.diff_t)}, {"p", num(c.diff_p)}};
  j["differential_defined"] = c.diff_defined;
  return j;
}

}  // namespace tfo::forest
