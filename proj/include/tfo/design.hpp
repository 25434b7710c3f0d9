// Design matrices for the generalized additive models: a numeric frame, per-
// covariate basis terms (linear, natural cubic spline, categorical indicators)
// and the learned basis needed to rebuild the same columns at prediction time.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tfo/common.hpp"

namespace tfo::glm {

/// Column-named numeric table.
struct Frame {
  std::vector<std::string> names;
  Mat values;

  Eigen::Index rows() const { return values.rows(); }
  /// -1 when absent.
  int index(const std::string& name) const;
  /// Throws SchemaMismatch when absent.
  Vec column(const std::string& name) const;
  Frame select_rows(const std::vector<int>& rows) const;
};

enum class TermKind { Linear, Spline, Categorical };

struct Term {
  std::string covariate;
  TermKind kind = TermKind::Linear;
  int df = 4;
  // Learned from training data.
  double center = 0;
  double scale = 1;
  std::vector<double> knots;   // on the standardized scale, boundary knots included
  std::vector<double> levels;  // categorical levels; the first is the baseline

  static Term linear(std::string name) { return make(std::move(name), TermKind::Linear, 4); }
  static Term spline(std::string name, int df) { return make(std::move(name), TermKind::Spline, df); }
  static Term categorical(std::string name) { return make(std::move(name), TermKind::Categorical, 4); }

 private:
  static Term make(std::string name, TermKind kind, int df) {
    Term t;
    t.covariate = std::move(name);
    t.kind = kind;
    t.df = df;
    return t;
  }
};

/// Terms of a model; an intercept column always comes first.
struct BasisSpec {
  std::vector<Term> terms;
};

/// Knots at the quantiles 0, 1/df, ..., 1 (linear interpolation between order
/// statistics), duplicates removed.
std::vector<double> spline_knots(const Vec& x, int df);

/// Natural cubic spline basis in truncated-power form: x, then d_k - d_{K-1}
/// for k = 1..K-2 with d_k(x) = ((x - k_k)^3_+ - (x - k_K)^3_+) / (k_K - k_k).
/// Linear beyond the boundary knots; K knots give K-1 columns.
Mat natural_spline_basis(const Vec& x, const std::vector<double>& knots);

/// Fills in the learned parts of each requested term from training data.
BasisSpec learn_basis(const Frame& data, std::vector<Term> requested);
/// Intercept followed by each term's columns.
Mat apply_basis(const BasisSpec& basis, const Frame& data);
std::vector<std::string> column_names(const BasisSpec& basis);

struct Design {
  BasisSpec basis;
  Mat x;
  std::vector<std::string> names;
};

/// learn_basis + apply_basis + rank check.
Design build_design(const Frame& data, std::vector<Term> requested);

/// Throws RankDeficient naming the columns a pivoted QR finds dependent.
void check_rank(const Mat& x, const std::vector<std::string>& names);

nlohmann::json to_json(const BasisSpec& basis);
BasisSpec basis_from_json(const nlohmann::json& j);

}  // namespace tfo::glm
