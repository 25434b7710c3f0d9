#include "tfo/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tfo::glm {

int Frame::index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : int(it - names.begin());
}

Vec Frame::column(const std::string& name) const {
  const int j = index(name);
  if (j < 0) throw Error(ErrorCode::SchemaMismatch, "frame has no column '" + name + "'");
  return values.col(j);
}

Frame Frame::select_rows(const std::vector<int>& rows) const {
  Frame out;
  out.names = names;
  out.values.resize(Eigen::Index(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.values.row(Eigen::Index(i)) = values.row(rows[i]);
  return out;
}

std::vector<double> spline_knots(const Vec& x, int df) {
  if (df < 1) throw Error(ErrorCode::InvalidArgument, "spline df must be >= 1");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::vector<double> knots;
  knots.reserve(std::size_t(df) + 1);
  for (int k = 0; k <= df; ++k) {
    const double q = quantile(sorted, double(k) / double(df));
    if (knots.empty() || q - knots.back() > 1e-12 * (1.0 + std::abs(q))) knots.push_back(q);
  }
  return knots;
}

Mat natural_spline_basis(const Vec& x, const std::vector<double>& knots) {
  const auto K = knots.size();
  if (K < 2) {
    Mat out(x.size(), 1);
    out.col(0) = x;
    return out;
  }
  const double last = knots[K - 1];
  const auto cube_plus = [](double v) { return v > 0 ? v * v * v : 0.0; };
  const auto d = [&](double v, std::size_t k) {
    return (cube_plus(v - knots[k]) - cube_plus(v - last)) / (last - knots[k]);
  };
  Mat out(x.size(), Eigen::Index(K - 1));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    out(i, 0) = v;
    const double d_last = d(v, K - 2);
    for (std::size_t k = 0; k + 2 < K; ++k) out(i, Eigen::Index(k + 1)) = d(v, k) - d_last;
  }
  return out;
}

BasisSpec learn_basis(const Frame& data, std::vector<Term> requested) {
  BasisSpec basis;
  for (auto& term : requested) {
    const Vec x = data.column(term.covariate);
    if (!x.allFinite())
      throw Error(ErrorCode::InvalidArgument, "covariate '" + term.covariate + "' has non-finite values");
    switch (term.kind) {
      case TermKind::Linear:
        break;
      case TermKind::Spline: {
        term.center = x.mean();
        const double sd = sample_sd(x);
        term.scale = sd > 0 ? sd : 1.0;
        const Vec z = (x.array() - term.center) / term.scale;
        term.knots = spline_knots(z, term.df);
        break;
      }
      case TermKind::Categorical: {
        std::set<double> levels(x.data(), x.data() + x.size());
        term.levels.assign(levels.begin(), levels.end());
        break;
      }
    }
    basis.terms.push_back(std::move(term));
  }
  return basis;
}

namespace {

Eigen::Index term_width(const Term& t) {
  switch (t.kind) {
    case TermKind::Linear: return 1;
    case TermKind::Spline: return std::max<Eigen::Index>(1, Eigen::Index(t.knots.size()) - 1);
    case TermKind::Categorical:
      return t.levels.empty() ? 0 : Eigen::Index(t.levels.size()) - 1;
  }
  return 0;
}

std::string level_name(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return std::to_string(v);
}

}  // namespace

Mat apply_basis(const BasisSpec& basis, const Frame& data) {
  Eigen::Index width = 1;
  for (const auto& t : basis.terms) width += term_width(t);
  Mat out(data.rows(), width);
  out.col(0).setOnes();
  Eigen::Index col = 1;
  for (const auto& t : basis.terms) {
    const Vec x = data.column(t.covariate);
    switch (t.kind) {
      case TermKind::Linear:
        out.col(col++) = x;
        break;
      case TermKind::Spline: {
        const Vec z = (x.array() - t.center) / t.scale;
        const Mat b = natural_spline_basis(z, t.knots);
        out.middleCols(col, b.cols()) = b;
        col += b.cols();
        break;
      }
      case TermKind::Categorical: {
        for (std::size_t l = 1; l < t.levels.size(); ++l)
          out.col(col + Eigen::Index(l) - 1) = (x.array() == t.levels[l]).cast<double>();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (std::find(t.levels.begin(), t.levels.end(), x[i]) == t.levels.end())
            throw Error(ErrorCode::SchemaMismatch, "covariate '" + t.covariate +
                                                       "' has unseen level " + level_name(x[i]));
        }
        col += term_width(t);
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> column_names(const BasisSpec& basis) {
  std::vector<std::string> names{"(intercept)"};
  for (const auto& t : basis.terms) {
    switch (t.kind) {
      case TermKind::Linear:
        names.push_back(t.covariate);
        break;
      case TermKind::Spline:
        names.push_back(t.covariate);
        for (Eigen::Index k = 1; k < term_width(t); ++k)
          names.push_back(t.covariate + ":ns" + std::to_string(k + 1));
        break;
      case TermKind::Categorical:
        for (std::size_t l = 1; l < t.levels.size(); ++l)
          names.push_back(t.covariate + "=" + level_name(t.levels[l]));
        break;
    }
  }
  return names;
}

void check_rank(const Mat& x, const std::vector<std::string>& names) {
  // Scale columns to unit norm so the threshold is relative per column.
  Mat scaled = x;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0) scaled.col(j) /= norm;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(scaled);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == x.cols()) return;
  std::string offending;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = rank; k < x.cols(); ++k) {
    const auto j = perm[k];
    if (!offending.empty()) offending += ", ";
    offending += j < Eigen::Index(names.size()) ? names[std::size_t(j)] : std::to_string(j);
  }
  throw Error(ErrorCode::RankDeficient, "design has rank " + std::to_string(rank) + " < " +
                                            std::to_string(x.cols()) + "; dependent: " + offending);
}

Design build_design(const Frame& data, std::vector<Term> requested) {
  Design d;
  d.basis = learn_basis(data, std::move(requested));
  d.x = apply_basis(d.basis, data);
  d.names = column_names(d.basis);
  check_rank(d.x, d.names);
  return d;
}

namespace {

std::string_view kind_name(TermKind k) {
  switch (k) {
    case TermKind::Linear: return "linear";
    case TermKind::Spline: return "spline";
    case TermKind::Categorical: return "categorical";
  }
  return "";
}

}  // namespace

nlohmann::json to_json(const BasisSpec& basis) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : basis.terms) {
    nlohmann::json j;
    j["covariate"] = t.covariate;
    j["kind"] = std::string(kind_name(t.kind));
    if (t.kind == TermKind::Spline) {
      j["df"] = t.df;
      j["center"] = t.center;
      j["scale"] = t.scale;
      j["knots"] = t.knots;
    }
    if (t.kind == TermKind::Categorical) j["levels"] = t.levels;
    terms.push_back(j);
  }
  return terms;
}

BasisSpec basis_from_json(const nlohmann::json& j) {
  BasisSpec basis;
  for (const auto& jt : j) {
    Term t;
    t.covariate = jt.at("covariate").get<std::string>();
    const auto kind = jt.at("kind").get<std::string>();
    if (kind == "linear") {
      t.kind = TermKind::Linear;
    } else if (kind == "spline") {
      t.kind = TermKind::Spline;
      t.df = jt.at("df").get<int>();
      t.center = jt.at("center").get<double>();
      t.scale = jt.at("scale").get<double>();
      t.knots = jt.at("knots").get<std::vector<double>>();
    } else if (kind == "categorical") {
      t.kind = TermKind::Categorical;
      t.levels = jt.at("levels").get<std::vector<double>>();
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown term kind '" + kind + "'");
    }
    basis.terms.push_back(std::move(t));
  }
  return basis;
}

}  // namespace tfo::glm
