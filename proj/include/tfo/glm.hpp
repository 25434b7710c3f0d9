// Generalized linear models fitted by iteratively reweighted least squares:
// binomial with probit or logit link, Gaussian with identity link.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfo/design.hpp"

namespace tfo::glm {

enum class Family { Binomial, Gaussian };
enum class Link { Logit, Probit, Identity };

std::string_view to_string(Family f);
std::string_view to_string(Link l);
Family family_from_string(std::string_view s);
Link link_from_string(std::string_view s);

struct IrlsOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;
  /// Binomial fits: share of fitted values outside [clip, 1 - clip] that flags
  /// quasi-separation.
  double clip = 0.01;
  double separation_share = 0.10;
};

template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct IrlsResult {
  VecT<Scalar> coef;
  int iterations = 0;
  Scalar deviance = 0;
  std::vector<Scalar> deviance_trace;  // after each accepted iteration
  bool converged = false;
  bool separation = false;
};

/// Thrown after max_iterations without convergence; carries the last iterate.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, Vec last)
      : Error(ErrorCode::NonConvergence, message), last_(std::move(last)) {}
  const Vec& last_iterate() const { return last_; }

 private:
  Vec last_;
};

namespace detail {

template <typename Scalar>
struct LinkEval {
  Scalar mu;
  Scalar one_minus_mu;
  Scalar dmu;  // d mu / d eta
};

template <typename Scalar>
LinkEval<Scalar> eval_link(Link link, Scalar eta) {
  switch (link) {
    case Link::Logit: {
      const Scalar e = std::exp(-std::abs(eta));
      const Scalar big = Scalar(1) / (Scalar(1) + e);
      const Scalar small = e / (Scalar(1) + e);
      const Scalar mu = eta >= 0 ? big : small;
      const Scalar omu = eta >= 0 ? small : big;
      return {mu, omu, mu * omu};
    }
    case Link::Probit:
      return {normal_cdf(eta), normal_cdf(-eta), normal_pdf(eta)};
    case Link::Identity:
      return {eta, Scalar(1) - eta, Scalar(1)};
  }
  return {eta, Scalar(1) - eta, Scalar(1)};
}

template <typename Scalar>
Scalar deviance(Family family, Link link, const VecT<Scalar>& y, const VecT<Scalar>& eta) {
  Scalar d = 0;
  if (family == Family::Gaussian) return (y - eta).squaredNorm();
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto l = eval_link(link, eta[i]);
    if (y[i] > 0) d -= Scalar(2) * y[i] * std::log(std::max(l.mu, tiny));
    if (y[i] < 1) d -= Scalar(2) * (Scalar(1) - y[i]) * std::log(std::max(l.one_minus_mu, tiny));
  }
  return d;
}

}  // namespace detail

/// Fits coefficients for design `x` and response `y`. Binomial responses must
/// be 0/1. Gaussian identity is solved in one least-squares step. Binomial fits
/// use Fisher scoring with exact link derivatives and halve the step whenever
/// the deviance increases; convergence is max |delta coef| < tolerance (or
/// tolerance relative to max |coef| + 1 once coefficients are large).
template <typename Scalar>
IrlsResult<Scalar> fit_irls(const MatT<Scalar>& x, const VecT<Scalar>& y, Family family,
                            Link link, const IrlsOptions& opt = {}) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (y.size() != n) throw Error(ErrorCode::InvalidArgument, "response length differs from design rows");
  if (n == 0 || p == 0) throw Error(ErrorCode::InsufficientData, "empty design");
  if (!y.allFinite()) throw Error(ErrorCode::InvalidArgument, "response has non-finite values");
  if (family == Family::Gaussian && link != Link::Identity)
    throw Error(ErrorCode::InvalidArgument, "Gaussian family supports only the identity link");
  if (family == Family::Binomial && link == Link::Identity)
    throw Error(ErrorCode::InvalidArgument, "binomial family needs a logit or probit link");

  IrlsResult<Scalar> r;
  if (family == Family::Gaussian) {
    r.coef = x.colPivHouseholderQr().solve(y);
    r.iterations = 1;
    r.deviance = (y - x * r.coef).squaredNorm();
    r.deviance_trace.push_back(r.deviance);
    r.converged = true;
    return r;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 0 && y[i] != 1) throw Error(ErrorCode::InvalidArgument, "binomial response must be 0/1");

  // Bounds the working weights away from zero when fitted values saturate.
  const Scalar mu_floor = Scalar(1e-10);
  VecT<Scalar> beta = VecT<Scalar>::Zero(p);
  VecT<Scalar> eta = x * beta;
  Scalar dev = detail::deviance(family, link, y, eta);
  VecT<Scalar> z(n), sw(n);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto l = detail::eval_link(link, eta[i]);
      const Scalar var = std::max(l.mu, mu_floor) * std::max(l.one_minus_mu, mu_floor);
      const Scalar dmu = std::max(l.dmu, std::numeric_limits<Scalar>::min());
      sw[i] = dmu / std::sqrt(var);
      z[i] = eta[i] + (y[i] - l.mu) / dmu;
    }
    const MatT<Scalar> xw = sw.asDiagonal() * x;
    const VecT<Scalar> zw = sw.cwiseProduct(z);
    VecT<Scalar> proposal = xw.colPivHouseholderQr().solve(zw);
    if (!proposal.allFinite())
      throw NonConvergenceError("IRLS produced non-finite coefficients", beta.template cast<double>());

    VecT<Scalar> step = proposal - beta;
    VecT<Scalar> next_eta = x * proposal;
    Scalar next_dev = detail::deviance(family, link, y, next_eta);
    for (int h = 0; h < 30 && !(next_dev <= dev * (Scalar(1) + Scalar(1e-14)) + Scalar(1e-14)); ++h) {
      step /= Scalar(2);
      proposal = beta + step;
      next_eta = x * proposal;
      next_dev = detail::deviance(family, link, y, next_eta);
    }
    const Scalar change = step.cwiseAbs().maxCoeff();
    beta = proposal;
    eta = next_eta;
    dev = next_dev;
    r.deviance_trace.push_back(dev);
    r.iterations = it;
    const Scalar scale = Scalar(1) + beta.cwiseAbs().maxCoeff();
    if (change < Scalar(opt.tolerance) || change < Scalar(opt.tolerance) * scale) {
      r.converged = true;
      break;
    }
  }
  r.coef = beta;
  r.deviance = dev;
  Eigen::Index outside = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar mu = detail::eval_link(link, eta[i]).mu;
    if (mu < Scalar(opt.clip) || mu > Scalar(1) - Scalar(opt.clip)) ++outside;
  }
  r.separation = double(outside) > opt.separation_share * double(n);
  if (!r.converged && !r.separation)
    throw NonConvergenceError("IRLS did not converge in " + std::to_string(opt.max_iterations) +
                                  " iterations",
                              beta.template cast<double>());
  return r;
}

/// A model fitted on a frame: basis, coefficients and fit diagnostics.
struct FittedGlm {
  Family family = Family::Binomial;
  Link link = Link::Probit;
  BasisSpec basis;
  std::vector<std::string> names;  // design column names
  Vec coef;
  int iterations = 0;
  double deviance = 0;
  bool separation = false;
  /// Binomial predictions are clipped to [clip, 1 - clip].
  double clip = 0.01;
};

FittedGlm fit(const Frame& data, std::vector<Term> terms, const Vec& y, Family family, Link link,
              const IrlsOptions& opt = {});

/// Mean (identity) or clipped probability for each row of `data`.
Vec predict(const FittedGlm& model, const Frame& data);
/// Same, for an already built design matrix.
Vec predict_design(const FittedGlm& model, const Mat& x);

nlohmann::json to_json(const FittedGlm& model);
FittedGlm model_from_json(const nlohmann::json& j);

}  // namespace tfo::glm
