#include "tfo/glm.hpp"

namespace tfo::glm {

std::string_view to_string(Family f) { return f == Family::Binomial ? "binomial" : "gaussian"; }

std::string_view to_string(Link l) {
  switch (l) {
    case Link::Logit: return "logit";
    case Link::Probit: return "probit";
    case Link::Identity: return "identity";
  }
  return "";
}

Family family_from_string(std::string_view s) {
  if (s == "binomial") return Family::Binomial;
  if (s == "gaussian") return Family::Gaussian;
  throw Error(ErrorCode::InvalidArgument, "unknown family '" + std::string(s) + "'");
}

Link link_from_string(std::string_view s) {
  if (s == "logit") return Link::Logit;
  if (s == "probit") return Link::Probit;
  if (s == "identity") return Link::Identity;
  throw Error(ErrorCode::InvalidArgument, "unknown link '" + std::string(s) + "'");
}

FittedGlm fit(const Frame& data, std::vector<Term> terms, const Vec& y, Family family, Link link,
              const IrlsOptions& opt) {
  Design d = build_design(data, std::move(terms));
  const auto r = fit_irls<double>(d.x, y, family, link, opt);
  FittedGlm m;
  m.family = family;
  m.link = link;
  m.basis = std::move(d.basis);
  m.names = std::move(d.names);
  m.coef = r.coef;
  m.iterations = r.iterations;
  m.deviance = r.deviance;
  m.separation = r.separation;
  m.clip = opt.clip;
  return m;
}

Vec predict_design(const FittedGlm& model, const Mat& x) {
  if (x.cols() != model.coef.size())
    throw Error(ErrorCode::SchemaMismatch, "design has " + std::to_string(x.cols()) +
                                               " columns, model expects " +
                                               std::to_string(model.coef.size()));
  Vec eta = x * model.coef;
  if (model.family == Family::Gaussian) return eta;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    eta[i] = std::clamp(detail::eval_link(model.link, eta[i]).mu, model.clip, 1.0 - model.clip);
  return eta;
}

Vec predict(const FittedGlm& model, const Frame& data) {
  return predict_design(model, apply_basis(model.basis, data));
}

nlohmann::json to_json(const FittedGlm& model) {
  nlohmann::ordered_json j;
  j["family"] = std::string(to_string(model.family));
  j["link"] = std::string(to_string(model.link));
  j["clip"] = model.clip;
  j["basis"] = to_json(model.basis);
  j["names"] = model.names;
  j["coefficients"] = std::vector<double>(model.coef.data(), model.coef.data() + model.coef.size());
  j["iterations"] = model.iterations;
  j["deviance"] = model.deviance;
  j["separation"] = model.separation;
  return j;
}

FittedGlm model_from_json(const nlohmann::json& j) {
  FittedGlm m;
  m.family = family_from_string(j.at("family").get<std::string>());
  m.link = link_from_string(j.at("link").get<std::string>());
  m.clip = j.value("clip", 0.01);
  m.basis = basis_from_json(j.at("basis"));
  m.names = j.at("names").get<std::vector<std::string>>();
  const auto c = j.at("coefficients").get<std::vector<double>>();
  m.coef = Eigen::Map<const Vec>(c.data(), Eigen::Index(c.size()));
  m.iterations = j.value("iterations", 0);
  m.deviance = j.value("deviance", 0.0);
  m.separation = j.value("separation", false);
  return m;
}

}  // namespace tfo::glm
