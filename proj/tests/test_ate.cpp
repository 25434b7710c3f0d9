#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "tfo/ate.hpp"
#include "tfo/synth.hpp"

namespace tfo::ate {
namespace {

using testing::normal_vec;
using testing::uniform_vec;

struct Sample {
  Vec y, w, e, m1, m0;
};

Sample random_sample(std::uint64_t seed, Eigen::Index n) {
  std::mt19937_64 rng(seed);
  Sample s;
  s.e = uniform_vec(rng, n, 0.1, 0.9);
  s.w.resize(n);
  std::uniform_real_distribution<double> u(0, 1);
  for (Eigen::Index i = 0; i < n; ++i) s.w[i] = u(rng) < s.e[i];
  s.w[0] = 1;
  s.w[1] = 0;
  s.y = normal_vec(rng, n, 3);
  s.m1 = normal_vec(rng, n);
  s.m0 = normal_vec(rng, n);
  return s;
}

TEST(Ipw, HandComputedScores) {
  const Vec y = (Vec(4) << 2, -1, 4, 0).finished();
  const Vec w = (Vec(4) << 1, 0, 1, 0).finished();
  const Vec e = (Vec(4) << 0.5, 0.5, 0.8, 0.25).finished();
  const auto r = ipw(y, w, e);
  // psi = {4, 2, 5, 0}
  EXPECT_DOUBLE_EQ(r.estimate, 11.0 / 4);
  EXPECT_EQ(r.n1, 2u);
  EXPECT_EQ(r.n0, 2u);
  const double sd = std::sqrt(((4 - 2.75) * (4 - 2.75) + (2 - 2.75) * (2 - 2.75) + (5 - 2.75) * (5 - 2.75) +
                               2.75 * 2.75) / 3);
  EXPECT_NEAR(r.se, sd / 2, 1e-14);
  EXPECT_NEAR(r.ci_lo, r.estimate - 1.96 * r.se, 1e-14);
  EXPECT_NEAR(r.ci_hi, r.estimate + 1.96 * r.se, 1e-14);
  EXPECT_NEAR(r.p_value, two_sided_p(r.estimate / r.se), 1e-14);
}

TEST(Aipw, MatchesLoopOracleAndReducesToIpw) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = random_sample(seed, 50);
    const auto r = aipw(s.y, s.w, s.e, s.m1, s.m0);
    double total = 0;
    for (Eigen::Index i = 0; i < s.y.size(); ++i) {
      total += s.m1[i] - s.m0[i];
      if (s.w[i] == 1) total += (s.y[i] - s.m1[i]) / s.e[i];
      else total -= (s.y[i] - s.m0[i]) / (1 - s.e[i]);
    }
    EXPECT_NEAR(r.estimate, total / 50, 1e-12);
    const Vec zero = Vec::Zero(50);
    EXPECT_NEAR(aipw(s.y, s.w, s.e, zero, zero).estimate, ipw(s.y, s.w, s.e).estimate, 1e-12);
    EXPECT_NEAR(r.psi.mean(), r.estimate, 1e-12);
  }
}

// Shifting y, m1 and m0 by the same constant leaves AIPW unchanged; Hajek
// weights make IPW shift invariant as well.
TEST(Aipw, ShiftInvariance) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = random_sample(seed, 60);
    const double c = 7.5;
    const Vec cy = (s.y.array() + c).matrix(), c1 = (s.m1.array() + c).matrix(), c0 = (s.m0.array() + c).matrix();
    EXPECT_NEAR(aipw(cy, s.w, s.e, c1, c0).estimate, aipw(s.y, s.w, s.e, s.m1, s.m0).estimate, 1e-10);
    EXPECT_NEAR(ipw_hajek(cy, s.w, s.e).estimate, ipw_hajek(s.y, s.w, s.e).estimate, 1e-10);
  }
}

TEST(Hajek, ScoresAverageToTheRatioEstimate) {
  const auto s = random_sample(4, 80);
  const auto r = ipw_hajek(s.y, s.w, s.e);
  double n1 = 0, d1 = 0, n0 = 0, d0 = 0;
  for (Eigen::Index i = 0; i < 80; ++i) {
    if (s.w[i] == 1) n1 += s.y[i] / s.e[i], d1 += 1 / s.e[i];
    else n0 += s.y[i] / (1 - s.e[i]), d0 += 1 / (1 - s.e[i]);
  }
  EXPECT_NEAR(r.estimate, n1 / d1 - n0 / d0, 1e-12);
}

TEST(Inputs, Validation) {
  const Vec y = Vec::Ones(3), w = (Vec(3) << 1, 1, 1).finished(), e = Vec::Constant(3, 0.5);
  try {
    ipw(y, w, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DegenerateGroups);
  }
  const Vec w2 = (Vec(3) << 1, 0, 1).finished();
  EXPECT_THROW(ipw(y, w2, (Vec(3) << 0.5, 1.0, 0.5).finished()), Error);
  EXPECT_THROW(ipw(y, (Vec(3) << 1, 0, 2).finished(), e), Error);
  EXPECT_THROW(aipw(y, w2, e, Vec::Zero(2), Vec::Zero(3)), Error);
}

// Known nuisances: AIPW is unbiased when either the propensity or the outcome
// regression is right.
TEST(Aipw, DoubleRobustness) {
  std::mt19937_64 rng(77);
  const Eigen::Index n = 200000;
  const Vec x = normal_vec(rng, n);
  Vec e(n), w(n), y(n), m0(n), m1(n);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> z(0, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = normal_cdf(0.8 * x[i]);
    w[i] = u(rng) < e[i];
    m0[i] = 2 * x[i];
    m1[i] = 2 * x[i] + 1;
    y[i] = (w[i] == 1 ? m1[i] : m0[i]) + z(rng);
  }
  const Vec wrong_e = Vec::Constant(n, 0.5);
  const Vec wrong_m = Vec::Zero(n);
  const auto good_e = aipw(y, w, e, wrong_m, wrong_m);
  const auto good_m = aipw(y, w, wrong_e, m1, m0);
  EXPECT_NEAR(good_e.estimate, 1.0, 4 * good_e.se);
  EXPECT_NEAR(good_m.estimate, 1.0, 4 * good_m.se);
  // Both wrong: confounded by x, far from 1.
  EXPECT_GT(std::abs(aipw(y, w, wrong_e, wrong_m, wrong_m).estimate - 1.0), 1.0);
}

TEST(Balance, HandComputedSmd) {
  glm::Frame f;
  f.names = {"x"};
  f.values = (Mat(6, 1) << 1, 2, 3, 2, 3, 4).finished();
  const Vec w = (Vec(6) << 1, 1, 1, 0, 0, 0).finished();
  const auto r = balance_report(f, {"x"}, w, (Vec(6) << 1, 1, 1, 1, 1, 1).finished());
  // means 2 and 3, both variances 1
  EXPECT_DOUBLE_EQ(r.rows[0].raw_smd, -1);
  EXPECT_DOUBLE_EQ(r.rows[0].weighted_smd, -1);
  const auto weighted = balance_report(f, {"x"}, w, (Vec(6) << 1, 1, 4, 4, 1, 1).finished());
  // weighted means (1 + 2 + 12) / 6 = 2.5 and (8 + 3 + 4) / 6 = 2.5
  EXPECT_NEAR(weighted.rows[0].weighted_smd, 0, 1e-15);
  f.values.setConstant(5);
  EXPECT_TRUE(balance_report(f, {"x"}, w, Vec::Ones(6)).rows[0].zero_variance);
}

TEST(Overlap, CountsCoverEveryUnit) {
  const auto s = random_sample(9, 500);
  const auto o = overlap_report(s.e, s.w, 20);
  ASSERT_EQ(o.edges.size(), 21u);
  std::size_t c0 = 0, c1 = 0;
  for (auto c : o.counts0) c0 += c;
  for (auto c : o.counts1) c1 += c;
  EXPECT_EQ(c0 + c1, 500u);
  EXPECT_EQ(double(c1), s.w.sum());
  std::ostringstream out;
  write_overlap_csv(out, o);
  EXPECT_NE(out.str().find("bin_lo,bin_hi,count_nonattempt,count_attempt"), std::string::npos);
}

TEST(Pipeline, RecoversConstantEffect) {
  synth::DgpSpec spec;
  spec.n = 4000;
  spec.seed = 3;
  spec.propensity_intercept = 0;
  spec.propensity_coef = {{"time_left", 0.3}, {"score_margin", -0.25}, {"rating_mean_diff", 0.15}};
  spec.outcome_coef = {{"score_margin", -0.5}, {"spread", 0.4}};
  spec.outcome_time_quadratic = 0.4;
  const auto data = synth::generate(spec);
  const auto results = estimate_pipeline(data.rows, PipelineConfig{});
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[0].stratum, "2018-19");
  EXPECT_EQ(results[1].stratum, "2021-22");
  EXPECT_EQ(results[2].stratum, "pooled");
  const auto& pooled = results[2].aipw;
  EXPECT_NEAR(pooled.estimate, data.true_ate, 4 * pooled.se);
  EXPECT_EQ(pooled.n1 + pooled.n0, spec.n);
  const Vec& e = results[2].nuisances.e;
  EXPECT_GE(e.minCoeff(), 0.01);
  EXPECT_LE(e.maxCoeff(), 0.99);
  // Weighting improves balance on every confounder.
  const auto& frame = results[2].frame;
  const auto bal = balance_report(frame, data::table1_covariates(), frame.column("w"),
                                  ipw_weights(frame.column("w"), e));
  for (const auto& row : bal.rows)
    if (std::abs(row.raw_smd) > 0.1) {
      EXPECT_LT(std::abs(row.weighted_smd), std::abs(row.raw_smd)) << row.covariate;
    }

  const auto only = estimate_pipeline(data.rows, PipelineConfig{}, "2021-22");
  ASSERT_EQ(only.size(), 1u);
  EXPECT_DOUBLE_EQ(only[0].aipw.estimate, results[1].aipw.estimate);
  EXPECT_THROW(estimate_pipeline(data.rows, PipelineConfig{}, "1999-00"), Error);
}

TEST(Json, ResultFields) {
  const auto s = random_sample(2, 40);
  const auto j = to_json(aipw(s.y, s.w, s.e, s.m1, s.m0), "pooled");
  for (const char* key : {"stratum", "method", "estimate", "se", "ci", "p", "n1", "n0"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["method"], "AIPW");
}

}  // namespace
}  // namespace tfo::ate
