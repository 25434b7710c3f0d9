#include "tfo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tfo::synth {

namespace {

struct Moments {
  double mean;
  double sd;
};

// Integer uniform on [lo, hi].
Moments int_uniform(int lo, int hi) {
  const double k = hi - lo + 1;
  return {0.5 * (lo + hi), std::sqrt((k * k - 1) / 12.0)};
}

Moments cont_uniform(double lo, double hi) { return {0.5 * (lo + hi), (hi - lo) / std::sqrt(12.0)}; }

Moments max_of_five_ratings() {
  double m1 = 0, m2 = 0;
  for (int k = 65; k <= 95; ++k) {
    const double p = std::pow((k - 64) / 31.0, 5) - std::pow((k - 65) / 31.0, 5);
    m1 += p * k;
    m2 += p * k * k;
  }
  return {m1, std::sqrt(m2 - m1 * m1)};
}

Moments abs_margin() {
  double m1 = 0, m2 = 0;
  for (int k = -15; k <= 15; ++k) {
    m1 += std::abs(k) / 31.0;
    m2 += double(k) * k / 31.0;
  }
  return {m1, std::sqrt(m2 - m1 * m1)};
}

Moments moments(const std::string& covariate) {
  static const Moments rating = int_uniform(65, 95);
  static const Moments max5 = max_of_five_ratings();
  static const Moments absm = abs_margin();
  if (covariate == "time_left") return cont_uniform(35, 43);
  if (covariate == "score_margin") return int_uniform(-15, 15);
  if (covariate == "max_rating" || covariate == "max_rating_opp") return max5;
  if (covariate == "mean_rating" || covariate == "mean_rating_opp") return {rating.mean, rating.sd / std::sqrt(5.0)};
  if (covariate == "spread") return cont_uniform(-15, 15);
  if (covariate == "total_score") return cont_uniform(200, 245);
  if (covariate == "rating_max_diff") return {0, max5.sd * std::sqrt(2.0)};
  if (covariate == "rating_mean_diff") return {0, rating.sd / std::sqrt(5.0) * std::sqrt(2.0)};
  if (covariate == "abs_score_margin") return absm;
  throw Error(ErrorCode::InvalidArgument, "no synthetic law for covariate '" + covariate + "'");
}

double value_of(const data::CovariateRow& r, const std::string& covariate) {
  if (covariate == "time_left") return r.time_left;
  if (covariate == "score_margin") return r.score_margin;
  if (covariate == "max_rating") return r.max_rating;
  if (covariate == "max_rating_opp") return r.max_rating_opp;
  if (covariate == "mean_rating") return r.mean_rating;
  if (covariate == "mean_rating_opp") return r.mean_rating_opp;
  if (covariate == "spread") return r.spread;
  if (covariate == "total_score") return r.total_score;
  if (covariate == "rating_max_diff") return r.rating_max_diff;
  if (covariate == "rating_mean_diff") return r.rating_mean_diff;
  if (covariate == "abs_score_margin") return r.abs_score_margin;
  throw Error(ErrorCode::InvalidArgument, "unknown covariate '" + covariate + "'");
}

std::string_view tau_name(TauKind k) {
  switch (k) {
    case TauKind::Constant: return "constant";
    case TauKind::Threshold: return "threshold";
    case TauKind::Linear: return "linear";
  }
  return "";
}

}  // namespace

double standardize(const data::CovariateRow& row, const std::string& covariate) {
  const Moments m = moments(covariate);
  return (value_of(row, covariate) - m.mean) / m.sd;
}

double tau_of(const DgpSpec& spec, const data::CovariateRow& row) {
  switch (spec.tau_kind) {
    case TauKind::Constant: return spec.tau;
    case TauKind::Threshold: return standardize(row, spec.tau_covariate) > 0 ? spec.tau : 0.0;
    case TauKind::Linear: return spec.tau + spec.tau_slope * standardize(row, spec.tau_covariate);
  }
  return spec.tau;
}

DgpSpec spec_from_json(const nlohmann::json& j) {
  DgpSpec s;
  s.n = j.value("n", s.n);
  s.seasons = j.value("seasons", s.seasons);
  s.propensity_intercept = j.value("propensity_intercept", s.propensity_intercept);
  s.propensity_coef = j.value("propensity_coef", s.propensity_coef);
  s.outcome_intercept = j.value("outcome_intercept", s.outcome_intercept);
  s.outcome_coef = j.value("outcome_coef", s.outcome_coef);
  s.outcome_time_quadratic = j.value("outcome_time_quadratic", s.outcome_time_quadratic);
  const std::string kind = j.value("tau_kind", std::string("constant"));
  if (kind == "constant") s.tau_kind = TauKind::Constant;
  else if (kind == "threshold") s.tau_kind = TauKind::Threshold;
  else if (kind == "linear") s.tau_kind = TauKind::Linear;
  else throw Error(ErrorCode::InvalidArgument, "unknown tau_kind '" + kind + "'");
  s.tau = j.value("tau", s.tau);
  s.tau_slope = j.value("tau_slope", s.tau_slope);
  s.tau_covariate = j.value("tau_covariate", s.tau_covariate);
  s.noise_sd = j.value("noise_sd", s.noise_sd);
  s.seed = j.value("seed", s.seed);
  if (s.n == 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  if (s.seasons.empty()) throw Error(ErrorCode::InvalidArgument, "seasons must be non-empty");
  if (!(s.noise_sd >= 0)) throw Error(ErrorCode::InvalidArgument, "noise_sd must be >= 0");
  for (const auto& [name, coef] : s.propensity_coef) (void)moments(name);
  for (const auto& [name, coef] : s.outcome_coef) (void)moments(name);
  (void)moments(s.tau_covariate);
  return s;
}

nlohmann::ordered_json to_json(const DgpSpec& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["seasons"] = s.seasons;
  j["propensity_intercept"] = s.propensity_intercept;
  j["propensity_coef"] = s.propensity_coef;
  j["outcome_intercept"] = s.outcome_intercept;
  j["outcome_coef"] = s.outcome_coef;
  j["outcome_time_quadratic"] = s.outcome_time_quadratic;
  j["tau_kind"] = std::string(tau_name(s.tau_kind));
  j["tau"] = s.tau;
  j["tau_slope"] = s.tau_slope;
  j["tau_covariate"] = s.tau_covariate;
  j["noise_sd"] = s.noise_sd;
  j["seed"] = s.seed;
  return j;
}

SyntheticData generate(const DgpSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> margin(-15, 15), rating(65, 95), period(1, 3);
  std::uniform_int_distribution<std::size_t> season(0, spec.seasons.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticData d;
  const auto n = Eigen::Index(spec.n);
  d.tau.resize(n);
  d.propensity.resize(n);
  d.baseline.resize(n);
  d.rows.reserve(spec.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data::CovariateRow r;
    r.season = spec.seasons[season(rng)];
    r.game_id = "synthetic-" + std::to_string(i);
    r.team = unit(rng) < 0.5 ? Team::Home : Team::Visitor;
    r.period = period(rng);
    r.time_left = 35.0 + 8.0 * unit(rng);
    r.score_margin = margin(rng);
    std::array<int, 5> own{}, opp{};
    for (auto& v : own) v = rating(rng);
    for (auto& v : opp) v = rating(rng);
    r.max_rating = *std::max_element(own.begin(), own.end());
    r.max_rating_opp = *std::max_element(opp.begin(), opp.end());
    r.mean_rating = std::accumulate(own.begin(), own.end(), 0.0) / 5.0;
    r.mean_rating_opp = std::accumulate(opp.begin(), opp.end(), 0.0) / 5.0;
    r.spread = -15.0 + 30.0 * unit(rng);
    r.total_score = 200.0 + 45.0 * unit(rng);
    r.derive();

    double index = spec.propensity_intercept;
    for (const auto& [name, coef] : spec.propensity_coef) index += coef * standardize(r, name);
    const double e = normal_cdf(index);
    if (e < 0.05 || e > 0.95)
      throw Error(ErrorCode::PositivityViolation,
                  "implied propensity " + std::to_string(e) + " outside [0.05, 0.95] at row " + std::to_string(i));
    double m = spec.outcome_intercept;
    for (const auto& [name, coef] : spec.outcome_coef) m += coef * standardize(r, name);
    const double zt = standardize(r, "time_left");
    m += spec.outcome_time_quadratic * zt * zt;
    const double tau = tau_of(spec, r);

    r.w = unit(rng) < e ? 1 : 0;
    r.y = m + r.w * tau + spec.noise_sd * noise(rng);
    d.tau[i] = tau;
    d.propensity[i] = e;
    d.baseline[i] = m;
    d.rows.push_back(std::move(r));
  }
  d.true_ate = d.tau.mean();
  return d;
}

nlohmann::ordered_json truth_json(const DgpSpec& spec, const SyntheticData& data) {
  nlohmann::ordered_json j;
  j["spec"] = to_json(spec);
  j["true_ate"] = data.true_ate;
  j["cate"] = std::vector<double>(data.tau.data(), data.tau.data() + data.tau.size());
  j["propensity"] = std::vector<double>(data.propensity.data(), data.propensity.data() + data.propensity.size());
  return j;
}

// ---- Play-by-play ----

std::vector<pbp::RawPbpRow> script_pbp(const std::string& game_id, const std::vector<ScriptRow>& script) {
  std::vector<pbp::RawPbpRow> rows;
  rows.reserve(script.size());
  for (const auto& s : script)
    rows.push_back({game_id, s.period, s.clock, s.home, s.visitor, s.home_score, s.visitor_score});
  return rows;
}

std::vector<pbp::RawPbpRow> worked_example_q1(const std::string& game_id) {
  return script_pbp(game_id, {
      {1, "1:10", "Looney 2' Putback Layup (4 PTS)", "", 29, 23},
      {1, "0:55", "", "MISS Booker 20' Jump Shot", {}, {}},
      {1, "0:54", "Looney REBOUND (Off:1 Def:4)", "", {}, {}},
      {1, "0:42", "Curry Out of Bounds - Bad Pass Turnover Turnover (P3.T5)", "", {}, {}},
      {1, "0:25", "", "Booker Discontinue Dribble Turnover (P2.T3)", {}, {}},
      {1, "0:25", "SUB: Cook FOR Looney", "", {}, {}},
      {1, "0:25", "SUB: Thompson FOR McKinnie", "", {}, {}},
      {1, "0:07", "Jerebko 27' 3PT Step Back Jump Shot (3 PTS) (Thompson 2 AST)", "", 32, 23},
      {1, "0:03", "Iguodala STEAL (1 STL)", "Booker Lost Ball Turnover (P3.T4)", {}, {}},
      {1, "0:01", "MISS Curry 55' 3PT Jump Shot", "", {}, {}},
      {1, "0:00", "WARRIORS Rebound", "", {}, {}},
  });
}

std::vector<pbp::RawPbpRow> worked_example_q2(const std::string& game_id) {
  auto rows = worked_example_q1(game_id);
  const auto q2 = script_pbp(game_id, {
      {2, "1:05", "Durant 18' Pullup Jump Shot (13 PTS)", "", 65, 45},
      {2, "0:37", "", "Booker 4' Driving Finger Roll Layup (14 PTS)", 65, 47},
      {2, "0:31", "Durant 3' Driving Dunk (15 PTS)", "", 67, 47},
      {2, "0:12", "", "Booker Out of Bounds Lost Ball Turnover (P5.T9)", {}, {}},
      {2, "0:12", "SUB: Cook FOR Jones", "", {}, {}},
      {2, "0:12", "", "SUB: Bridges FOR Anderson", {}, {}},
      {2, "0:01", "Cook 24' 3PT Pullup Jump Shot (4 PTS) (Thompson 3 AST)", "", 70, 47},
      {2, "0:00", "End of 2nd Period", "", {}, {}},
  });
  rows.insert(rows.end(), q2.begin(), q2.end());
  return rows;
}

namespace {

std::string clock_text(int seconds) {
  const int m = seconds / 60, s = seconds % 60;
  return std::to_string(m) + ":" + (s < 10 ? "0" : "") + std::to_string(s);
}

std::string ordinal_period(int p) {
  static const char* names[] = {"1st", "2nd", "3rd", "4th"};
  return "End of " + std::string(p >= 1 && p <= 4 ? names[p - 1] : "Last") + " Period";
}

class RowWriter {
 public:
  RowWriter(std::string game_id, std::vector<pbp::RawPbpRow>& rows) : game_id_(std::move(game_id)), rows_(rows) {}

  void add(int period, int clock, Team t, const std::string& text) {
    pbp::RawPbpRow r;
    r.game_id = game_id_;
    r.period = period;
    r.clock = clock_text(std::max(clock, 0));
    (t == Team::Home ? r.home_desc : r.visitor_desc) = text;
    rows_.push_back(std::move(r));
  }

  void score(int period, int clock, Team t, const std::string& text, int points) {
    (t == Team::Home ? home_ : visitor_) += points;
    add(period, clock, t, text);
    rows_.back().home_score = home_;
    rows_.back().visitor_score = visitor_;
  }

  int margin(Team t) const { return t == Team::Home ? home_ - visitor_ : visitor_ - home_; }
  void set_score(int home, int visitor) { home_ = home, visitor_ = visitor; }

 private:
  std::string game_id_;
  std::vector<pbp::RawPbpRow>& rows_;
  int home_ = 0;
  int visitor_ = 0;
};

const std::array<std::string, 10> kSyllables = {"ba", "ke", "lo", "mi", "nu", "ra", "so", "ti", "vu", "ze"};
const std::array<std::string, 8> kFirst = {"Alan", "Ben", "Carl", "Dan", "Eli", "Fred", "Gus", "Hal"};

std::string surname(int k) {
  std::string s = kSyllables[std::size_t(k / 100 % 10)] + kSyllables[std::size_t(k / 10 % 10)] +
                  kSyllables[std::size_t(k % 10)];
  s[0] = char(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

std::vector<pbp::RawPbpRow> random_game(std::uint64_t seed, const std::string& game_id) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto between = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::vector<pbp::RawPbpRow> rows;
  RowWriter out(game_id, rows);
  out.set_score(between(0, 40), between(0, 40));
  const auto player = [&](Team t) { return surname((t == Team::Home ? 0 : 500) + between(0, 9)); };

  for (int period = 1; period <= 3; ++period) {
    int clock = between(50, 100);
    Team ball = unit(rng) < 0.5 ? Team::Home : Team::Visitor;
    if (period == 1 || unit(rng) < 0.1) {
      ball = unit(rng) < 0.5 ? Team::Home : Team::Visitor;
      out.add(period, clock, Team::Home,
              "Jump Ball " + player(Team::Home) + " vs. " + player(Team::Visitor) + ": Tip to " + player(ball));
    }
    while (true) {
      clock -= between(0, 8);
      if (clock <= 0) break;
      const Team other = opponent(ball);
      const double roll = unit(rng);
      if (roll < 0.08) {
        const Team t = unit(rng) < 0.5 ? ball : other;
        out.add(period, clock, t, "SUB: " + player(t) + " FOR " + player(t));
      } else if (roll < 0.12) {
        out.add(period, clock, ball, "Timeout: Regular (Full 1 Short 0)");
      } else if (roll < 0.40) {
        const bool three = unit(rng) < 0.35;
        out.score(period, clock, ball,
                  player(ball) + (three ? " 25' 3PT Jump Shot" : " 4' Driving Layup") + " (2 PTS)", three ? 3 : 2);
        ball = other;
      } else if (roll < 0.65) {
        out.add(period, clock, ball, "MISS " + player(ball) + " 17' Jump Shot");
        if (unit(rng) < 0.7) {
          out.add(period, clock, other, player(other) + " REBOUND (Off:0 Def:1)");
          ball = other;
        } else {
          out.add(period, clock, ball, player(ball) + " REBOUND (Off:1 Def:0)");
        }
      } else if (roll < 0.77) {
        out.add(period, clock, ball, player(ball) + " Bad Pass Turnover (P1.T1)");
        ball = other;
      } else if (roll < 0.87) {
        out.add(period, clock, other, player(other) + " S.FOUL (P1.T1)");
        bool last_made = false;
        for (int k = 1; k <= 2; ++k) {
          last_made = unit(rng) < 0.75;
          const std::string ft = " Free Throw " + std::to_string(k) + " of 2";
          if (last_made)
            out.score(period, clock, ball, player(ball) + ft + " (1 PTS)", 1);
          else
            out.add(period, clock, ball, "MISS " + player(ball) + ft);
        }
        if (last_made) {
          ball = other;
        } else if (unit(rng) < 0.7) {
          out.add(period, clock, other, player(other) + " REBOUND (Off:0 Def:1)");
          ball = other;
        } else {
          out.add(period, clock, ball, player(ball) + " REBOUND (Off:1 Def:0)");
        }
      } else if (roll < 0.91) {
        out.add(period, clock, ball, player(ball) + " OFF.Foul (P1.T1)");
        out.add(period, clock, ball, player(ball) + " Offensive Foul Turnover (P1.T2)");
        ball = other;
      } else if (roll < 0.94) {
        out.add(period, clock, other, player(other) + " Kicked Ball Violation");
      } else if (roll < 0.96) {
        const Team winner = unit(rng) < 0.5 ? Team::Home : Team::Visitor;
        out.add(period, clock, Team::Home,
                "Jump Ball " + player(Team::Home) + " vs. " + player(Team::Visitor) + ": Tip to " + player(winner));
        ball = winner;
      } else {
        out.add(period, clock, ball, "Instant Replay Challenge");
      }
    }
    out.add(period, 0, Team::Home, ordinal_period(period));
  }
  return rows;
}

data::RatingsTable SyntheticSeason::ratings_table() const {
  data::RatingsTable t;
  for (const auto& [season, player, rating] : ratings) t.add(season, player, rating);
  return t;
}

SyntheticSeason generate_season(const SeasonSpec& spec) {
  const int start = data::season_start_year(spec.season);
  const std::string yy = std::to_string(start % 100 + 100).substr(1);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto between = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  constexpr int kTeams = 30, kRoster = 8;
  std::vector<std::vector<std::string>> full(kTeams), last(kTeams);
  SyntheticSeason s;
  for (int t = 0; t < kTeams; ++t) {
    for (int k = 0; k < kRoster; ++k) {
      const int id = t * kRoster + k;
      last[std::size_t(t)].push_back(surname(id));
      full[std::size_t(t)].push_back(kFirst[std::size_t(k)] + " " + surname(id));
      s.ratings.emplace_back(spec.season, full[std::size_t(t)].back(), double(between(65, 95)));
    }
  }
  const double time_sd = std::sqrt((15.0 * 15.0 - 1) / 12.0), margin_sd = std::sqrt(80.0);

  for (int g = 0; g < spec.n_games; ++g) {
    const std::string gid = "002" + yy + std::to_string(100000 + g + 1).substr(1);
    const int home = between(0, kTeams - 1);
    int visitor = between(0, kTeams - 2);
    if (visitor >= home) ++visitor;
    s.odds[gid] = {double(between(-12, 12)) + 0.5 * between(0, 1), double(between(205, 240))};

    RowWriter out(gid, s.rows);
    for (int period = 1; period <= 3; ++period) {
      std::array<std::vector<int>, 2> on, bench;
      for (int side = 0; side < 2; ++side) {
        std::vector<int> idx(kRoster);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        on[std::size_t(side)].assign(idx.begin(), idx.begin() + 5);
        bench[std::size_t(side)].assign(idx.begin() + 5, idx.end());
        const int team = side == 0 ? home : visitor;
        pbp::Five five;
        for (std::size_t k = 0; k < 5; ++k) five[k] = full[std::size_t(team)][std::size_t(on[std::size_t(side)][k])];
        s.starters[{gid, side == 0 ? Team::Home : Team::Visitor, period}] = five;
      }
      const auto name = [&](Team t, int slot) {
        const int side = t == Team::Home ? 0 : 1;
        return last[std::size_t(side == 0 ? home : visitor)][std::size_t(on[std::size_t(side)][std::size_t(slot)])];
      };

      const Team team = unit(rng) < 0.5 ? Team::Home : Team::Visitor;
      const Team opp = opponent(team);
      const int base = 25 * period;
      out.set_score(base + between(0, 12), base + between(0, 12));
      out.score(period, 125, team, name(team, 0) + " 20' Jump Shot (4 PTS)", 2);

      // One substitution per side before the gain.
      for (Team t : {Team::Home, Team::Visitor}) {
        const int side = t == Team::Home ? 0 : 1;
        const int slot = between(0, 4);
        const std::string out_name = name(t, slot);
        std::swap(on[std::size_t(side)][std::size_t(slot)], bench[std::size_t(side)][0]);
        out.add(period, 90, t, "SUB: " + name(t, slot) + " FOR " + out_name);
      }

      // Gains straddle the default window so alternative definitions change the sample.
      const int gain = between(32, 46);
      out.score(period, gain, opp, name(opp, 1) + " 3' Driving Layup (6 PTS)", 2);
      const double z_time = (gain - 39.0) / time_sd;
      const double z_margin = out.margin(team) / margin_sd;
      const bool attempt =
          unit(rng) < normal_cdf(spec.attempt_intercept + spec.attempt_time * z_time + spec.attempt_margin * z_margin);

      const auto shoot = [&](Team t, int clock, int slot) {
        if (unit(rng) < 0.5) {
          out.score(period, clock, t, name(t, slot) + " 19' Pullup Jump Shot (8 PTS)", 2);
          return true;
        }
        out.add(period, clock, t, "MISS " + name(t, slot) + " 19' Pullup Jump Shot");
        out.add(period, clock, opponent(t), name(opponent(t), slot) + " REBOUND (Off:0 Def:1)");
        return false;
      };
      if (attempt) {
        shoot(team, between(27, 31), 2);
        shoot(opp, between(6, 12), 3);
        if (unit(rng) < spec.extra_possession) shoot(team, 1, 4);
      } else {
        shoot(team, between(15, 24), 2);
        shoot(opp, between(1, 3), 3);
      }
      out.add(period, 0, Team::Home, ordinal_period(period));
    }
  }
  return s;
}

}  // namespace tfo::synth
