// Synthetic data with known ground truth: analysis matrices from a probit
// propensity / additive outcome model, scripted and random play-by-play
// streams, and a whole synthetic season with lineups, ratings and odds.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "tfo/dataset.hpp"
#include "tfo/pbp.hpp"

namespace tfo::synth {

enum class TauKind { Constant, Threshold, Linear };

/// Covariate laws: time_left ~ U[35, 43]; score_margin integer U[-15, 15];
/// ten player ratings integer U[65, 95]; spread ~ U[-15, 15];
/// total_score ~ U[200, 245]; period uniform on {1, 2, 3}; season uniform over
/// `seasons`. Model coefficients act on covariates standardized by their
/// population mean and sd (see standardize()).
struct DgpSpec {
  std::size_t n = 2000;
  std::vector<std::string> seasons{"2018-19", "2021-22"};
  // Propensity: P(W = 1 | X) = Phi(intercept + sum coef_j z_j).
  double propensity_intercept = 0.5;
  std::map<std::string, double> propensity_coef;
  // Baseline outcome m(X) = intercept + sum coef_j z_j + quadratic * z_time^2.
  double outcome_intercept = 0;
  std::map<std::string, double> outcome_coef;
  double outcome_time_quadratic = 0;
  // tau(X): constant c; threshold c * 1{z_cov > 0}; linear c + slope * z_cov.
  TauKind tau_kind = TauKind::Constant;
  double tau = 0.66;
  double tau_slope = 0;
  std::string tau_covariate = "score_margin";
  double noise_sd = 2.0;
  std::uint64_t seed = 1;
};

DgpSpec spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const DgpSpec& spec);

/// Population-standardized value of a covariate of `row`.
double standardize(const data::CovariateRow& row, const std::string& covariate);
double tau_of(const DgpSpec& spec, const data::CovariateRow& row);

struct SyntheticData {
  std::vector<data::CovariateRow> rows;
  Vec tau;          // true CATE per row
  Vec propensity;   // true e(X) per row
  Vec baseline;     // true m(X) = E[Y(0) | X]
  double true_ate = 0;  // sample mean of tau
};

/// Throws PositivityViolation when an implied propensity leaves [0.05, 0.95].
SyntheticData generate(const DgpSpec& spec);

nlohmann::ordered_json truth_json(const DgpSpec& spec, const SyntheticData& data);

// ---- Play-by-play ----

struct ScriptRow {
  int period = 1;
  std::string clock;
  std::string home;
  std::string visitor;
  std::optional<int> home_score;
  std::optional<int> visitor_score;
};

std::vector<pbp::RawPbpRow> script_pbp(const std::string& game_id, const std::vector<ScriptRow>& script);

/// First-period worked example (home Warriors, visitor Suns): the Suns gain at
/// 0:42 and turn it over at 0:25; labels NonAttempt with POD -3.
std::vector<pbp::RawPbpRow> worked_example_q1(const std::string& game_id = "0021800002");
/// Second-period worked example: the Warriors gain at 0:37 and dunk at 0:31;
/// labels Attempt with POD 5.
std::vector<pbp::RawPbpRow> worked_example_q2(const std::string& game_id = "0021800002");

/// A random but well-formed game over periods 1-3: alternating possessions
/// ending in shots, misses with rebounds, turnovers, fouls with free throws,
/// violations, jump balls and substitutions, with clocks dense near the end of
/// each period.
std::vector<pbp::RawPbpRow> random_game(std::uint64_t seed, const std::string& game_id);

struct SeasonSpec {
  std::string season = "2018-19";
  int n_games = 150;
  std::uint64_t seed = 7;
  /// Attempt probability is Phi(a + b z_time + c z_margin) at the gain.
  double attempt_intercept = 0.4;
  double attempt_time = 0.4;
  double attempt_margin = -0.2;
  /// Probability that an attempt earns the team a final shot of the period.
  double extra_possession = 0.6;
};

struct SyntheticSeason {
  std::vector<pbp::RawPbpRow> rows;
  pbp::StartersTable starters;
  std::vector<std::tuple<std::string, std::string, double>> ratings;  // season, player, rating
  data::OddsTable odds;

  data::RatingsTable ratings_table() const;
};

/// One opportunity per period with the gain clock in [32, 46]; attempts
/// shoot between 0:31 and 0:27, non-attempts first shoot between 0:24 and 0:15.
SyntheticSeason generate_season(const SeasonSpec& spec);

}  // namespace tfo::synth
