// Joins labeled observations with lineups, player ratings and betting lines into
// the analysis matrix, one row per attempt/non-attempt.
#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tfo/design.hpp"
#include "tfo/label.hpp"

namespace tfo::data {

struct CovariateRow {
  std::string game_id;
  std::string season;
  Team team = Team::Home;
  int period = 1;
  int w = 0;
  double y = 0;  // POD
  double time_left = 0;
  double score_margin = 0;
  double max_rating = 0;
  double max_rating_opp = 0;
  double mean_rating = 0;
  double mean_rating_opp = 0;
  double spread = 0;  // observing team's projected final margin
  double total_score = 0;
  double rating_max_diff = 0;
  double rating_mean_diff = 0;
  double abs_score_margin = 0;

  /// Recomputes the three derived columns from the base ones.
  void derive();
};

/// Covariates of the propensity and outcome models, in analysis.csv order.
const std::vector<std::string>& table1_covariates();
/// Extra heterogeneity covariates used by the forest.
const std::vector<std::string>& derived_covariates();
/// Header of analysis.csv.
const std::vector<std::string>& analysis_columns();

/// Raw -> canonical normalized names, from aliases.csv (raw,canonical).
using Aliases = std::map<std::string, std::string>;

class RatingsTable {
 public:
  /// Throws MalformedCsv on a duplicate (season, player).
  void add(const std::string& season, const std::string& player, double rating);
  /// Exact normalized match first, then alias, then a unique surname /
  /// initial+surname match within the season.
  std::optional<double> lookup(const std::string& season, const std::string& player,
                               const Aliases& aliases) const;
  std::size_t size() const { return ratings_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, double> ratings_;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> by_surname_;
};

struct GameOdds {
  double home_spread = 0;  // positive: home team projected to win by that many
  double total = 0;
};
using OddsTable = std::map<std::string, GameOdds>;

RatingsTable read_ratings_csv(std::istream& in, const std::string& source = "ratings.csv");
OddsTable read_odds_csv(std::istream& in, const std::string& source = "odds.csv");
Aliases read_aliases_csv(std::istream& in, const std::string& source = "aliases.csv");

struct DropCounts {
  std::size_t missing_rating = 0;
  std::size_t missing_odds = 0;
  std::size_t incomplete_lineup = 0;
  std::size_t missing_game = 0;
  std::size_t total() const { return missing_rating + missing_odds + incomplete_lineup + missing_game; }
};

struct AssembleResult {
  std::vector<CovariateRow> rows;
  DropCounts drops;
  std::vector<Issue> issues;  // MissingRating / MissingOdds details
};

/// One row per non-excluded observation, in input order. Observations must
/// carry a valid `gain_event` into the matching game's events.
AssembleResult assemble(const std::vector<label::TfoObservation>& observations,
                        const std::vector<pbp::Game>& games, const RatingsTable& ratings,
                        const OddsTable& odds, const Aliases& aliases = {});

struct GroupStats {
  double mean = 0;
  double sd = 0;
};

struct SeasonCounts {
  std::size_t attempts = 0;
  std::size_t non_attempts = 0;
};

struct Summary {
  std::map<std::string, SeasonCounts> by_season;
  SeasonCounts pooled;
  /// covariate -> {w=0 stats, w=1 stats}
  std::map<std::string, std::array<GroupStats, 2>> covariates;
};

Summary summarize(const std::vector<CovariateRow>& rows);

std::vector<CovariateRow> filter_season(const std::vector<CovariateRow>& rows,
                                        const std::string& season);
std::vector<std::string> seasons(const std::vector<CovariateRow>& rows);

/// Numeric frame with columns w, y, season (start year), period and every
/// covariate of table1_covariates() and derived_covariates().
glm::Frame to_frame(const std::vector<CovariateRow>& rows);

/// Leading integer of a season label ("2018-19" -> 2018).
int season_start_year(const std::string& season);

void write_analysis_csv(std::ostream& out, const std::vector<CovariateRow>& rows);
std::vector<CovariateRow> read_analysis_csv(std::istream& in,
                                            const std::string& source = "analysis.csv");

}  // namespace tfo::data
