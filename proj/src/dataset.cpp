#include "tfo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "tfo/csv.hpp"

namespace tfo::data {

void CovariateRow::derive() {
  rating_max_diff = max_rating - max_rating_opp;
  rating_mean_diff = mean_rating - mean_rating_opp;
  abs_score_margin = std::abs(score_margin);
}

const std::vector<std::string>& table1_covariates() {
  static const std::vector<std::string> names{
      "time_left",       "score_margin", "max_rating", "max_rating_opp", "mean_rating",
      "mean_rating_opp", "spread",       "total_score"};
  return names;
}

const std::vector<std::string>& derived_covariates() {
  static const std::vector<std::string> names{"rating_max_diff", "rating_mean_diff",
                                              "abs_score_margin"};
  return names;
}

const std::vector<std::string>& analysis_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"game_id", "season", "team", "period", "w", "y"};
    for (const auto& c : table1_covariates()) n.push_back(c);
    n.push_back("period_2");
    n.push_back("period_3");
    for (const auto& c : derived_covariates()) n.push_back(c);
    return n;
  }();
  return names;
}

namespace {

std::string surname(const std::string& normalized) {
  const auto pos = normalized.find_last_of(' ');
  return pos == std::string::npos ? normalized : normalized.substr(pos + 1);
}

}  // namespace

void RatingsTable::add(const std::string& season, const std::string& player, double rating) {
  const std::string name = pbp::normalize_name(player);
  if (name.empty()) throw Error(ErrorCode::MalformedCsv, "empty player name in ratings");
  if (!ratings_.emplace(std::make_pair(season, name), rating).second)
    throw Error(ErrorCode::MalformedCsv,
                "duplicate rating for (" + season + ", " + name + ")");
  by_surname_[{season, surname(name)}].push_back(name);
}

std::optional<double> RatingsTable::lookup(const std::string& season, const std::string& player,
                                           const Aliases& aliases) const {
  std::string name = pbp::normalize_name(player);
  if (auto it = ratings_.find({season, name}); it != ratings_.end()) return it->second;
  if (auto a = aliases.find(name); a != aliases.end()) {
    name = a->second;
    if (auto it = ratings_.find({season, name}); it != ratings_.end()) return it->second;
  }
  auto bucket = by_surname_.find({season, surname(name)});
  if (bucket == by_surname_.end()) return std::nullopt;
  const std::string* match = nullptr;
  for (const auto& candidate : bucket->second) {
    if (!pbp::names_match(candidate, name)) continue;
    if (match) return std::nullopt;  // ambiguous
    match = &candidate;
  }
  if (!match) return std::nullopt;
  return ratings_.at({season, *match});
}

RatingsTable read_ratings_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  csv::require_columns(t, {"season", "player", "rating"}, source);
  RatingsTable table;
  for (std::size_t r = 0; r < t.size(); ++r)
    table.add(t.at(r, "season"), t.at(r, "player"), t.number(r, "rating"));
  return table;
}

OddsTable read_odds_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  csv::require_columns(t, {"game_id", "home_spread", "total"}, source);
  OddsTable odds;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const GameOdds g{t.number(r, "home_spread"), t.number(r, "total")};
    if (!odds.emplace(t.at(r, "game_id"), g).second)
      throw Error(ErrorCode::MalformedCsv, source + ": duplicate odds for game " + t.at(r, "game_id"));
  }
  return odds;
}

Aliases read_aliases_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  csv::require_columns(t, {"raw", "canonical"}, source);
  Aliases aliases;
  for (std::size_t r = 0; r < t.size(); ++r)
    aliases[pbp::normalize_name(t.at(r, "raw"))] = pbp::normalize_name(t.at(r, "canonical"));
  return aliases;
}

AssembleResult assemble(const std::vector<label::TfoObservation>& observations,
                        const std::vector<pbp::Game>& games, const RatingsTable& ratings,
                        const OddsTable& odds, const Aliases& aliases) {
  std::map<std::string, const pbp::Game*> by_id;
  for (const auto& g : games) by_id[g.game_id] = &g;

  AssembleResult result;
  for (const auto& obs : observations) {
    const auto w = obs.w();
    if (!w || !obs.pod) continue;
    const std::string where = obs.game_id + " P" + std::to_string(obs.period) + " " +
                              std::string(to_string(obs.team)) + " @" +
                              std::to_string(obs.gain_clock_s) + "s";

    auto git = by_id.find(obs.game_id);
    if (git == by_id.end() || obs.gain_event >= git->second->events.size()) {
      ++result.drops.missing_game;
      result.issues.push_back({"MissingGame", where, "no events for observation"});
      continue;
    }
    const pbp::Game& game = *git->second;
    if (obs.gain_event >= game.lineups.size() ||
        !game.lineups[obs.gain_event].complete(Team::Home) ||
        !game.lineups[obs.gain_event].complete(Team::Visitor)) {
      ++result.drops.incomplete_lineup;
      result.issues.push_back({"IncompleteLineup", where, "lineup snapshot lacks five players"});
      continue;
    }
    const auto& lineup = game.lineups[obs.gain_event];

    std::array<std::array<double, 5>, 2> values{};
    bool rated = true;
    for (int side = 0; side < 2 && rated; ++side) {
      const Team t = side == 0 ? obs.team : opponent(obs.team);
      for (std::size_t k = 0; k < 5; ++k) {
        const auto r = ratings.lookup(obs.season, lineup.team(t)[k], aliases);
        if (!r) {
          result.issues.push_back({"MissingRating", where,
                                   "no rating for '" + lineup.team(t)[k] + "' in " + obs.season});
          rated = false;
          break;
        }
        values[std::size_t(side)][k] = *r;
      }
    }
    if (!rated) {
      ++result.drops.missing_rating;
      continue;
    }
    auto oit = odds.find(obs.game_id);
    if (oit == odds.end()) {
      ++result.drops.missing_odds;
      result.issues.push_back({"MissingOdds", where, "no odds for game " + obs.game_id});
      continue;
    }

    CovariateRow row;
    row.game_id = obs.game_id;
    row.season = obs.season;
    row.team = obs.team;
    row.period = obs.period;
    row.w = *w;
    row.y = obs.pod->value;
    row.time_left = obs.gain_clock_s;
    row.score_margin = obs.score_margin_at_gain;
    const auto& own = values[0];
    const auto& opp = values[1];
    row.max_rating = *std::max_element(own.begin(), own.end());
    row.max_rating_opp = *std::max_element(opp.begin(), opp.end());
    row.mean_rating = std::accumulate(own.begin(), own.end(), 0.0) / 5.0;
    row.mean_rating_opp = std::accumulate(opp.begin(), opp.end(), 0.0) / 5.0;
    row.spread = obs.team == Team::Home ? oit->second.home_spread : -oit->second.home_spread;
    row.total_score = oit->second.total;
    row.derive();
    result.rows.push_back(std::move(row));
  }
  return result;
}

Summary summarize(const std::vector<CovariateRow>& rows) {
  Summary s;
  for (const auto& r : rows) {
    auto& c = s.by_season[r.season];
    (r.w == 1 ? c.attempts : c.non_attempts)++;
    (r.w == 1 ? s.pooled.attempts : s.pooled.non_attempts)++;
  }
  if (rows.empty()) return s;
  const auto frame = to_frame(rows);
  const Vec w = frame.column("w");
  std::vector<std::string> covs = table1_covariates();
  covs.insert(covs.end(), derived_covariates().begin(), derived_covariates().end());
  for (const auto& name : covs) {
    const Vec x = frame.column(name);
    std::array<GroupStats, 2> stats{};
    for (int g = 0; g < 2; ++g) {
      std::vector<double> v;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (int(w[i]) == g) v.push_back(x[i]);
      if (v.empty()) continue;
      const Eigen::Map<const Vec> m(v.data(), Eigen::Index(v.size()));
      stats[std::size_t(g)] = {m.mean(), sample_sd(m)};
    }
    s.covariates[name] = stats;
  }
  return s;
}

std::vector<CovariateRow> filter_season(const std::vector<CovariateRow>& rows,
                                        const std::string& season) {
  std::vector<CovariateRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const CovariateRow& r) { return r.season == season; });
  return out;
}

std::vector<std::string> seasons(const std::vector<CovariateRow>& rows) {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.season);
  return {s.begin(), s.end()};
}

int season_start_year(const std::string& season) {
  std::size_t i = 0;
  while (i < season.size() && std::isdigit(static_cast<unsigned char>(season[i]))) ++i;
  if (i == 0) throw Error(ErrorCode::SchemaMismatch, "season label '" + season + "' has no year");
  return std::stoi(season.substr(0, i));
}

glm::Frame to_frame(const std::vector<CovariateRow>& rows) {
  glm::Frame f;
  f.names = {"w", "y", "season", "period", "period_2", "period_3"};
  for (const auto& c : table1_covariates()) f.names.push_back(c);
  for (const auto& c : derived_covariates()) f.names.push_back(c);
  f.values.resize(Eigen::Index(rows.size()), Eigen::Index(f.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double v[] = {double(r.w),       r.y,
                        double(season_start_year(r.season)),
                        double(r.period),  r.period == 2 ? 1.0 : 0.0,
                        r.period == 3 ? 1.0 : 0.0,
                        r.time_left,       r.score_margin,
                        r.max_rating,      r.max_rating_opp,
                        r.mean_rating,     r.mean_rating_opp,
                        r.spread,          r.total_score,
                        r.rating_max_diff, r.rating_mean_diff,
                        r.abs_score_margin};
    for (std::size_t j = 0; j < f.names.size(); ++j) f.values(Eigen::Index(i), Eigen::Index(j)) = v[j];
  }
  return f;
}

void write_analysis_csv(std::ostream& out, const std::vector<CovariateRow>& rows) {
  csv::write_row(out, analysis_columns());
  using csv::format_number;
  for (const auto& r : rows) {
    csv::write_row(out, {r.game_id, r.season, std::string(to_string(r.team)),
                         std::to_string(r.period), std::to_string(r.w), format_number(r.y),
                         format_number(r.time_left), format_number(r.score_margin),
                         format_number(r.max_rating), format_number(r.max_rating_opp),
                         format_number(r.mean_rating), format_number(r.mean_rating_opp),
                         format_number(r.spread), format_number(r.total_score),
                         r.period == 2 ? "1" : "0", r.period == 3 ? "1" : "0",
                         format_number(r.rating_max_diff), format_number(r.rating_mean_diff),
                         format_number(r.abs_score_margin)});
  }
}

std::vector<CovariateRow> read_analysis_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  std::vector<std::string> required{"season", "period", "w", "y"};
  required.insert(required.end(), table1_covariates().begin(), table1_covariates().end());
  csv::require_columns(t, required, source);
  std::vector<CovariateRow> rows;
  rows.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    CovariateRow row;
    if (t.has("game_id")) row.game_id = t.at(r, "game_id");
    row.season = t.at(r, "season");
    if (t.has("team")) row.team = team_from_string(t.at(r, "team"));
    row.period = int(t.integer(r, "period"));
    row.w = int(t.integer(r, "w"));
    if (row.w != 0 && row.w != 1)
      throw Error(ErrorCode::MalformedCsv, source + ": row " + std::to_string(r + 2) + ": w must be 0 or 1");
    row.y = t.number(r, "y");
    row.time_left = t.number(r, "time_left");
    row.score_margin = t.number(r, "score_margin");
    row.max_rating = t.number(r, "max_rating");
    row.max_rating_opp = t.number(r, "max_rating_opp");
    row.mean_rating = t.number(r, "mean_rating");
    row.mean_rating_opp = t.number(r, "mean_rating_opp");
    row.spread = t.number(r, "spread");
    row.total_score = t.number(r, "total_score");
    row.derive();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tfo::data
