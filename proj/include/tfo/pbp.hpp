// Play-by-play ingestion: raw CSV rows -> canonical events, plus on-court
// lineup replay from starting lineups and substitutions.
#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "tfo/common.hpp"

namespace tfo {

/// A non-fatal problem found while processing data, kept for audit.
struct Issue {
  std::string code;
  std::string location;
  std::string message;
};

}  // namespace tfo

namespace tfo::pbp {

struct RawPbpRow {
  std::string game_id;
  int period = 1;
  std::string clock;
  std::string home_desc;
  std::string visitor_desc;
  std::optional<int> home_score;
  std::optional<int> visitor_score;
};

enum class EventKind {
  ShotMade,
  ShotMissed,
  FreeThrowMade,
  FreeThrowMissed,
  ReboundOffensive,
  ReboundDefensive,
  Turnover,
  FoulCommitted,
  Substitution,
  JumpBall,
  Violation,
  PeriodEnd,
  Other,
};

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

struct CanonEvent {
  std::string game_id;
  int period = 1;
  int clock_s = 0;
  Team team = Team::Home;
  EventKind kind = EventKind::Other;
  int score_home = 0;
  int score_visitor = 0;
  // Substitution: incoming/outgoing player. JumpBall: `in` holds the player
  // who received the tip.
  std::string in;
  std::string out;
  // JumpBall payload: team that gained the tip.
  std::optional<Team> winner;
  // Free throws: true when this attempt ends the trip (last of "N of N").
  bool final_free_throw = false;
  std::string text;

  bool operator==(const CanonEvent&) const = default;
};

/// "M:SS" or "MM:SS" -> seconds. Throws MalformedClock.
int parse_clock(std::string_view clock);

struct Classification {
  EventKind kind = EventKind::Other;
  Team team = Team::Home;
  /// Index of the matching rule in the fixed rule order; lower wins when a row
  /// carries descriptions for both teams.
  int rule = 0;
  bool final_free_throw = false;
  std::string in;
  std::string out;
  std::string tip_to;
};

/// Keyword classification of one description. Rules, first match wins:
///   0 "SUB:" prefix            -> Substitution ("SUB: In FOR Out")
///   1 "Jump Ball"              -> JumpBall ("... Tip to Name")
///   2 "End of"/"End Period"    -> PeriodEnd
///   3 "MISS" prefix            -> FreeThrowMissed when "Free Throw", else ShotMissed
///   4 "Free Throw"             -> FreeThrowMade
///   5 "Rebound"                -> ReboundOffensive if `last_miss` is the column team,
///                                 else ReboundDefensive
///   6 "Turnover"               -> Turnover
///   7 "FOUL" (any prefix)      -> FoulCommitted
///   8 "Violation"              -> Violation
///   9 shot verbs               -> ShotMade
///  10 anything else            -> Other
/// Keywords match whole words, case-insensitively. A free throw ends the trip
/// only for "N of N" without "Technical", "Flagrant" or "Clear Path".
Classification classify_description(std::string_view text, Team column_team,
                                    std::optional<Team> last_miss);

/// Canonicalizes the rows of one game (file order preserved). Scores are
/// carried forward from the last explicit pair, starting at 0-0. A PeriodEnd is
/// appended for a period that lacks one when a later period follows or its last
/// row is at 0:00.
std::vector<CanonEvent> canonicalize(const std::vector<RawPbpRow>& game_rows,
                                     std::vector<Issue>& issues);

/// Groups rows by game_id in order of first appearance.
std::vector<std::vector<RawPbpRow>> split_games(const std::vector<RawPbpRow>& rows);

std::vector<RawPbpRow> read_pbp_csv(std::istream& in, const std::string& source = "pbp.csv");
std::vector<RawPbpRow> read_pbp_csv(const std::string& path);
void write_pbp_csv(std::ostream& out, const std::vector<RawPbpRow>& rows);

// Events export, one JSON object per line.
std::string to_json_line(const CanonEvent& e);
CanonEvent from_json_line(const std::string& line);
void write_events_jsonl(std::ostream& out, const std::vector<CanonEvent>& events);
std::vector<CanonEvent> read_events_jsonl(std::istream& in);

// ---- Names and lineups ----

/// Case-folds, maps Latin diacritics to ASCII, drops punctuation, collapses
/// whitespace, and removes generational suffixes (jr, sr, ii, iii, iv).
std::string normalize_name(std::string_view raw);

/// True when two normalized names plausibly denote the same player: equal,
/// equal surnames when either side is a bare surname, or matching
/// first initial plus surname.
bool names_match(const std::string& a, const std::string& b);

using Five = std::array<std::string, 5>;

struct LineupState {
  /// Normalized names; index 0 home, 1 visitor. Empty strings mark unknown slots.
  std::array<Five, 2> on_court;

  const Five& team(Team t) const { return on_court[t == Team::Home ? 0 : 1]; }
  Five& team(Team t) { return on_court[t == Team::Home ? 0 : 1]; }
  bool complete(Team t) const;
};

/// (game_id, team, period) -> five starters (raw names).
using StartersTable = std::map<std::tuple<std::string, Team, int>, Five>;

StartersTable read_starters_csv(std::istream& in, const std::string& source = "starters.csv");
StartersTable read_starters_csv(const std::string& path);
void write_starters_csv(std::ostream& out, const StartersTable& starters);

/// Lineup snapshot after each event of one game. At each period start the
/// lineup is reset from the starters table when an entry exists, else carried
/// over. A substitution whose outgoing player is not on court yields a
/// LineupInconsistency issue; the swap is forced by replacing the player who
/// has been on court the longest.
std::vector<LineupState> replay_lineups(const std::vector<CanonEvent>& events,
                                        const StartersTable& starters,
                                        std::vector<Issue>& issues);

/// Sets JumpBall winners from the "Tip to" player by lineup membership, where
/// resolvable; otherwise the winner is the team whose column carried the event.
void assign_jump_ball_winners(std::vector<CanonEvent>& events,
                              const std::vector<LineupState>& lineups);

/// One fully processed game.
struct Game {
  std::string game_id;
  std::vector<CanonEvent> events;
  std::vector<LineupState> lineups;  // empty when no starters were supplied
};

/// Canonicalizes every game and, when `starters` is non-null, replays lineups.
std::vector<Game> ingest(const std::vector<RawPbpRow>& rows, const StartersTable* starters,
                         std::vector<Issue>& issues);

/// Season label ("2018-19") from an NBA game id ("00218xxxxx"); empty when the
/// id does not follow that pattern.
std::string season_of(const std::string& game_id);

}  // namespace tfo::pbp
