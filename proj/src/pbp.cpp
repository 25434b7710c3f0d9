#include "tfo/pbp.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <unordered_map>

#include "json.hpp"
#include "tfo/csv.hpp"

namespace tfo::pbp {

namespace {

constexpr std::array<std::string_view, 13> kKindNames = {
    "ShotMade",       "ShotMissed", "FreeThrowMade", "FreeThrowMissed", "ReboundOffensive",
    "ReboundDefensive", "Turnover", "FoulCommitted", "Substitution",   "JumpBall",
    "Violation",      "PeriodEnd",  "Other"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Lowercased text with every non-alphanumeric byte replaced by a space and
// padded, so " keyword " searches match whole words.
std::string word_view(std::string_view s) {
  std::string out = " ";
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    out.push_back(std::isalnum(u) ? char(std::tolower(u)) : ' ');
  }
  out.push_back(' ');
  return out;
}

bool has_word(const std::string& words, std::string_view keyword) {
  std::string needle = " ";
  needle += keyword;
  needle += ' ';
  return words.find(needle) != std::string::npos;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_final_free_throw(const std::string& words, std::string_view raw) {
  if (has_word(words, "technical") || has_word(words, "flagrant") || has_word(words, "clear path"))
    return false;
  static const std::regex n_of_m(R"((\d+)\s+of\s+(\d+))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(raw.begin(), raw.end(), m, n_of_m)) return false;
  return m[1].str() == m[2].str();
}

constexpr std::array<std::string_view, 13> kShotWords = {
    "jump shot", "layup", "dunk",   "hook",  "tip",   "fadeaway", "fade away",
    "pullup",    "pull up", "step back", "floater", "3pt", "shot"};

}  // namespace

std::string_view to_string(EventKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

EventKind event_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  throw Error(ErrorCode::InvalidArgument, "unknown event kind '" + std::string(s) + "'");
}

int parse_clock(std::string_view clock) {
  const auto bad = [&] {
    return Error(ErrorCode::MalformedClock, "'" + std::string(clock) + "' is not M:SS");
  };
  const auto colon = clock.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 2) throw bad();
  const auto mins = clock.substr(0, colon);
  const auto secs = clock.substr(colon + 1);
  if (secs.size() != 2) throw bad();
  for (char c : mins)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw bad();
  for (char c : secs)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw bad();
  const int m = std::stoi(std::string(mins));
  const int s = std::stoi(std::string(secs));
  if (s > 59) throw bad();
  return 60 * m + s;
}

Classification classify_description(std::string_view text, Team column_team,
                                    std::optional<Team> last_miss) {
  Classification c;
  c.team = column_team;
  const std::string lowered = lower(trim(text));
  const std::string words = word_view(text);

  if (lowered.rfind("sub:", 0) == 0) {
    c.kind = EventKind::Substitution;
    c.rule = 0;
    const std::string body = trim(std::string_view(trim(text)).substr(4));
    static const std::regex sub_re(R"(^(.*?)\s+FOR\s+(.*)$)", std::regex::icase);
    std::smatch m;
    if (std::regex_match(body, m, sub_re)) {
      c.in = trim(m[1].str());
      c.out = trim(m[2].str());
    }
    return c;
  }
  if (has_word(words, "jump ball")) {
    c.kind = EventKind::JumpBall;
    c.rule = 1;
    static const std::regex tip_re(R"(tip to\s+(.+?)\s*$)", std::regex::icase);
    std::smatch m;
    const std::string t(text);
    if (std::regex_search(t, m, tip_re)) c.tip_to = trim(m[1].str());
    return c;
  }
  if (has_word(words, "end of") || has_word(words, "end period") || has_word(words, "period end")) {
    c.kind = EventKind::PeriodEnd;
    c.rule = 2;
    return c;
  }
  if (lowered.rfind("miss ", 0) == 0) {
    c.rule = 3;
    if (has_word(words, "free throw")) {
      c.kind = EventKind::FreeThrowMissed;
      c.final_free_throw = is_final_free_throw(words, text);
    } else {
      c.kind = EventKind::ShotMissed;
    }
    return c;
  }
  if (has_word(words, "free throw")) {
    c.kind = EventKind::FreeThrowMade;
    c.rule = 4;
    c.final_free_throw = is_final_free_throw(words, text);
    return c;
  }
  if (has_word(words, "rebound")) {
    c.rule = 5;
    c.kind = (last_miss && *last_miss == column_team) ? EventKind::ReboundOffensive
                                                      : EventKind::ReboundDefensive;
    return c;
  }
  if (has_word(words, "turnover")) {
    c.kind = EventKind::Turnover;
    c.rule = 6;
    return c;
  }
  if (has_word(words, "foul")) {
    c.kind = EventKind::FoulCommitted;
    c.rule = 7;
    return c;
  }
  if (has_word(words, "violation")) {
    c.kind = EventKind::Violation;
    c.rule = 8;
    return c;
  }
  for (auto w : kShotWords) {
    if (has_word(words, w)) {
      c.kind = EventKind::ShotMade;
      c.rule = 9;
      return c;
    }
  }
  c.kind = EventKind::Other;
  c.rule = 10;
  return c;
}

std::vector<std::vector<RawPbpRow>> split_games(const std::vector<RawPbpRow>& rows) {
  std::vector<std::vector<RawPbpRow>> games;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : rows) {
    auto [it, inserted] = slot.try_emplace(r.game_id, games.size());
    if (inserted) games.emplace_back();
    games[it->second].push_back(r);
  }
  return games;
}

std::vector<CanonEvent> canonicalize(const std::vector<RawPbpRow>& game_rows,
                                     std::vector<Issue>& issues) {
  std::vector<CanonEvent> events;
  events.reserve(game_rows.size() + 4);
  int score_home = 0;
  int score_visitor = 0;
  std::optional<Team> last_miss;
  int current_period = 0;
  int last_clock = 0;
  bool period_closed = false;

  const auto close_period = [&](const std::string& game_id, int period) {
    CanonEvent e;
    e.game_id = game_id;
    e.period = period;
    e.clock_s = 0;
    e.team = Team::Home;
    e.kind = EventKind::PeriodEnd;
    e.score_home = score_home;
    e.score_visitor = score_visitor;
    e.text = "End of Period";
    events.push_back(std::move(e));
  };

  for (std::size_t i = 0; i < game_rows.size(); ++i) {
    const auto& row = game_rows[i];
    const std::string where = row.game_id + " P" + std::to_string(row.period) + " " + row.clock;
    const int clock = parse_clock(row.clock);
    if (row.period <= 4 && clock > 720)
      throw Error(ErrorCode::MalformedClock, where + ": clock beyond 12:00");

    if (row.period != current_period) {
      if (current_period != 0 && !period_closed) close_period(row.game_id, current_period);
      if (row.period < current_period)
        issues.push_back({"PeriodOrder", where, "period decreases; rows kept in file order"});
      current_period = row.period;
      last_miss.reset();
      period_closed = false;
      last_clock = clock;
    }
    if (clock > last_clock)
      issues.push_back({"ClockOrder", where, "clock increases within period"});
    last_clock = clock;

    if (row.home_score && row.visitor_score) {
      if (*row.home_score < score_home || *row.visitor_score < score_visitor)
        issues.push_back({"ScoreOrder", where, "score decreases"});
      score_home = *row.home_score;
      score_visitor = *row.visitor_score;
    } else if (row.home_score || row.visitor_score) {
      if (row.home_score) score_home = *row.home_score;
      if (row.visitor_score) score_visitor = *row.visitor_score;
    }

    const bool has_home = !csv::is_missing(trim(row.home_desc));
    const bool has_visitor = !csv::is_missing(trim(row.visitor_desc));
    if (!has_home && !has_visitor) {
      issues.push_back({"EmptyRow", where, "row has no description"});
      continue;
    }
    std::optional<Classification> home_c;
    std::optional<Classification> visitor_c;
    if (has_home) home_c = classify_description(row.home_desc, Team::Home, last_miss);
    if (has_visitor) visitor_c = classify_description(row.visitor_desc, Team::Visitor, last_miss);
    Classification chosen;
    if (home_c && visitor_c)
      chosen = (visitor_c->rule < home_c->rule) ? *visitor_c : *home_c;
    else
      chosen = home_c ? *home_c : *visitor_c;

    CanonEvent e;
    e.game_id = row.game_id;
    e.period = row.period;
    e.clock_s = clock;
    e.team = chosen.team;
    e.kind = chosen.kind;
    e.score_home = score_home;
    e.score_visitor = score_visitor;
    e.in = chosen.in;
    e.out = chosen.out;
    e.final_free_throw = chosen.final_free_throw;
    if (e.kind == EventKind::JumpBall) {
      e.winner = chosen.team;
      e.in = chosen.tip_to;  // resolved to a team by assign_jump_ball_winners
    }
    if (has_home && has_visitor)
      e.text = trim(row.home_desc) + " | " + trim(row.visitor_desc);
    else
      e.text = trim(has_home ? row.home_desc : row.visitor_desc);
    if (e.kind == EventKind::Other)
      issues.push_back({"Unclassified", where, e.text});

    if (e.kind == EventKind::ShotMissed || e.kind == EventKind::FreeThrowMissed)
      last_miss = e.team;
    if (e.kind == EventKind::PeriodEnd) period_closed = true;
    events.push_back(std::move(e));
  }
  if (current_period != 0 && !period_closed && last_clock == 0 && !game_rows.empty())
    close_period(game_rows.back().game_id, current_period);
  return events;
}

std::vector<RawPbpRow> read_pbp_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  csv::require_columns(t, {"game_id", "period", "clock", "home_desc", "visitor_desc", "home_score",
                           "visitor_score"},
                       source);
  std::vector<RawPbpRow> rows;
  rows.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    RawPbpRow row;
    row.game_id = t.at(r, "game_id");
    row.period = int(t.integer(r, "period"));
    if (row.period < 1)
      throw Error(ErrorCode::MalformedCsv, source + " row " + std::to_string(r + 2) + ": period < 1");
    row.clock = t.at(r, "clock");
    row.home_desc = t.at(r, "home_desc");
    row.visitor_desc = t.at(r, "visitor_desc");
    if (auto v = t.optional_integer(r, "home_score")) row.home_score = int(*v);
    if (auto v = t.optional_integer(r, "visitor_score")) row.visitor_score = int(*v);
    if (csv::is_missing(trim(row.home_desc)) && csv::is_missing(trim(row.visitor_desc)))
      throw Error(ErrorCode::MalformedCsv,
                  source + " row " + std::to_string(r + 2) + ": both descriptions empty");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawPbpRow> read_pbp_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedCsv, "cannot open " + path);
  return read_pbp_csv(in, path);
}

void write_pbp_csv(std::ostream& out, const std::vector<RawPbpRow>& rows) {
  csv::write_row(out, {"game_id", "period", "clock", "home_desc", "visitor_desc", "home_score",
                       "visitor_score"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.game_id, std::to_string(r.period), r.clock, r.home_desc, r.visitor_desc,
                         r.home_score ? std::to_string(*r.home_score) : "NA",
                         r.visitor_score ? std::to_string(*r.visitor_score) : "NA"});
  }
}

std::string to_json_line(const CanonEvent& e) {
  nlohmann::ordered_json j;
  j["game_id"] = e.game_id;
  j["period"] = e.period;
  j["clock_s"] = e.clock_s;
  j["team"] = std::string(to_string(e.team));
  j["kind"] = std::string(to_string(e.kind));
  j["score_home"] = e.score_home;
  j["score_visitor"] = e.score_visitor;
  if (e.kind == EventKind::Substitution) {
    j["in"] = e.in;
    j["out"] = e.out;
  }
  if (e.kind == EventKind::JumpBall) {
    j["in"] = e.in;
    if (e.winner) j["winner"] = std::string(to_string(*e.winner));
  }
  if (e.kind == EventKind::FreeThrowMade || e.kind == EventKind::FreeThrowMissed)
    j["final_free_throw"] = e.final_free_throw;
  j["text"] = e.text;
  return j.dump();
}

CanonEvent from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedCsv, std::string("events.jsonl: ") + ex.what());
  }
  CanonEvent e;
  e.game_id = j.at("game_id").get<std::string>();
  e.period = j.at("period").get<int>();
  e.clock_s = j.at("clock_s").get<int>();
  e.team = team_from_string(j.at("team").get<std::string>());
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.score_home = j.at("score_home").get<int>();
  e.score_visitor = j.at("score_visitor").get<int>();
  e.in = j.value("in", std::string());
  e.out = j.value("out", std::string());
  if (j.contains("winner")) e.winner = team_from_string(j.at("winner").get<std::string>());
  e.final_free_throw = j.value("final_free_throw", false);
  e.text = j.value("text", std::string());
  return e;
}

void write_events_jsonl(std::ostream& out, const std::vector<CanonEvent>& events) {
  for (const auto& e : events) out << to_json_line(e) << '\n';
}

std::vector<CanonEvent> read_events_jsonl(std::istream& in) {
  std::vector<CanonEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    events.push_back(from_json_line(line));
  }
  return events;
}

// ---- Names ----

namespace {

// ASCII folds for U+00C0..U+00FF and U+0100..U+017F.
constexpr std::string_view kLatin1 =
    "AAAAAAACEEEEIIII"
    "DNOOOOO OUUUUYTs"
    "aaaaaaaceeeeiiii"
    "dnooooo ouuuuyty";
constexpr std::string_view kLatinExtA =
    "AaAaAaCcCcCcCcDd"
    "DdEeEeEeEeEeGgGg"
    "GgGgHhHhIiIiIiIi"
    "IiIiJjKkkLlLlLlL"
    "lLlNnNnNnnNnOoOo"
    "OoOoRrRrRrSsSsSs"
    "SsTtTtTtUuUuUuUu"
    "UuUuWwYyYZzZzZzs";

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto j = s.find(' ', i);
    if (j == std::string::npos) j = s.size();
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::string normalize_name(std::string_view raw) {
  std::string folded;
  folded.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto b0 = static_cast<unsigned char>(raw[i]);
    if (b0 < 0x80) {
      folded.push_back(char(b0));
      continue;
    }
    if ((b0 & 0xE0) == 0xC0 && i + 1 < raw.size()) {
      const auto b1 = static_cast<unsigned char>(raw[i + 1]);
      const unsigned cp = ((b0 & 0x1F) << 6) | (b1 & 0x3F);
      ++i;
      if (cp >= 0xC0 && cp <= 0xFF)
        folded.push_back(kLatin1[cp - 0xC0]);
      else if (cp >= 0x100 && cp <= 0x17F)
        folded.push_back(kLatinExtA[cp - 0x100]);
      else
        folded.push_back(' ');
      continue;
    }
    // Other multi-byte sequences are dropped.
    folded.push_back(' ');
    while (i + 1 < raw.size() && (static_cast<unsigned char>(raw[i + 1]) & 0xC0) == 0x80) ++i;
  }
  std::string cleaned;
  for (char c : folded) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u))
      cleaned.push_back(char(std::tolower(u)));
    else if (c == ' ' || c == '-' || c == '\t')
      cleaned.push_back(' ');
    // apostrophes and periods vanish: "D'Angelo" -> "dangelo", "P.J." -> "pj"
  }
  auto toks = tokens(cleaned);
  static const std::array<std::string_view, 5> suffixes = {"jr", "sr", "ii", "iii", "iv"};
  while (toks.size() > 1 &&
         std::find(suffixes.begin(), suffixes.end(), toks.back()) != suffixes.end())
    toks.pop_back();
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool names_match(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) return false;
  if (a == b) return true;
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  if (ta.empty() || tb.empty() || ta.back() != tb.back()) return false;
  if (ta.size() == 1 || tb.size() == 1) return true;
  // initial + surname: "q cook" vs "quinn cook"
  return ta.front()[0] == tb.front()[0] && (ta.front().size() == 1 || tb.front().size() == 1);
}

bool LineupState::complete(Team t) const {
  const auto& five = team(t);
  return std::all_of(five.begin(), five.end(), [](const std::string& s) { return !s.empty(); });
}

StartersTable read_starters_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  csv::require_columns(t, {"game_id", "team", "period", "player1", "player2", "player3", "player4",
                           "player5"},
                       source);
  StartersTable table;
  for (std::size_t r = 0; r < t.size(); ++r) {
    Five five;
    for (int k = 0; k < 5; ++k) five[k] = t.at(r, "player" + std::to_string(k + 1));
    table[{t.at(r, "game_id"), team_from_string(t.at(r, "team")), int(t.integer(r, "period"))}] =
        five;
  }
  return table;
}

StartersTable read_starters_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedCsv, "cannot open " + path);
  return read_starters_csv(in, path);
}

void write_starters_csv(std::ostream& out, const StartersTable& starters) {
  csv::write_row(out, {"game_id", "team", "period", "player1", "player2", "player3", "player4",
                       "player5"});
  for (const auto& [key, five] : starters) {
    const auto& [game, team, period] = key;
    csv::write_row(out, {game, std::string(to_string(team)), std::to_string(period), five[0],
                         five[1], five[2], five[3], five[4]});
  }
}

namespace {

// Finds the on-court slot for a player, preferring exact normalized matches.
int find_slot(const Five& five, const std::string& name) {
  for (int k = 0; k < 5; ++k)
    if (five[k] == name) return k;
  int found = -1;
  for (int k = 0; k < 5; ++k) {
    if (names_match(five[k], name)) {
      if (found >= 0) return -1;  // ambiguous
      found = k;
    }
  }
  return found;
}

}  // namespace

std::vector<LineupState> replay_lineups(const std::vector<CanonEvent>& events,
                                        const StartersTable& starters,
                                        std::vector<Issue>& issues) {
  std::vector<LineupState> out;
  out.reserve(events.size());
  LineupState state;
  // Per team and slot: sequence number of the event at which the player entered.
  std::array<std::array<long, 5>, 2> entered{};
  int period = 0;
  long seq = 0;
  for (const auto& e : events) {
    ++seq;
    if (e.period != period) {
      period = e.period;
      for (Team t : {Team::Home, Team::Visitor}) {
        auto it = starters.find({e.game_id, t, period});
        if (it != starters.end()) {
          for (int k = 0; k < 5; ++k) {
            state.team(t)[k] = normalize_name(it->second[k]);
            entered[t == Team::Home ? 0 : 1][k] = seq;
          }
        } else if (period == 1) {
          issues.push_back({"LineupInconsistency", e.game_id + " P1",
                            std::string("no starters for ") + std::string(to_string(t))});
        }
      }
    }
    if (e.kind == EventKind::Substitution) {
      auto& five = state.team(e.team);
      auto& since = entered[e.team == Team::Home ? 0 : 1];
      const std::string in = normalize_name(e.in);
      const std::string out_name = normalize_name(e.out);
      int slot = find_slot(five, out_name);
      if (slot < 0) {
        const std::string where = e.game_id + " P" + std::to_string(e.period) + " " +
                                  std::to_string(e.clock_s) + "s";
        if (find_slot(five, in) >= 0) {
          issues.push_back({"LineupInconsistency", where,
                            "'" + e.out + "' not on court and '" + e.in + "' already on; ignored"});
          out.push_back(state);
          continue;
        }
        issues.push_back({"LineupInconsistency", where,
                          "'" + e.out + "' not on court; forced swap for '" + e.in + "'"});
        slot = int(std::min_element(since.begin(), since.end()) - since.begin());
      }
      five[slot] = in;
      since[slot] = seq;
    }
    out.push_back(state);
  }
  return out;
}

void assign_jump_ball_winners(std::vector<CanonEvent>& events,
                              const std::vector<LineupState>& lineups) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto& e = events[i];
    if (e.kind != EventKind::JumpBall || e.in.empty() || i >= lineups.size()) continue;
    const std::string tip = normalize_name(e.in);
    const bool home = find_slot(lineups[i].team(Team::Home), tip) >= 0;
    const bool visitor = find_slot(lineups[i].team(Team::Visitor), tip) >= 0;
    if (home != visitor) e.winner = home ? Team::Home : Team::Visitor;
  }
}

std::vector<Game> ingest(const std::vector<RawPbpRow>& rows, const StartersTable* starters,
                         std::vector<Issue>& issues) {
  std::vector<Game> games;
  for (const auto& game_rows : split_games(rows)) {
    Game g;
    g.game_id = game_rows.front().game_id;
    g.events = canonicalize(game_rows, issues);
    if (starters) {
      g.lineups = replay_lineups(g.events, *starters, issues);
      assign_jump_ball_winners(g.events, g.lineups);
    }
    games.push_back(std::move(g));
  }
  return games;
}

std::string season_of(const std::string& game_id) {
  if (game_id.size() != 10 || game_id.rfind("00", 0) != 0) return {};
  for (char c : game_id)
    if (!std::isdigit(static_cast<unsigned char>(c))) return {};
  const int yy = std::stoi(game_id.substr(3, 2));
  const int start = (yy >= 46 ? 1900 : 2000) + yy;
  const int end = (start + 1) % 100;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%d-%02d", start, end);
  return buf;
}

}  // namespace tfo::pbp
