#include "tfo/label.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "tfo/csv.hpp"

namespace tfo::label {

using pbp::CanonEvent;
using pbp::EventKind;

void TfoDefinition::validate() const {
  if (!(window_upper_s > window_lower_s && window_lower_s > attempt_cutoff_s && attempt_cutoff_s > 0))
    throw Error(ErrorCode::InvalidArgument,
                "definition needs upper > lower > cutoff > 0, got " + std::to_string(window_upper_s) +
                    "," + std::to_string(window_lower_s) + "," + std::to_string(attempt_cutoff_s));
}

TfoDefinition parse_definition(const std::string& text) {
  std::istringstream in(text);
  std::string part;
  std::vector<int> values;
  while (std::getline(in, part, ',')) {
    try {
      values.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Usage, "cutoffs must be U,L,A integers: '" + text + "'");
    }
  }
  if (values.size() != 3) throw Error(ErrorCode::Usage, "cutoffs must be U,L,A: '" + text + "'");
  TfoDefinition def{values[0], values[1], values[2]};
  def.validate();
  return def;
}

std::string_view to_string(GainReason r) {
  switch (r) {
    case GainReason::OpponentMade: return "OpponentMade";
    case GainReason::DefensiveRebound: return "DefensiveRebound";
    case GainReason::OpponentTurnover: return "OpponentTurnover";
    case GainReason::JumpBallWon: return "JumpBallWon";
  }
  return "";
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Attempt: return "Attempt";
    case Classification::NonAttempt: return "NonAttempt";
    case Classification::Excluded: return "Excluded";
  }
  return "";
}

std::string_view to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::None: return "";
    case ExclusionReason::TurnoverBeforeCutoff: return "TurnoverBeforeCutoff";
    case ExclusionReason::OtherPlayBeforeCutoff: return "OtherPlayBeforeCutoff";
    case ExclusionReason::RepeatOpportunity: return "RepeatOpportunity";
  }
  return "";
}

std::optional<int> TfoObservation::w() const {
  switch (classification) {
    case Classification::Attempt: return 1;
    case Classification::NonAttempt: return 0;
    case Classification::Excluded: return std::nullopt;
  }
  return std::nullopt;
}

namespace {

struct Gain {
  Team team;
  GainReason reason;
};

std::optional<Gain> gain_from(const CanonEvent& e) {
  switch (e.kind) {
    case EventKind::ShotMade:
      return Gain{opponent(e.team), GainReason::OpponentMade};
    case EventKind::FreeThrowMade:
      if (e.final_free_throw) return Gain{opponent(e.team), GainReason::OpponentMade};
      return std::nullopt;
    case EventKind::ReboundDefensive:
      return Gain{e.team, GainReason::DefensiveRebound};
    case EventKind::Turnover:
      return Gain{opponent(e.team), GainReason::OpponentTurnover};
    case EventKind::JumpBall:
      return Gain{e.winner.value_or(e.team), GainReason::JumpBallWon};
    default:
      return std::nullopt;
  }
}

// An action by `t` that uses up its possession.
bool acts(const CanonEvent& e, Team t) {
  if (e.team != t) return false;
  switch (e.kind) {
    case EventKind::ShotMade:
    case EventKind::ShotMissed:
    case EventKind::FreeThrowMade:
    case EventKind::FreeThrowMissed:
    case EventKind::Turnover:
      return true;
    default:
      return false;
  }
}

int margin(const CanonEvent& e, Team t) {
  const int d = e.score_home - e.score_visitor;
  return t == Team::Home ? d : -d;
}

}  // namespace

std::vector<TfoObservation> detect_opportunities(const std::vector<CanonEvent>& events,
                                                 const TfoDefinition& def) {
  def.validate();
  std::vector<TfoObservation> out;
  int period = 0;
  std::optional<Team> holder;
  bool holder_acted = false;
  bool had_opportunity[2] = {false, false};

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.period != period) {
      period = e.period;
      holder.reset();
      holder_acted = false;
      had_opportunity[0] = had_opportunity[1] = false;
    }
    if (period > 3) continue;
    if (holder && acts(e, *holder)) holder_acted = true;

    const auto gain = gain_from(e);
    if (!gain) continue;
    if (holder && *holder == gain->team && !holder_acted) continue;  // same possession
    holder = gain->team;
    holder_acted = false;

    if (e.clock_s < def.window_lower_s || e.clock_s > def.window_upper_s) continue;
    TfoObservation obs;
    obs.game_id = e.game_id;
    obs.period = e.period;
    obs.team = gain->team;
    obs.gain_clock_s = e.clock_s;
    obs.gain_reason = gain->reason;
    obs.gain_event = i;
    obs.score_margin_at_gain = margin(e, gain->team);
    bool& seen = had_opportunity[gain->team == Team::Home ? 0 : 1];
    if (seen) {
      obs.classification = Classification::Excluded;
      obs.exclusion = ExclusionReason::RepeatOpportunity;
    } else {
      obs.classification = Classification::NonAttempt;
    }
    seen = true;
    out.push_back(std::move(obs));
  }
  return out;
}

std::optional<ClassifyOutcome> classify_opportunity(const TfoObservation& candidate,
                                                    const std::vector<CanonEvent>& events,
                                                    const TfoDefinition& def) {
  const Team t = candidate.team;
  const int cutoff = def.attempt_cutoff_s;
  for (std::size_t i = candidate.gain_event + 1; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.period != candidate.period) return std::nullopt;
    if (e.kind == EventKind::PeriodEnd)
      return ClassifyOutcome{Classification::NonAttempt, ExclusionReason::None};

    bool resolving = true;
    ClassifyOutcome at_or_after{Classification::Excluded, ExclusionReason::OtherPlayBeforeCutoff};
    switch (e.kind) {
      case EventKind::Substitution:
      case EventKind::Other:
      case EventKind::ReboundOffensive:
        resolving = false;
        break;
      case EventKind::ShotMade:
      case EventKind::ShotMissed:
      case EventKind::FreeThrowMade:
      case EventKind::FreeThrowMissed:
        if (e.team == t) at_or_after = {Classification::Attempt, ExclusionReason::None};
        break;
      case EventKind::FoulCommitted:
        if (e.team == t)
          resolving = false;  // offensive foul; the turnover row decides
        else
          at_or_after = {Classification::Attempt, ExclusionReason::None};
        break;
      case EventKind::Turnover:
        if (e.team == t)
          at_or_after = {Classification::Excluded, ExclusionReason::TurnoverBeforeCutoff};
        break;
      default:  // jump ball, violation, stray rebounds
        break;
    }
    if (!resolving) continue;
    if (e.clock_s < cutoff) return ClassifyOutcome{Classification::NonAttempt, ExclusionReason::None};
    return at_or_after;
  }
  return std::nullopt;
}

Pod compute_pod(const TfoObservation& observation, const std::vector<CanonEvent>& events) {
  const auto& gain = events.at(observation.gain_event);
  const CanonEvent* last = &gain;
  for (std::size_t i = observation.gain_event + 1; i < events.size(); ++i) {
    if (events[i].period != observation.period) break;
    last = &events[i];
    if (events[i].kind == EventKind::PeriodEnd) break;
  }
  const Team t = observation.team;
  const auto points = [](const CanonEvent& e, Team side) {
    return side == Team::Home ? e.score_home : e.score_visitor;
  };
  Pod pod;
  pod.team_points = points(*last, t) - points(gain, t);
  pod.opponent_points = points(*last, opponent(t)) - points(gain, opponent(t));
  pod.value = margin(*last, t) - margin(gain, t);
  return pod;
}

std::vector<TfoObservation> label_game(const std::vector<CanonEvent>& events,
                                       const TfoDefinition& def, std::vector<Issue>& issues,
                                       const std::string& season) {
  auto candidates = detect_opportunities(events, def);
  std::vector<TfoObservation> out;
  out.reserve(candidates.size());
  for (auto& c : candidates) {
    c.season = season.empty() ? pbp::season_of(c.game_id) : season;
    if (c.exclusion == ExclusionReason::RepeatOpportunity) {
      out.push_back(std::move(c));
      continue;
    }
    const auto outcome = classify_opportunity(c, events, def);
    if (!outcome) {
      issues.push_back({"UnresolvedOpportunity",
                        c.game_id + " P" + std::to_string(c.period) + " " +
                            std::to_string(c.gain_clock_s) + "s",
                        "event stream ends before the period does; observation dropped"});
      continue;
    }
    c.classification = outcome->classification;
    c.exclusion = outcome->exclusion;
    if (c.classification != Classification::Excluded) c.pod = compute_pod(c, events);
    out.push_back(std::move(c));
  }
  return out;
}

LabelCounts count(const std::vector<TfoObservation>& observations) {
  LabelCounts c;
  for (const auto& o : observations) {
    switch (o.exclusion) {
      case ExclusionReason::TurnoverBeforeCutoff: ++c.excluded_turnover; continue;
      case ExclusionReason::OtherPlayBeforeCutoff: ++c.excluded_other; continue;
      case ExclusionReason::RepeatOpportunity: ++c.excluded_repeat; continue;
      case ExclusionReason::None: break;
    }
    if (o.classification == Classification::Attempt)
      ++c.attempts;
    else
      ++c.non_attempts;
  }
  return c;
}

void write_observations_csv(std::ostream& out, const std::vector<TfoObservation>& observations) {
  csv::write_row(out, {"game_id", "season", "period", "team", "gain_clock_s", "gain_reason",
                       "classification", "exclusion_reason", "w", "pod"});
  for (const auto& o : observations) {
    const auto w = o.w();
    csv::write_row(out, {o.game_id, o.season, std::to_string(o.period),
                         std::string(tfo::to_string(o.team)), std::to_string(o.gain_clock_s),
                         std::string(to_string(o.gain_reason)),
                         std::string(to_string(o.classification)),
                         std::string(to_string(o.exclusion)), w ? std::to_string(*w) : "NA",
                         o.pod ? std::to_string(o.pod->value) : "NA"});
  }
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& s, const Enum (&values)[N], const std::string& what) {
  for (Enum v : values)
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::MalformedCsv, "unknown " + what + " '" + s + "'");
}

}  // namespace

std::vector<TfoObservation> read_observations_csv(std::istream& in, const std::string& source) {
  const auto t = csv::parse(in, source);
  csv::require_columns(t, {"game_id", "season", "period", "team", "gain_clock_s", "gain_reason",
                           "classification", "exclusion_reason", "w", "pod"},
                       source);
  static const GainReason reasons[] = {GainReason::OpponentMade, GainReason::DefensiveRebound,
                                       GainReason::OpponentTurnover, GainReason::JumpBallWon};
  static const Classification classes[] = {Classification::Attempt, Classification::NonAttempt,
                                           Classification::Excluded};
  static const ExclusionReason exclusions[] = {
      ExclusionReason::None, ExclusionReason::TurnoverBeforeCutoff,
      ExclusionReason::OtherPlayBeforeCutoff, ExclusionReason::RepeatOpportunity};
  std::vector<TfoObservation> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    TfoObservation o;
    o.game_id = t.at(r, "game_id");
    o.season = t.at(r, "season");
    o.period = int(t.integer(r, "period"));
    o.team = team_from_string(t.at(r, "team"));
    o.gain_clock_s = int(t.integer(r, "gain_clock_s"));
    o.gain_reason = parse_enum(t.at(r, "gain_reason"), reasons, "gain_reason");
    o.classification = parse_enum(t.at(r, "classification"), classes, "classification");
    o.exclusion = parse_enum(t.at(r, "exclusion_reason"), exclusions, "exclusion_reason");
    if (auto pod = t.optional_integer(r, "pod")) o.pod = Pod{int(*pod), 0, 0};
    out.push_back(std::move(o));
  }
  return out;
}

bool relink(TfoObservation& observation, const std::vector<CanonEvent>& events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.period != observation.period || e.clock_s != observation.gain_clock_s) continue;
    const auto gain = gain_from(e);
    if (!gain || gain->team != observation.team || gain->reason != observation.gain_reason) continue;
    observation.gain_event = i;
    observation.score_margin_at_gain = margin(e, observation.team);
    return true;
  }
  return false;
}

}  // namespace tfo::label
