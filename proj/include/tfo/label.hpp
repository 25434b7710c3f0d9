// Two-for-one opportunity detection, attempt/non-attempt labeling and the
// post-opportunity score-differential outcome.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tfo/pbp.hpp"

namespace tfo::label {

/// Timing definition in seconds remaining in the period.
struct TfoDefinition {
  int window_upper_s = 43;
  int window_lower_s = 35;
  int attempt_cutoff_s = 28;

  /// Throws InvalidArgument unless upper > lower > cutoff > 0.
  void validate() const;
  bool operator==(const TfoDefinition&) const = default;
};

/// Parses "U,L,A" (e.g. "43,35,28").
TfoDefinition parse_definition(const std::string& text);

enum class GainReason { OpponentMade, DefensiveRebound, OpponentTurnover, JumpBallWon };
enum class Classification { Attempt, NonAttempt, Excluded };
enum class ExclusionReason { None, TurnoverBeforeCutoff, OtherPlayBeforeCutoff, RepeatOpportunity };

std::string_view to_string(GainReason r);
std::string_view to_string(Classification c);
std::string_view to_string(ExclusionReason r);

struct Pod {
  int value = 0;
  int team_points = 0;
  int opponent_points = 0;
};

struct TfoObservation {
  std::string game_id;
  std::string season;
  int period = 1;
  Team team = Team::Home;
  int gain_clock_s = 0;
  GainReason gain_reason = GainReason::OpponentMade;
  Classification classification = Classification::Excluded;
  ExclusionReason exclusion = ExclusionReason::None;
  int score_margin_at_gain = 0;
  std::optional<Pod> pod;
  /// Index of the possession-gain event in the game's event list.
  std::size_t gain_event = 0;

  /// Treatment indicator: 1 attempt, 0 non-attempt, nullopt when excluded.
  std::optional<int> w() const;
};

/// Emits a candidate whenever a team gains possession (opponent made shot or
/// final free throw, defensive rebound, opponent turnover, jump ball won) in
/// periods 1-3 with the clock inside the inclusive window. Consecutive gains by
/// the same team with no action of its own in between (and-ones, missed final
/// free throws) are one gain. A team's second candidate in a period is
/// Excluded(RepeatOpportunity); others start as NonAttempt pending
/// classification.
std::vector<TfoObservation> detect_opportunities(const std::vector<pbp::CanonEvent>& events,
                                                 const TfoDefinition& def);

struct ClassifyOutcome {
  Classification classification = Classification::NonAttempt;
  ExclusionReason exclusion = ExclusionReason::None;
};

/// Scans the events after the gain until the first one that resolves the
/// possession. Returns nullopt (UnresolvedOpportunity) when the stream ends
/// before the period does.
std::optional<ClassifyOutcome> classify_opportunity(const TfoObservation& candidate,
                                                    const std::vector<pbp::CanonEvent>& events,
                                                    const TfoDefinition& def);

/// Change in the team's score margin from the gain event to the period end.
Pod compute_pod(const TfoObservation& observation, const std::vector<pbp::CanonEvent>& events);

/// detect -> classify -> pod for one game. Unresolved candidates are dropped
/// with an UnresolvedOpportunity issue. `season` overrides the label derived
/// from the game id when non-empty.
std::vector<TfoObservation> label_game(const std::vector<pbp::CanonEvent>& events,
                                       const TfoDefinition& def, std::vector<Issue>& issues,
                                       const std::string& season = {});

struct LabelCounts {
  std::size_t attempts = 0;
  std::size_t non_attempts = 0;
  std::size_t excluded_turnover = 0;
  std::size_t excluded_other = 0;
  std::size_t excluded_repeat = 0;
  std::size_t total() const {
    return attempts + non_attempts + excluded_turnover + excluded_other + excluded_repeat;
  }
};

LabelCounts count(const std::vector<TfoObservation>& observations);

void write_observations_csv(std::ostream& out, const std::vector<TfoObservation>& observations);
/// Reads observations back; `gain_event` and `score_margin_at_gain` are not
/// stored in the file and are left at zero until relinked to events.
std::vector<TfoObservation> read_observations_csv(std::istream& in,
                                                  const std::string& source = "observations.csv");

/// Re-finds the gain event of an observation read from CSV and restores
/// `gain_event` and `score_margin_at_gain`. Returns false when no matching
/// gain event exists.
bool relink(TfoObservation& observation, const std::vector<pbp::CanonEvent>& events);

}  // namespace tfo::label
