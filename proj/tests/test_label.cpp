#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "tfo/label.hpp"
#include "tfo/synth.hpp"

namespace tfo::label {
namespace {

using pbp::CanonEvent;
using pbp::EventKind;

std::vector<CanonEvent> events_of(const std::vector<pbp::RawPbpRow>& rows) {
  std::vector<Issue> issues;
  return pbp::canonicalize(rows, issues);
}

std::vector<TfoObservation> label(const std::vector<pbp::RawPbpRow>& rows, const TfoDefinition& def = {}) {
  std::vector<Issue> issues;
  return label_game(events_of(rows), def, issues);
}

TEST(WorkedExample, FirstPeriodSunsNonAttempt) {
  const auto obs = label(synth::worked_example_q1());
  ASSERT_EQ(obs.size(), 1u);
  const auto& o = obs[0];
  EXPECT_EQ(o.period, 1);
  EXPECT_EQ(o.team, Team::Visitor);
  EXPECT_EQ(o.gain_clock_s, 42);
  EXPECT_EQ(o.gain_reason, GainReason::OpponentTurnover);
  EXPECT_EQ(o.classification, Classification::NonAttempt);
  EXPECT_EQ(o.w(), 0);
  ASSERT_TRUE(o.pod.has_value());
  EXPECT_EQ(o.pod->value, -3);
  EXPECT_EQ(o.pod->team_points, 0);
  EXPECT_EQ(o.pod->opponent_points, 3);
  EXPECT_EQ(o.season, "2018-19");
}

TEST(WorkedExample, SecondPeriodWarriorsAttempt) {
  const auto obs = label(synth::worked_example_q2());
  ASSERT_EQ(obs.size(), 2u);
  const auto& o = obs[1];
  EXPECT_EQ(o.period, 2);
  EXPECT_EQ(o.team, Team::Home);
  EXPECT_EQ(o.gain_clock_s, 37);
  EXPECT_EQ(o.gain_reason, GainReason::OpponentMade);
  EXPECT_EQ(o.classification, Classification::Attempt);
  EXPECT_EQ(o.w(), 1);
  ASSERT_TRUE(o.pod.has_value());
  EXPECT_EQ(o.pod->value, 5);
  EXPECT_EQ(o.pod->team_points, 5);
  EXPECT_EQ(o.pod->opponent_points, 0);
  EXPECT_EQ(o.score_margin_at_gain, 18);
}

// Minimal possession scripts: the visitor scores at `gain`, giving the home
// team the ball; `after` follows.
std::vector<pbp::RawPbpRow> scenario(const std::string& gain, std::vector<synth::ScriptRow> after) {
  std::vector<synth::ScriptRow> script{{1, gain, "", "Booker 4' Driving Layup (2 PTS)", 0, 2}};
  script.insert(script.end(), after.begin(), after.end());
  script.push_back({1, "0:00", "End of 1st Period", "", {}, {}});
  return synth::script_pbp("0021800001", script);
}

TEST(Detect, WindowIsInclusive) {
  EXPECT_TRUE(label(scenario("0:44", {})).empty());
  EXPECT_TRUE(label(scenario("0:34", {})).empty());
  ASSERT_EQ(label(scenario("0:43", {})).size(), 1u);
  ASSERT_EQ(label(scenario("0:35", {})).size(), 1u);
}

TEST(Classify, ShotAtCutoffIsAttempt) {
  const auto obs = label(scenario("0:40", {{1, "0:28", "MISS Curry 20' Jump Shot", "", {}, {}}}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].classification, Classification::Attempt);
  EXPECT_EQ(obs[0].pod->value, 0);
}

TEST(Classify, ShotJustAfterCutoffIsNonAttempt) {
  const auto obs = label(scenario("0:40", {{1, "0:27", "Curry 20' Jump Shot (2 PTS)", "", 2, 2}}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].classification, Classification::NonAttempt);
  EXPECT_EQ(obs[0].pod->value, 2);
}

TEST(Classify, TurnoverBeforeCutoffExcluded) {
  const auto obs = label(scenario("0:40", {{1, "0:30", "Curry Bad Pass Turnover (P1.T1)", "", {}, {}}}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].classification, Classification::Excluded);
  EXPECT_EQ(obs[0].exclusion, ExclusionReason::TurnoverBeforeCutoff);
  EXPECT_FALSE(obs[0].pod.has_value());
  EXPECT_FALSE(obs[0].w().has_value());
}

TEST(Classify, ViolationBeforeCutoffExcluded) {
  const auto obs = label(scenario("0:40", {{1, "0:33", "", "Ayton Kicked Ball Violation", {}, {}}}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].exclusion, ExclusionReason::OtherPlayBeforeCutoff);
}

TEST(Classify, DrawnFoulUsesFoulClock) {
  const auto obs = label(scenario("0:40", {{1, "0:29", "", "Ayton S.FOUL (P1.T1)", {}, {}},
                                           {1, "0:27", "Curry Free Throw 1 of 2 (1 PTS)", "", 1, 2},
                                           {1, "0:27", "Curry Free Throw 2 of 2 (2 PTS)", "", 2, 2}}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].classification, Classification::Attempt);
  EXPECT_EQ(obs[0].pod->value, 2);
}

TEST(Classify, SubstitutionsDoNotResolve) {
  const auto obs = label(scenario("0:40", {{1, "0:33", "SUB: Cook FOR Looney", "", {}, {}},
                                           {1, "0:30", "Curry 3' Layup (2 PTS)", "", 2, 2}}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].classification, Classification::Attempt);
}

TEST(Classify, HoldingToPeriodEndIsNonAttempt) {
  const auto obs = label(scenario("0:40", {}));
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].classification, Classification::NonAttempt);
  EXPECT_EQ(obs[0].pod->value, 0);
}

TEST(Detect, RepeatOpportunityExcluded) {
  // Home gains at 42, misses, visitor rebounds and misses, home rebounds at 37.
  const auto obs = label(scenario("0:42", {{1, "0:38", "MISS Curry 20' Jump Shot", "", {}, {}},
                                           {1, "0:38", "", "Ayton REBOUND (Off:0 Def:1)", {}, {}},
                                           {1, "0:37", "", "MISS Booker 20' Jump Shot", {}, {}},
                                           {1, "0:37", "Green REBOUND (Off:0 Def:1)", "", {}, {}}}));
  ASSERT_EQ(obs.size(), 3u);
  EXPECT_EQ(obs[0].team, Team::Home);
  EXPECT_EQ(obs[0].classification, Classification::Attempt);
  // The visitor's back-to-back opportunity is kept.
  EXPECT_EQ(obs[1].team, Team::Visitor);
  EXPECT_EQ(obs[1].classification, Classification::Attempt);
  EXPECT_EQ(obs[2].team, Team::Home);
  EXPECT_EQ(obs[2].exclusion, ExclusionReason::RepeatOpportunity);
}

TEST(Detect, OffensiveReboundIsNotANewOpportunity) {
  const auto obs = label(scenario("0:42", {{1, "0:38", "MISS Curry 20' Jump Shot", "", {}, {}},
                                           {1, "0:37", "Looney REBOUND (Off:1 Def:0)", "", {}, {}}}));
  ASSERT_EQ(obs.size(), 1u);
}

TEST(Detect, FourthPeriodIgnored) {
  auto rows = synth::script_pbp("0021800001", {{4, "0:40", "", "Booker 4' Driving Layup (2 PTS)", 0, 2},
                                               {4, "0:00", "End of 4th Period", "", {}, {}}});
  EXPECT_TRUE(label(rows).empty());
}

TEST(Label, TruncatedStreamIsDroppedWithWarning) {
  auto rows = synth::script_pbp("0021800001", {{1, "0:40", "", "Booker 4' Driving Layup (2 PTS)", 0, 2}});
  std::vector<Issue> issues;
  const auto events = events_of(rows);
  const auto obs = label_game(events, {}, issues);
  EXPECT_TRUE(obs.empty());
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].code, "UnresolvedOpportunity");
}

TEST(Definition, ParsesAndValidates) {
  EXPECT_EQ(parse_definition("43,35,28"), (TfoDefinition{43, 35, 28}));
  EXPECT_THROW(parse_definition("43,35"), Error);
  EXPECT_THROW(parse_definition("35,43,28"), Error);
  EXPECT_THROW(parse_definition("a,b,c"), Error);
  EXPECT_THROW((TfoDefinition{43, 35, 0}.validate()), Error);
}

TEST(ObservationsCsv, RoundTrip) {
  std::vector<TfoObservation> all;
  std::vector<Issue> issues;
  for (std::uint64_t s = 1; s <= 40; ++s) {
    auto obs = label_game(events_of(synth::random_game(s, "0021800001")), {}, issues);
    all.insert(all.end(), obs.begin(), obs.end());
  }
  ASSERT_FALSE(all.empty());
  std::stringstream buffer;
  write_observations_csv(buffer, all);
  const auto back = read_observations_csv(buffer);
  ASSERT_EQ(back.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(back[i].period, all[i].period);
    EXPECT_EQ(back[i].team, all[i].team);
    EXPECT_EQ(back[i].gain_clock_s, all[i].gain_clock_s);
    EXPECT_EQ(back[i].gain_reason, all[i].gain_reason);
    EXPECT_EQ(back[i].classification, all[i].classification);
    EXPECT_EQ(back[i].exclusion, all[i].exclusion);
    EXPECT_EQ(back[i].w(), all[i].w());
    EXPECT_EQ(back[i].pod.has_value(), all[i].pod.has_value());
    if (back[i].pod) {
      EXPECT_EQ(back[i].pod->value, all[i].pod->value);
    }
  }
}

TEST(Relink, FindsGainEventAgain) {
  const auto events = events_of(synth::worked_example_q2());
  std::vector<Issue> issues;
  auto obs = label_game(events, {}, issues);
  ASSERT_EQ(obs.size(), 2u);
  for (auto o : obs) {
    const std::size_t expected = o.gain_event;
    o.gain_event = 0;
    ASSERT_TRUE(relink(o, events));
    EXPECT_EQ(o.gain_event, expected);
  }
}

// ---- Properties over randomized synthetic streams ----

// Points scored by each side after the gain event, summed increment by increment.
std::pair<int, int> brute_force_points(const std::vector<CanonEvent>& events, const TfoObservation& o) {
  int team = 0, opp = 0;
  for (std::size_t i = o.gain_event + 1; i < events.size() && events[i].period == o.period; ++i) {
    const int dh = events[i].score_home - events[i - 1].score_home;
    const int dv = events[i].score_visitor - events[i - 1].score_visitor;
    (o.team == Team::Home ? team : opp) += dh;
    (o.team == Team::Home ? opp : team) += dv;
  }
  return {team, opp};
}

class RandomStreams : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomStreams, PartitionPodAndUniqueness) {
  const std::uint64_t seed = GetParam();
  const auto events = events_of(synth::random_game(seed, "0021800001"));
  std::vector<Issue> issues;
  const TfoDefinition def;
  const auto obs = label_game(events, def, issues);
  std::map<std::pair<int, Team>, int> kept;
  for (const auto& o : obs) {
    EXPECT_GE(o.gain_clock_s, def.window_lower_s);
    EXPECT_LE(o.gain_clock_s, def.window_upper_s);
    EXPECT_LE(o.period, 3);
    const bool excluded = o.classification == Classification::Excluded;
    EXPECT_EQ(excluded, o.exclusion != ExclusionReason::None);
    EXPECT_EQ(excluded, !o.pod.has_value());
    EXPECT_EQ(o.w().has_value(), !excluded);
    if (!excluded) {
      ++kept[{o.period, o.team}];
      const auto [team, opp] = brute_force_points(events, o);
      EXPECT_EQ(o.pod->team_points, team);
      EXPECT_EQ(o.pod->opponent_points, opp);
      EXPECT_EQ(o.pod->value, team - opp);
    }
  }
  for (const auto& [key, n] : kept) EXPECT_LE(n, 1);
  const auto c = count(obs);
  EXPECT_EQ(c.total(), obs.size());
}

TEST_P(RandomStreams, Deterministic) {
  const auto events = events_of(synth::random_game(GetParam(), "0021800001"));
  std::vector<Issue> i1, i2;
  const auto a = label_game(events, {}, i1);
  const auto b = label_game(events, {}, i2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].gain_event, b[k].gain_event);
    EXPECT_EQ(a[k].classification, b[k].classification);
    EXPECT_EQ(a[k].exclusion, b[k].exclusion);
    EXPECT_EQ(a[k].pod.has_value(), b[k].pod.has_value());
    if (a[k].pod) {
      EXPECT_EQ(a[k].pod->value, b[k].pod->value);
    }
  }
}

TEST_P(RandomStreams, RaisingCutoffNeverCreatesAttempts) {
  const auto events = events_of(synth::random_game(GetParam(), "0021800001"));
  for (int lo = 20; lo < 34; ++lo) {
    std::vector<Issue> issues;
    const auto a = label_game(events, {43, 35, lo}, issues);
    const auto b = label_game(events, {43, 35, lo + 1}, issues);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_EQ(a[k].gain_event, b[k].gain_event);
      if (a[k].classification == Classification::NonAttempt) {
        EXPECT_NE(b[k].classification, Classification::Attempt) << "cutoff " << lo;
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomStreams, ::testing::Range<std::uint64_t>(1, 61));

}  // namespace
}  // namespace tfo::label
