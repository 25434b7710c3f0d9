#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <set>
#include <sstream>

#include "tfo/common.hpp"
#include "tfo/csv.hpp"

namespace tfo {
namespace {

TEST(Csv, ParsesQuotedFieldsAndEmbeddedNewlines) {
  std::istringstream in("a,b,c\n1,\"x, y\",\"he said \"\"hi\"\"\"\n2,\"two\nlines\",\n");
  const auto t = csv::parse(in);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.at(0, "b"), "x, y");
  EXPECT_EQ(t.at(0, "c"), "he said \"hi\"");
  EXPECT_EQ(t.at(1, "b"), "two\nlines");
  EXPECT_EQ(t.at(1, "c"), "");
  EXPECT_EQ(t.integer(1, "a"), 2);
}

TEST(Csv, RoundTripsThroughWriter) {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "", "multi\nline"};
  std::ostringstream out;
  csv::write_row(out, {"c1", "c2", "c3", "c4", "c5"});
  csv::write_row(out, fields);
  std::istringstream in(out.str());
  const auto t = csv::parse(in);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.row(0), fields);
}

TEST(Csv, AcceptsCrlfLineEndings) {
  std::istringstream in("x,y\r\n1,2\r\n");
  const auto t = csv::parse(in);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.at(0, "y"), "2");
}

TEST(Csv, ReportsLocationOfBadNumbers) {
  std::istringstream in("x\n1\nabc\n");
  const auto t = csv::parse(in);
  try {
    t.number(1, "x");
    FAIL() << "expected a MalformedCsv error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedCsv);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(Csv, MissingColumnIsAnError) {
  std::istringstream in("x\n1\n");
  const auto t = csv::parse(in);
  EXPECT_THROW(csv::require_columns(t, {"x", "y"}, "test.csv"), Error);
  EXPECT_THROW(t.at(0, "y"), Error);
}

TEST(Csv, FormatNumberRoundTrips) {
  for (double v : {0.0, 1.0, -3.5, 0.1, 1.0 / 3.0, 1e-12, 123456789.125, -2.5e300}) {
    EXPECT_EQ(std::stod(csv::format_number(v)), v) << csv::format_number(v);
  }
  EXPECT_EQ(csv::format_number(2.0), "2");
}

TEST(Stats, NormalQuantileInvertsCdf) {
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.7, 0.975, 0.999, 1 - 1e-10}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(Stats, QuantileMatchesType7) {
  // Type 7 on {1,2,3,4}: h = (n-1)p; p=0.25 -> 1.75, p=0.5 -> 2.5.
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
}

TEST(Stats, PValues) {
  EXPECT_NEAR(two_sided_p(1.959963984540054), 0.05, 1e-12);
  EXPECT_NEAR(upper_p(1.6448536269514722), 0.05, 1e-12);
  EXPECT_NEAR(upper_p(0.0), 0.5, 1e-15);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  setenv("TFO_THREADS", "4", 1);
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  unsetenv("TFO_THREADS");
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, PropagatesExceptions) {
  setenv("TFO_THREADS", "3", 1);
  EXPECT_THROW(parallel_for(50,
                            [](std::size_t i) {
                              if (i == 17) throw Error(ErrorCode::InvalidArgument, "boom");
                            }),
               Error);
  unsetenv("TFO_THREADS");
}

TEST(Parallel, ThreadCapFromEnvironment) {
  setenv("TFO_THREADS", "3", 1);
  EXPECT_EQ(worker_threads(), 3u);
  unsetenv("TFO_THREADS");
  EXPECT_GE(worker_threads(), 1u);
}

TEST(Seeds, DerivedSeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Errors, KindsMapToExitClasses) {
  EXPECT_EQ(Error(ErrorCode::Usage, "").kind(), ErrorKind::Usage);
  EXPECT_EQ(Error(ErrorCode::MalformedCsv, "").kind(), ErrorKind::Data);
  EXPECT_EQ(Error(ErrorCode::RankDeficient, "").kind(), ErrorKind::Numerical);
  EXPECT_EQ(Error(ErrorCode::NonConvergence, "").kind(), ErrorKind::Numerical);
}

}  // namespace
}  // namespace tfo
