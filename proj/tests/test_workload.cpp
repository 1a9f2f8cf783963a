#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cxlsim/sim/rng.hpp"
#include "cxlsim/workload/pattern.hpp"
#include "cxlsim/workload/trace.hpp"

using namespace cxlsim;

namespace {

PatternSpec spec(PatternKind kind, std::uint64_t footprint) {
  PatternSpec s;
  s.kind = kind;
  s.footprint_bytes = footprint;
  return s;
}

TraceLoad parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in, "t");
}

}  // namespace

TEST(Pattern, StreamWalksLinesInOrderAndWraps) {
  RequestGenerator g(spec(PatternKind::stream, 4 * 64), 0x1000, 4 * 64, Rng(1));
  std::vector<std::uint64_t> got;
  for (int i = 0; i < 6; ++i) got.push_back(g.next().address);
  EXPECT_EQ(got, (std::vector<std::uint64_t>{0x1000, 0x1040, 0x1080, 0x10c0, 0x1000, 0x1040}));
}

TEST(Pattern, UniformStaysInsideTheFootprint) {
  RequestGenerator g(spec(PatternKind::uniform, 1 << 16), 0, 1 << 16, Rng(2));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 20000; ++i) {
    const auto a = g.next().address;
    ASSERT_LT(a, 1u << 16);
    ASSERT_EQ(a % 64, 0u);
    seen.insert(a);
  }
  EXPECT_EQ(seen.size(), 1024u);
}

TEST(Pattern, ReadRatioControlsWrites) {
  auto s = spec(PatternKind::uniform, 1 << 20);
  s.read_ratio = 1.0;
  RequestGenerator ro(s, 0, 1 << 20, Rng(3));
  for (int i = 0; i < 1000; ++i) ASSERT_FALSE(ro.next().is_write);
  s.read_ratio = 0.75;
  RequestGenerator mix(s, 0, 1 << 20, Rng(3));
  int writes = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) writes += mix.next().is_write;
  EXPECT_NEAR(static_cast<double>(writes) / n, 0.25, 0.01);
}

TEST(Pattern, SkewedHitsTheHotSetAtTheConfiguredRate) {
  auto s = spec(PatternKind::skewed, 1 << 20);
  RequestGenerator g(s, 0, 1 << 20, Rng(4));
  const auto hot_end = g.hot_lines() * 64;
  EXPECT_EQ(g.hot_lines(), 1638u);
  int hot = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hot += g.next().address < hot_end;
  EXPECT_NEAR(static_cast<double>(hot) / n, 0.90, 0.01);
}

TEST(Pattern, SkewedWithHotProbOneNeverLeavesTheHotSet) {
  auto s = spec(PatternKind::skewed, 1 << 20);
  s.hot_prob = 1.0;
  RequestGenerator g(s, 0, 1 << 20, Rng(5));
  for (int i = 0; i < 10000; ++i) ASSERT_LT(g.next().address, g.hot_lines() * 64);
}

TEST(Pattern, SameSeedSameStream) {
  auto s = spec(PatternKind::skewed, 1 << 20);
  s.read_ratio = 0.5;
  RequestGenerator a(s, 0, 1 << 20, Rng(9)), b(s, 0, 1 << 20, Rng(9));
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next(), y = b.next();
    ASSERT_EQ(x.address, y.address);
    ASSERT_EQ(x.is_write, y.is_write);
  }
}

TEST(Pattern, UnknownNameIsAConfigError) {
  EXPECT_EQ(parse_pattern_kind("sequential"), PatternKind::stream);
  EXPECT_THROW(parse_pattern_kind("zipf"), ConfigError);
}

TEST(Trace, ParsesAndAlignsAddresses) {
  const auto t = parse("R 0x7f0010\nW 7f0040 # comment\n\n# only a comment\n");
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_EQ(t.records[0], (TraceRecord{TraceOp::R, 0x7f0000}));
  EXPECT_EQ(t.records[1], (TraceRecord{TraceOp::W, 0x7f0040}));
  EXPECT_TRUE(t.warnings.empty());
}

TEST(Trace, EmptyTraceWarns) {
  const auto t = parse("");
  EXPECT_TRUE(t.records.empty());
  ASSERT_EQ(t.warnings.size(), 1u);
  EXPECT_NE(t.warnings[0].find("empty"), std::string::npos);
}

TEST(Trace, TenRecords) {
  std::string text;
  for (int i = 0; i < 10; ++i) text += (i % 2 ? "W " : "R ") + std::to_string(i * 64) + "\n";
  EXPECT_EQ(parse(text).records.size(), 10u);
}

TEST(Trace, MalformedRecordsUpToOnePercentAreSkipped) {
  std::string text;
  for (int i = 0; i < 199; ++i) text += "R 0x40\n";
  text += "X 0x40\n";
  const auto t = parse(text);
  EXPECT_EQ(t.records.size(), 199u);
  EXPECT_EQ(t.malformed, 1u);
  EXPECT_EQ(t.warnings.size(), 1u);
}

TEST(Trace, MoreThanOnePercentMalformedIsAnError) {
  std::string text;
  for (int i = 0; i < 98; ++i) text += "R 0x40\n";
  text += "R zz\nR 0x40 extra\n";
  EXPECT_THROW(parse(text), ConfigError);
}

TEST(Trace, MixDegree) {
  using V = std::vector<TraceRecord>;
  const TraceRecord r{TraceOp::R, 0}, w{TraceOp::W, 0};
  EXPECT_DOUBLE_EQ(mix_degree(V{r, r, r, r}), 0.0);
  EXPECT_DOUBLE_EQ(mix_degree(V{w, w}), 0.0);
  EXPECT_DOUBLE_EQ(mix_degree(V{r, w, r, w}), 0.5);
  EXPECT_DOUBLE_EQ(mix_degree(V{r, r, r, r, r, r, r, w, w, w}), 0.3);
  EXPECT_THROW(mix_degree(V{}), ConfigError);
}

TEST(Trace, SyntheticTraceHasExactWriteCount) {
  for (double f : {0.0, 0.05, 0.3, 0.5}) {
    Rng rng(7);
    const auto t = synthetic_trace(16000, f, 1 << 20, rng);
    ASSERT_EQ(t.size(), 16000u);
    EXPECT_NEAR(mix_degree(t), f, 1e-12);
    for (const auto& x : t) ASSERT_LT(x.address, 1u << 20);
  }
}

TEST(Trace, WriteThenParseRoundTrips) {
  Rng rng(8);
  const auto t = synthetic_trace(500, 0.4, 1 << 16, rng);
  std::ostringstream os;
  write_trace(os, t);
  EXPECT_EQ(parse(os.str()).records, t);
}

TEST(Trace, GeneratorReplaysRecordsInOrder) {
  const auto t = parse("R 0x0\nW 0x40\nR 0x80\n").records;
  RequestGenerator g(spec(PatternKind::trace, 0), 0, 64, Rng(1), t);
  for (int round = 0; round < 2; ++round) {
    for (const auto& rec : t) {
      const auto r = g.next();
      EXPECT_EQ(r.address, rec.address);
      EXPECT_EQ(r.is_write, rec.op == TraceOp::W);
    }
  }
}
