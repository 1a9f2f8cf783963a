#include <gtest/gtest.h>

#include <vector>

#include "cxlsim/coherence/local_cache.hpp"
#include "cxlsim/coherence/snoop_filter.hpp"
#include "cxlsim/sim/rng.hpp"
#include "cxlsim/system/simulation.hpp"
#include "reference_filter.hpp"

using namespace cxlsim;
using namespace cxlsim::testkit;

namespace {

constexpr std::uint64_t A = 0x0, B = 0x40, C = 0x80;

}  // namespace

TEST(SnoopFilter, RoomForEveryLineMeansNoSnoops) {
  auto sf = make_sf(2, VictimKind::fifo);
  EXPECT_EQ(run_sequence(sf, reads({A, B})), 0u);
  EXPECT_EQ(sf.stats().bisnp_sent, 0u);
}

TEST(SnoopFilter, FifoEvictsTheOldest) {
  auto sf = make_sf(2, VictimKind::fifo);
  EXPECT_EQ(run_sequence(sf, reads({A, B, C})), 1u);
  EXPECT_FALSE(sf.tracks(A));
  EXPECT_TRUE(sf.tracks(B));
  EXPECT_TRUE(sf.tracks(C));
}

TEST(SnoopFilter, LifoKeepsTheReusedLine) {
  auto lifo = make_sf(2, VictimKind::lifo);
  auto fifo = make_sf(2, VictimKind::fifo);
  EXPECT_EQ(run_sequence(lifo, reads({A, B, C, A})), 1u);
  EXPECT_EQ(run_sequence(fifo, reads({A, B, C, A})), 2u);
}

TEST(SnoopFilter, VictimSelection) {
  auto fifo = make_sf(3, VictimKind::fifo);
  auto lifo = make_sf(3, VictimKind::lifo);
  run_sequence(fifo, reads({A, B, C}));
  run_sequence(lifo, reads({A, B, C}));
  EXPECT_EQ(fifo.select_victim(), (std::vector<std::uint64_t>{A}));
  EXPECT_EQ(lifo.select_victim(), (std::vector<std::uint64_t>{C}));

  auto lru = make_sf(3, VictimKind::lru);
  auto mru = make_sf(3, VictimKind::mru);
  run_sequence(lru, reads({A, B, C, A}));
  run_sequence(mru, reads({A, B, C, B}));
  EXPECT_EQ(lru.select_victim(), (std::vector<std::uint64_t>{B}));
  EXPECT_EQ(mru.select_victim(), (std::vector<std::uint64_t>{B}));
}

TEST(SnoopFilter, LfiEvictsTheLeastInsertedWithLifoTieBreak) {
  auto sf = make_sf(2, VictimKind::lfi);
  run_sequence(sf, reads({A, B}));
  EXPECT_EQ(sf.select_victim(), (std::vector<std::uint64_t>{B}));
  run_sequence(sf, reads({C}));  // evicts B
  EXPECT_FALSE(sf.tracks(B));
  run_sequence(sf, reads({B}));  // A and C tie; C is newer
  EXPECT_FALSE(sf.tracks(C));
  EXPECT_EQ(sf.insertion_count(A), 1u);
  EXPECT_EQ(sf.insertion_count(B), 2u);
  // B was inserted last, but A has fewer insertions.
  EXPECT_EQ(sf.select_victim(), (std::vector<std::uint64_t>{A}));
}

TEST(SnoopFilter, BlockLengthTakesTheLongestContiguousRun) {
  auto sf = make_sf(4, VictimKind::block_length, 4);
  run_sequence(sf, reads({0x0, 0x40, 0x80, 0x200}));
  EXPECT_EQ(sf.select_victim(), (std::vector<std::uint64_t>{0x0, 0x40, 0x80}));
  auto two = make_sf(4, VictimKind::block_length, 2);
  run_sequence(two, reads({0x0, 0x40, 0x80, 0x200}));
  // Two windows of length 2; the one holding the newest insertion (0x80).
  EXPECT_EQ(two.select_victim(), (std::vector<std::uint64_t>{0x40, 0x80}));
}

TEST(SnoopFilter, BlockEvictionSendsOneSnoopForTheWholeRun) {
  auto sf = make_sf(3, VictimKind::block_length, 3);
  run_sequence(sf, reads({0x0, 0x40, 0x80}));
  EXPECT_FALSE(sf.request(0x1000, PortId(0), false, 99));
  const auto snoops = sf.take_snoops();
  ASSERT_EQ(snoops.size(), 1u);
  EXPECT_EQ(snoops[0].line, 0x0u);
  EXPECT_EQ(snoops[0].block_len, 3u);
  for (int i = 0; i < 3; ++i) sf.on_birsp(i * kLineBytes, PortId(0), false);
  const auto released = sf.take_released();
  ASSERT_EQ(released.size(), 1u);
  EXPECT_EQ(released[0].token, 99u);
  EXPECT_EQ(sf.invalidation_count(), 3u);
  EXPECT_EQ(sf.occupancy(), 1u);
}

TEST(SnoopFilter, ConflictSnoopsEveryOtherOwner) {
  auto sf = make_sf(4, VictimKind::fifo, 1, true);
  EXPECT_TRUE(sf.request(A, PortId(0), false, 1));
  EXPECT_TRUE(sf.request(A, PortId(1), false, 2));  // shared read
  EXPECT_EQ(sf.find(A)->owners.size(), 2u);
  EXPECT_FALSE(sf.request(A, PortId(2), true, 3));
  auto snoops = sf.take_snoops();
  ASSERT_EQ(snoops.size(), 2u);
  sf.on_birsp(A, PortId(0), false);
  EXPECT_TRUE(sf.take_released().empty());
  sf.on_birsp(A, PortId(1), true);
  const auto released = sf.take_released();
  ASSERT_EQ(released.size(), 1u);
  EXPECT_EQ(released[0].token, 3u);
  EXPECT_TRUE(released[0].writeback);
  EXPECT_EQ(sf.find(A)->owners, (std::vector<PortId>{PortId(2)}));
  EXPECT_EQ(sf.stats().dirty_birsp, 1u);
}

TEST(SnoopFilter, UnmatchedBirspIsAnError) {
  auto sf = make_sf(2, VictimKind::fifo);
  EXPECT_THROW(sf.on_birsp(A, PortId(0), false), std::logic_error);
  sf.request(A, PortId(0), false, 1);
  EXPECT_THROW(sf.on_birsp(A, PortId(0), false), std::logic_error);
  sf.request(B, PortId(0), false, 2);
  sf.request(C, PortId(0), false, 3);  // evicts A
  EXPECT_THROW(sf.on_birsp(A, PortId(1), false), std::logic_error);
}

TEST(SnoopFilter, RequestsToABusyLineWaitTheirTurn) {
  auto sf = make_sf(1, VictimKind::fifo);
  EXPECT_TRUE(sf.request(A, PortId(0), false, 1));
  EXPECT_FALSE(sf.request(B, PortId(0), false, 2));  // evicts A
  EXPECT_FALSE(sf.request(A, PortId(0), false, 3));  // A is mid-eviction
  EXPECT_TRUE(sf.busy(A));
  auto s = sf.take_snoops();
  ASSERT_EQ(s.size(), 1u);
  sf.on_birsp(A, PortId(0), false);
  auto released = sf.take_released();
  ASSERT_EQ(released.size(), 1u);
  EXPECT_EQ(released[0].token, 2u);
  // Token 3 now needs B evicted in turn.
  s = sf.take_snoops();
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].line, B);
  sf.on_birsp(B, PortId(0), false);
  released = sf.take_released();
  ASSERT_EQ(released.size(), 1u);
  EXPECT_EQ(released[0].token, 3u);
}

TEST(SnoopFilter, ZeroCapacityRejected) {
  EXPECT_THROW(make_sf(0, VictimKind::fifo), ConfigError);
  EXPECT_THROW(make_sf(4, VictimKind::block_length, 5), ConfigError);
}

TEST(SnoopFilter, MatchesReferenceOnRandomSequences) {
  Rng rng(2024);
  for (auto kind : kAllKinds) {
    for (int trial = 0; trial < 400; ++trial) {
      const auto c = random_case(rng);
      const auto [got, want] = oracle_compare(kind, c);
      ASSERT_EQ(got, want) << to_string(kind) << " cap " << c.capacity << " len " << c.max_len << " trial " << trial;
    }
  }
}

TEST(SnoopFilter, FifoAndLruAgreeWithoutHits) {
  // With no repeated line, touches equal insertions, so FIFO and LRU (and
  // LIFO and MRU) see the same order and pick the same victims.
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Access> seq;
    std::uint64_t next = rng.below(100);
    for (int i = 0; i < 20; ++i) {
      next += 1 + rng.below(3);
      seq.push_back({0, next * kLineBytes, rng.bernoulli(0.5)});
    }
    const std::size_t cap = 1 + rng.below(4);
    auto fifo = make_sf(cap, VictimKind::fifo), lru = make_sf(cap, VictimKind::lru);
    auto lifo = make_sf(cap, VictimKind::lifo), mru = make_sf(cap, VictimKind::mru);
    SnoopFilter::Token t = 0;
    for (const auto& a : seq) {
      EXPECT_EQ(fifo.select_victim(), lru.select_victim());
      EXPECT_EQ(lifo.select_victim(), mru.select_victim());
      serve(fifo, a, t);
      serve(lru, a, t);
      serve(lifo, a, t);
      serve(mru, a, t);
      ++t;
    }
    EXPECT_EQ(fifo.stats().hits, 0u);
    EXPECT_EQ(fifo.entries().size(), lru.entries().size());
    for (const auto& [line, e] : fifo.entries()) EXPECT_TRUE(lru.tracks(line));
    for (const auto& [line, e] : lifo.entries()) EXPECT_TRUE(mru.tracks(line));
  }
}

TEST(LocalCache, LruReplacementAndDirtyTracking) {
  LocalCache c(2);
  EXPECT_FALSE(c.access(A, false));
  EXPECT_FALSE(c.install(A, false));
  EXPECT_FALSE(c.install(B, true));
  EXPECT_TRUE(c.access(A, true));  // A becomes MRU and dirty
  const auto ev = c.install(C, false);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->line, B);
  EXPECT_TRUE(ev->dirty);
  EXPECT_EQ(c.invalidate(A), std::optional<bool>(true));
  EXPECT_EQ(c.invalidate(A), std::nullopt);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_TRUE(c.contains(C));
}

namespace {

SystemConfig coherent_pair(VictimKind kind, std::uint32_t max_len) {
  SystemConfig c;
  c.topology.kind = TopologyKind::chain;
  c.topology.requesters = 2;
  c.topology.endpoints = 1;
  c.requester.cache_lines = 64;
  c.requester.queue_capacity = 8;
  c.coherence.enabled = true;
  c.coherence.sf_capacity = 64;
  c.coherence.policy.kind = kind;
  c.coherence.policy.max_len = max_len;
  c.workload.kind = PatternKind::uniform;
  c.workload.footprint_bytes = 256 * kLineBytes;
  c.workload.read_ratio = 0.5;
  c.workload.total_requests = 3000;
  c.check_invariants = true;
  return c;
}

}  // namespace

TEST(Coherence, InclusionHoldsThroughoutARun) {
  for (auto kind : kAllKinds) {
    auto c = coherent_pair(kind, 3);
    c.workload.total_requests = 600;
    EXPECT_NO_THROW(simulate(c)) << to_string(kind);
  }
}

TEST(Coherence, SnoopedLinesMatchInvalidations) {
  // Without shared reads every line has one owner, so each invalidated line
  // is snooped exactly once. Clean lines leave the cache silently, so some
  // snoops miss.
  for (auto kind : {VictimKind::fifo, VictimKind::block_length}) {
    Simulation sim(coherent_pair(kind, 4));
    const auto s = sim.run();
    std::uint64_t snooped = 0, hits = 0;
    for (const auto& r : sim.requesters()) {
      snooped += r->counters().snooped_lines;
      hits += r->counters().invalidation_hits;
    }
    EXPECT_GT(s.invalidation_count, 0u);
    EXPECT_EQ(snooped, s.invalidation_count) << to_string(kind);
    EXPECT_LE(hits, snooped);
  }
}

TEST(Coherence, BlockSnoopChargesOneLookupPerLine) {
  // One requester streaming with a 4-line filter: under block_length 4 the
  // first eviction snoops 4 lines in one BISnp and the BIRsps leave one
  // cache lookup apart.
  SystemConfig c;
  c.topology.use_preset = false;
  c.topology.nodes = {NodeRole::requester, NodeRole::endpoint};
  LinkSpec l;
  l.a = NodeId(0);
  l.b = NodeId(1);
  c.topology.links = {l};
  c.requester.cache_lines = 8;
  c.requester.queue_capacity = 1;
  c.coherence.enabled = true;
  c.coherence.sf_capacity = 4;
  c.coherence.policy.kind = VictimKind::block_length;
  c.coherence.policy.max_len = 4;
  c.workload.kind = PatternKind::stream;
  c.workload.footprint_bytes = 5 * kLineBytes;
  c.workload.total_requests = 5;
  Simulation sim(c);
  const auto s = sim.run();
  const auto& r = sim.requesters()[0]->counters();
  EXPECT_EQ(r.bisnp_received, 1u);
  EXPECT_EQ(r.snooped_lines, 4u);
  EXPECT_EQ(r.invalidation_hits, 4u);
  EXPECT_EQ(s.invalidation_count, 4u);
  // The first freed line goes to the fifth request: BISnp 51, one lookup,
  // BIRsp 51. The other three lines stay free.
  EXPECT_DOUBLE_EQ(s.mean_invalidation_wait * 5, 51.0 + 12 + 51);
  EXPECT_EQ(sim.endpoints()[0]->snoop_filter()->occupancy(), 1u);
}
