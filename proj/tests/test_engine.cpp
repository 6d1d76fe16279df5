#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dyndsg/engine.hpp"
#include "dyndsg/oracle.hpp"
#include "test_util.hpp"

using dyndsg::EngineConfig;
using dyndsg::OrientationEngine;
using dyndsg::VertexId;

namespace {

EngineConfig unit_alpha() {
  EngineConfig c;
  c.alpha = 1.0;  // levels 0, 1, 3, 7, 15, 31, ...
  c.loop_c = 4.0;
  return c;
}

void expect_healthy(const OrientationEngine& e) {
  ASSERT_EQ(e.check_consistency(), "");
  ASSERT_TRUE(e.verify_local_optimality().empty());
}

}  // namespace

TEST(Engine, FirstInsertGoesToSmallerId) {
  OrientationEngine e({1.0, 1.0}, EngineConfig{});
  e.insert(1, 0);
  EXPECT_EQ(e.oriented_count(1, 0), 1u);
  EXPECT_EQ(e.indegree(0), 1u);
  EXPECT_DOUBLE_EQ(e.label(1, 0), 1.0);
  EXPECT_EQ(e.counters().flips, 0u);
  expect_healthy(e);
}

TEST(Engine, InsertOrientsTowardSmallerLoad) {
  EngineConfig c;
  c.alpha = 0.1;
  OrientationEngine e({1.0, 1.0, 1.0}, c);
  e.insert(0, 1, 10);  // alternates: 5 copies each way
  EXPECT_EQ(e.oriented_count(0, 1), 5u);
  EXPECT_EQ(e.oriented_count(1, 0), 5u);
  EXPECT_DOUBLE_EQ(e.load(0), 5.0);
  e.insert(0, 2);
  EXPECT_EQ(e.oriented_count(0, 2), 1u);
  expect_healthy(e);
}

TEST(Engine, MultiplicityIsConserved) {
  OrientationEngine e({1.0, 1.0}, EngineConfig{});
  e.insert(0, 1, 3);
  EXPECT_EQ(e.oriented_count(0, 1) + e.oriented_count(1, 0), 3u);
  EXPECT_EQ(e.multiplicity(0, 1), 3u);
  EXPECT_EQ(e.total_copies(), 3u);
}

TEST(Engine, RejectsBadUpdates) {
  OrientationEngine e({1.0, 1.0, 1.0}, EngineConfig{});
  EXPECT_THROW(e.insert(0, 0), dyndsg::Error);
  EXPECT_THROW(e.insert(0, 3), dyndsg::Error);
  EXPECT_THROW(e.erase(0, 1), dyndsg::Error);
  e.insert(0, 1, 2);
  EXPECT_THROW(e.erase(0, 1, 3), dyndsg::Error);
  EXPECT_THROW(e.insert(0, 1, 0), dyndsg::Error);
  EXPECT_THROW(OrientationEngine({0.5, 1.0}, EngineConfig{}), dyndsg::Error);
  EXPECT_THROW(OrientationEngine({}, EngineConfig{}), dyndsg::Error);
}

TEST(Engine, CapacityIsEnforced) {
  EngineConfig c;
  c.edge_capacity = 2;
  OrientationEngine e({1.0, 1.0, 1.0}, c);
  e.insert(0, 1);
  e.insert(1, 2);
  EXPECT_THROW(e.insert(0, 2), dyndsg::Error);
}

TEST(Engine, DeleteSingleArcEmptiesOrientation) {
  OrientationEngine e({1.0, 1.0}, EngineConfig{});
  e.insert(0, 1);
  e.erase(0, 1);
  EXPECT_EQ(e.total_copies(), 0u);
  EXPECT_EQ(e.max_load(), 0.0);
  EXPECT_EQ(e.load(0), 0.0);
  EXPECT_EQ(e.load(1), 0.0);
  expect_healthy(e);
}

// Star into vertex 0: the leaves first get load 1 from private partners,
// then vertex 0 (weight 100, load below 1) takes all ten star edges.
TEST(Engine, StarDeleteRunsCheckDec) {
  std::vector<double> w(21, 1.0);
  w[0] = 100.0;
  OrientationEngine e(w, unit_alpha());
  for (VertexId i = 1; i <= 10; ++i) e.insert(i, i + 10);
  for (VertexId i = 1; i <= 10; ++i) e.insert(0, i);
  ASSERT_EQ(e.indegree(0), 10u);
  const auto dec_before = e.counters().dec_calls;
  e.erase(0, 5);
  EXPECT_EQ(e.indegree(0), 9u);
  EXPECT_GT(e.counters().dec_calls, dec_before);
  expect_healthy(e);
}

// Weights (2, 1), five copies: orientations go a, b, a, a(tie), b, leaving
// 3 copies into vertex 0 (load 1.5) and 2 into vertex 1 (load 2).
TEST(Engine, DeleteRemovesCopyIntoHigherLoad) {
  EngineConfig c;
  c.alpha = 0.1;
  OrientationEngine e({2.0, 1.0}, c);
  e.insert(0, 1, 5);
  ASSERT_EQ(e.oriented_count(1, 0), 3u);
  ASSERT_EQ(e.oriented_count(0, 1), 2u);
  ASSERT_EQ(e.counters().flips, 0u);
  e.erase(0, 1);
  EXPECT_EQ(e.oriented_count(1, 0), 3u);
  EXPECT_EQ(e.oriented_count(0, 1), 1u);
  expect_healthy(e);
}

TEST(Engine, CheckIncFreshLabelIsNoop) {
  OrientationEngine e({1.0, 1.0}, unit_alpha());
  e.insert(0, 1);
  EXPECT_EQ(e.counters().inc_arcs, 1u);
  EXPECT_EQ(e.counters().label_resets, 0u);
  EXPECT_EQ(e.counters().flips, 0u);
}

// Hand trace with alpha = 1: arc 2->0 is labelled 1 (level 1) and becomes
// stale while vertex 0 climbs to load 4 (level 3) through repeated {0,1}
// inserts. Vertex 2 sits at level 0, so the arc flips to 0->2 with label
// load(2) = 1 and vertex 0 returns to load 3.
TEST(Engine, CheckIncFlipsStaleArc) {
  OrientationEngine e({1.0, 1.0, 1.0}, unit_alpha());
  e.insert(0, 2);
  ASSERT_EQ(e.oriented_count(2, 0), 1u);
  for (int i = 0; i < 5; ++i) e.insert(0, 1);
  ASSERT_EQ(e.counters().flips, 0u);
  ASSERT_DOUBLE_EQ(e.load(0), 3.0);
  e.insert(0, 1);  // vertex 0 reaches load 4
  EXPECT_EQ(e.counters().flips, 1u);
  EXPECT_EQ(e.oriented_count(2, 0), 0u);
  EXPECT_EQ(e.oriented_count(0, 2), 1u);
  EXPECT_DOUBLE_EQ(e.label(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(e.load(0), 3.0);
  EXPECT_DOUBLE_EQ(e.load(1), 3.0);
  EXPECT_DOUBLE_EQ(e.load(2), 1.0);
  expect_healthy(e);
}

// Continuing the trace: plant label 31 (level 5) on 0->1, then delete a
// copy into vertex 0 (load 3 -> 2, level 2). 2 + 3 <= 5 so one copy flips
// back to 1->0, restoring load(0) = 3; check_dec(1) then resets the planted
// label to load(1) = 2.
TEST(Engine, CheckDecFlipsBackTowardDroppedVertex) {
  OrientationEngine e({1.0, 1.0, 1.0}, unit_alpha());
  e.insert(0, 2);
  for (int i = 0; i < 6; ++i) e.insert(0, 1);
  ASSERT_EQ(e.oriented_count(0, 1), 3u);
  ASSERT_EQ(e.oriented_count(1, 0), 3u);
  e.unsafe_set_label(0, 1, 31.0);
  const auto flips = e.counters().flips;
  e.erase(0, 1);  // tie on load 3: removes a copy into vertex 0
  EXPECT_EQ(e.counters().flips, flips + 1);
  EXPECT_DOUBLE_EQ(e.load(0), 3.0);
  EXPECT_DOUBLE_EQ(e.load(1), 2.0);
  EXPECT_EQ(e.oriented_count(0, 1), 2u);
  EXPECT_EQ(e.oriented_count(1, 0), 3u);
  EXPECT_DOUBLE_EQ(e.label(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(e.label(1, 0), 3.0);
  expect_healthy(e);
}

TEST(Engine, CheckDecNoopWhenLabelsClose) {
  OrientationEngine e({1.0, 1.0, 1.0}, unit_alpha());
  e.insert(0, 1);
  e.insert(0, 2);
  e.insert(1, 2);
  e.reset_counters();
  e.erase(1, 2);
  EXPECT_EQ(e.counters().flips, 0u);
  EXPECT_EQ(e.counters().label_resets, 0u);
}

// Budget ceil(C/alpha) = 2: four planted stale-high labels into vertex 0
// take two check_dec calls to clear.
TEST(Engine, CheckDecResetsAtMostBudgetPerCall) {
  std::vector<double> w(13, 1.0);
  w[0] = 100.0;
  EngineConfig c = unit_alpha();
  c.loop_c = 2.0;
  OrientationEngine e(w, c);
  ASSERT_EQ(e.loop_budget(), 2u);
  for (VertexId i = 1; i <= 6; ++i) e.insert(i, i + 6);
  for (VertexId i = 1; i <= 6; ++i) e.insert(0, i);
  ASSERT_EQ(e.indegree(0), 6u);
  for (VertexId i = 1; i <= 4; ++i) e.unsafe_set_label(i, 0, 100.0);
  e.reset_counters();
  e.erase(0, 6);
  EXPECT_EQ(e.counters().label_resets, 2u);
  EXPECT_EQ(e.counters().dec_arcs, 2u);
  e.erase(0, 5);
  EXPECT_EQ(e.counters().label_resets, 4u);
  expect_healthy(e);
}

TEST(Engine, PlantedViolationIsReported) {
  OrientationEngine e({1.0, 1.0}, unit_alpha());
  EXPECT_TRUE(e.verify_local_optimality().empty());
  e.insert(0, 1);
  e.unsafe_set_label(1, 0, 1000.0);  // many levels above both loads
  const auto v = e.verify_local_optimality();
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const auto& x) {
    return x.kind == dyndsg::LocalOptimalityViolation::Kind::kLabelAboveHead;
  }));
}

TEST(Engine, MaxLoadExamples) {
  OrientationEngine empty({1.0, 1.0}, EngineConfig{});
  EXPECT_EQ(empty.max_load(), 0.0);

  OrientationEngine single({1.0, 2.0}, EngineConfig{});
  single.insert(1, 0);  // tie at zero: into vertex 0
  single.erase(1, 0);
  OrientationEngine weighted({2.0, 1.0}, EngineConfig{});
  weighted.insert(0, 1);  // into vertex 0 (weight 2)
  EXPECT_DOUBLE_EQ(weighted.max_load(), 0.5);
}

// Brute force over all 8 orientations of a triangle: the best achievable
// maximum in-degree is 1, and the engine attains it.
TEST(Engine, TriangleMaxLoadMatchesBruteForce) {
  const std::pair<VertexId, VertexId> edges[] = {{0, 1}, {1, 2}, {0, 2}};
  int best = 4;
  for (int mask = 0; mask < 8; ++mask) {
    int indeg[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) ++indeg[(mask >> i & 1) ? edges[i].first : edges[i].second];
    best = std::min(best, *std::max_element(indeg, indeg + 3));
  }
  ASSERT_EQ(best, 1);
  OrientationEngine e({1.0, 1.0, 1.0}, EngineConfig{});
  for (auto [a, b] : edges) e.insert(a, b);
  EXPECT_DOUBLE_EQ(e.max_load(), best);
  double scan = 0.0;
  for (VertexId v = 0; v < 3; ++v) scan = std::max(scan, e.thresholded_load(v));
  EXPECT_EQ(e.max_load(), scan);
}

TEST(Engine, SaturationExamples) {
  EngineConfig c;
  c.epsilon = 0.5;
  c.threshold = 20.0;
  OrientationEngine empty(std::vector<double>(6, 1.0), c);
  EXPECT_FALSE(empty.saturated());

  // K6 with 10 copies per edge has optimum 25 > T, so loads hit the cap.
  c.duplication = 10;
  OrientationEngine clique(std::vector<double>(6, 1.0), c);
  for (VertexId a = 0; a < 6; ++a) {
    for (VertexId b = a + 1; b < 6; ++b) clique.insert(a, b, 10);
  }
  EXPECT_DOUBLE_EQ(clique.max_load(), 20.0);
  EXPECT_TRUE(clique.saturated());

  // A forest has optimum below 1; T = 100 log2(nW) / eps^2 is far away.
  EngineConfig f;
  f.epsilon = 0.5;
  const double lg = std::log2(16.0);
  f.threshold = 100.0 * lg / (0.25);
  OrientationEngine forest(std::vector<double>(16, 1.0), f);
  for (VertexId v = 1; v < 16; ++v) forest.insert((v - 1) / 2, v);
  EXPECT_FALSE(forest.saturated());
  EXPECT_LE(forest.max_load(), 2.0);
}

TEST(Engine, ThresholdCapsLoads) {
  EngineConfig c;
  c.threshold = 3.0;
  c.alpha = 0.5;
  OrientationEngine e({1.0, 1.0}, c);
  e.insert(0, 1, 20);
  EXPECT_EQ(e.load(0) + e.load(1), 20.0);
  EXPECT_LE(e.max_load(), 3.0);
  EXPECT_EQ(e.thresholded_load(0), 3.0);
  expect_healthy(e);
}

TEST(Engine, LocalOptimalityConstantsHoldOnSnapshot) {
  std::mt19937_64 rng(5);
  EngineConfig c;
  c.epsilon = 0.3;
  OrientationEngine e(std::vector<double>(20, 1.0), c);
  dyndsg::testing::EdgeMirror mirror;
  const auto [a, b] = e.local_optimality_constants();
  dyndsg::testing::random_updates(e, mirror, rng, 3000, 0.7, 3, [&](const OrientationEngine& eng) {
    ASSERT_TRUE(dyndsg::oracle::check_alpha_beta_optimality(eng.snapshot(), a, b));
  });
}

class EngineProperty : public ::testing::TestWithParam<std::tuple<double, bool>> {};

// Random mixed workloads with weights in [1, 4]; every structural index and
// every label inequality is re-checked after each update.
TEST_P(EngineProperty, InvariantsHoldAfterEveryUpdate) {
  const auto [eps, thresholded] = GetParam();
  std::mt19937_64 rng(static_cast<std::uint64_t>(eps * 1000) + (thresholded ? 1 : 0));
  const std::size_t n = 24;
  std::vector<double> w(n);
  std::uniform_real_distribution<double> wd(1.0, 4.0);
  for (auto& x : w) x = std::round(wd(rng) * 4.0) / 4.0;
  EngineConfig c;
  c.epsilon = eps;
  if (thresholded) c.threshold = 6.0;
  OrientationEngine e(w, c);
  dyndsg::testing::EdgeMirror mirror;
  std::uint64_t copies = 0;
  dyndsg::testing::random_updates(e, mirror, rng, 4000, 0.6, 2, [&](const OrientationEngine& eng) {
    ASSERT_EQ(eng.check_consistency(), "");
    const auto v = eng.verify_local_optimality();
    ASSERT_TRUE(v.empty()) << dyndsg::to_string(v.front().kind);
    ASSERT_LE(eng.counters().max_layer_jump, 1u);
  });
  for (const auto& [k, cnt] : mirror.map()) copies += cnt;
  EXPECT_EQ(e.total_copies(), copies);
  EXPECT_LE(e.counters().max_inc_depth, e.levels().top_level());
  EXPECT_LE(e.counters().max_dec_depth, e.levels().top_level());
}

INSTANTIATE_TEST_SUITE_P(Configs, EngineProperty,
                         ::testing::Combine(::testing::Values(0.5, 0.2), ::testing::Bool()));

TEST(Engine, DeletingEverythingRestoresEmptyState) {
  std::mt19937_64 rng(3);
  OrientationEngine e(std::vector<double>(15, 1.0), EngineConfig{});
  dyndsg::testing::EdgeMirror mirror;
  dyndsg::testing::random_updates(e, mirror, rng, 2000, 0.8, 1, [](const OrientationEngine&) {});
  while (!mirror.empty()) {
    const auto [a, b] = mirror.pick(rng);
    e.erase(a, b);
    mirror.erase(a, b);
  }
  EXPECT_EQ(e.total_copies(), 0u);
  EXPECT_EQ(e.max_load(), 0.0);
  EXPECT_EQ(e.top_layer(), 0u);
  expect_healthy(e);
}

// Insertion work per update is bounded by the loop budget C/alpha, and is
// flat in m once loads are large against 1/alpha.
TEST(Engine, InsertWorkIsAmortizedConstant) {
  auto per_op = [](std::size_t m, double alpha) {
    std::mt19937_64 rng(9);
    EngineConfig c;
    c.alpha = alpha;
    OrientationEngine e(std::vector<double>(60, 1.0), c);
    for (std::size_t i = 0; i < m; ++i) {
      const auto [a, b] = dyndsg::testing::random_pair(rng, 60);
      e.insert(a, b);
    }
    EXPECT_LE(static_cast<double>(e.counters().inc_arcs) / static_cast<double>(m),
              static_cast<double>(e.loop_budget()));
    return static_cast<double>(e.counters().inc_arcs) / static_cast<double>(m);
  };
  EXPECT_LE(per_op(16000, 0.2), 2.0 * per_op(2000, 0.2));
  per_op(8000, 0.001);
}
