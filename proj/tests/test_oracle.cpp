#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dyndsg/oracle.hpp"
#include "test_util.hpp"

namespace o = dyndsg::oracle;
using dyndsg::VertexId;

TEST(Oracle, RationalBasics) {
  EXPECT_EQ(o::Rational(2, 4), o::Rational(1, 2));
  EXPECT_EQ(o::Rational(1, 3) + o::Rational(1, 6), o::Rational(1, 2));
  EXPECT_TRUE(o::Rational(1, 3) < o::Rational(1, 2));
  EXPECT_THROW(o::Rational(1, 0), dyndsg::Error);
}

TEST(Oracle, Triangle) {
  o::UndirectedGraph g{{1, 1, 1}, {{0, 1}, {1, 2}, {0, 2}}};
  const auto a = o::exact_vwdsg(g);
  EXPECT_EQ(a.edges, 3u);
  EXPECT_EQ(a.weight, o::Rational(3));
  EXPECT_EQ(a.witness, (std::vector<VertexId>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(a.density(), 1.0);
}

TEST(Oracle, WeightedEdge) {
  o::UndirectedGraph g{{1, 3}, {{0, 1}}};
  const auto a = o::exact_vwdsg(g);
  EXPECT_DOUBLE_EQ(a.density(), 0.25);
}

TEST(Oracle, EdgelessPicksSmallestWitness) {
  o::UndirectedGraph g{{1, 1, 1}, {}};
  const auto a = o::exact_vwdsg(g);
  EXPECT_EQ(a.edges, 0u);
  EXPECT_EQ(a.witness, (std::vector<VertexId>{0}));
}

TEST(Oracle, RejectsOversizeAndBadEdges) {
  o::UndirectedGraph big{std::vector<o::Rational>(17, o::Rational(1)), {}};
  EXPECT_THROW(o::exact_vwdsg(big), dyndsg::Error);
  o::UndirectedGraph loop{{1, 1}, {{0, 0}}};
  EXPECT_THROW(o::exact_vwdsg(loop), dyndsg::Error);
  EXPECT_THROW(o::exact_ddsg(o::DirectedGraph{9, {}}), dyndsg::Error);
}

TEST(Oracle, DirectedExamples) {
  EXPECT_DOUBLE_EQ(o::exact_ddsg({2, {{0, 1}}}).density(), 1.0);
  EXPECT_DOUBLE_EQ(o::exact_ddsg({3, {{0, 1}, {1, 2}, {2, 0}}}).density(), 1.0);
  const auto star = o::exact_ddsg({5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}});
  EXPECT_DOUBLE_EQ(star.density(), 2.0);
  EXPECT_EQ(star.sources, (std::vector<VertexId>{0}));
  EXPECT_EQ(star.sinks, (std::vector<VertexId>{1, 2, 3, 4}));
}

TEST(Oracle, DirectedDensityOfSets) {
  o::DirectedGraph g{4, {{0, 1}, {0, 2}, {3, 1}}};
  EXPECT_DOUBLE_EQ(o::directed_density(g, {0, 3}, {1}), 2.0 / std::sqrt(2.0));
  EXPECT_EQ(o::directed_density(g, {}, {1}), 0.0);
}

TEST(Oracle, ReducedSingleArc) {
  const o::DirectedGraph g{2, {{0, 1}}};
  EXPECT_NEAR(o::exact_reduced(g, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(o::exact_reduced(g, 2.0), 0.8, 1e-12);
  EXPECT_EQ(o::exact_reduced(o::DirectedGraph{3, {}}, 1.0), 0.0);
  EXPECT_THROW(o::exact_reduced(g, 0.0), dyndsg::Error);
}

// The reduced optimum never exceeds the directed optimum and matches it at
// the best ratio; checked on random digraphs with at most four vertices.
TEST(Oracle, ReductionBracketsDirectedOptimum) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 3;
    o::DirectedGraph g{n, {}};
    for (VertexId u = 0; u < n; ++u) {
      for (VertexId v = 0; v < n; ++v) {
        if (u != v && rng() % 2) g.edges.push_back({u, v, 1});
      }
    }
    const auto opt = o::exact_ddsg(g);
    for (double t : {0.5, 0.8, 1.0, 1.3, 2.0}) {
      EXPECT_LE(o::exact_reduced(g, t), opt.density() + 1e-9);
    }
    if (g.edges.empty()) continue;
    const double t_star =
        std::sqrt(static_cast<double>(opt.sources.size()) / static_cast<double>(opt.sinks.size()));
    EXPECT_NEAR(o::exact_reduced(g, t_star), opt.density(), 1e-9);
  }
}

TEST(Oracle, AlphaBetaChecker) {
  dyndsg::OrientationSnapshot s;
  s.loads = {1.0, 3.0};
  s.arcs = {{0, 1, 1, 3.0}};  // 0 -> 1
  EXPECT_TRUE(o::check_alpha_beta_optimality(s, 0.0, 2.0));
  EXPECT_FALSE(o::check_alpha_beta_optimality(s, 0.0, 1.5));
  EXPECT_TRUE(o::check_alpha_beta_optimality(s, 1.0, 1.0));
}

// Every orientation has max load >= the densest-subgraph optimum.
TEST(Oracle, EngineMaxLoadDominatesOptimum) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 9;
    std::vector<double> w(n);
    for (auto& x : w) x = static_cast<double>(1 + rng() % 3);
    dyndsg::OrientationEngine e(w, dyndsg::EngineConfig{});
    dyndsg::testing::EdgeMirror mirror;
    dyndsg::testing::random_updates(e, mirror, rng, 50, 0.7, 1, [](const dyndsg::OrientationEngine&) {});
    EXPECT_GE(e.max_load() + 1e-9, o::exact_vwdsg_real(w, mirror.edges()));
  }
}
