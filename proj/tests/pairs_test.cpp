#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "wlgnn/graph.hpp"
#include "wlgnn/pairs.hpp"
#include "wlgnn/random.hpp"

namespace {

using namespace wlgnn;

std::vector<Edge> chain(std::size_t count) {
  std::vector<Edge> out;
  for (NodeIndex i = 0; i < count; ++i) out.emplace_back(i, i + 1);
  return out;
}

std::multiset<Edge> as_multiset(const std::vector<LabeledPair>& pairs) {
  std::multiset<Edge> out;
  for (const auto& p : pairs) out.insert({p.source, p.target});
  return out;
}

TEST(SplitPairs, TenPositivesSplitEightTwo) {
  const auto positives = chain(10);
  const auto set = split_pairs(positives, 0.8, 7);
  EXPECT_EQ(set.count(Split::train), 8u);
  EXPECT_EQ(set.count(Split::test), 2u);
  for (const auto& p : set.pairs) EXPECT_EQ(p.label, 1);
}

TEST(SplitPairs, FloorSemanticsOnSinglePositive) {
  const auto set = split_pairs(chain(1), 0.8, 7);
  EXPECT_EQ(set.count(Split::train), 0u);
  EXPECT_EQ(set.count(Split::test), 1u);
}

TEST(SplitPairs, ExactProductsAreNotRoundedDown) {
  // 0.29 * 100 evaluates to 28.999999999999996 in binary floating point.
  EXPECT_EQ(split_pairs(chain(100), 0.29, 1).count(Split::train), 29u);
  EXPECT_EQ(split_pairs(chain(10), 0.7, 1).count(Split::train), 7u);
}

TEST(SplitPairs, DeterministicGivenSeed) {
  const auto positives = chain(40);
  EXPECT_EQ(split_pairs(positives, 0.8, 3).pairs, split_pairs(positives, 0.8, 3).pairs);
  EXPECT_NE(split_pairs(positives, 0.8, 3).pairs, split_pairs(positives, 0.8, 4).pairs);
}

TEST(SplitPairs, PartitionIsDisjointAndExhaustive) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto positives = chain(1 + rng.index(60));
    const auto set = split_pairs(positives, rng.uniform(0.05, 0.95), rng.next());
    const auto train = as_multiset(set.select(Split::train));
    const auto test = as_multiset(set.select(Split::test));
    std::multiset<Edge> all = train;
    all.insert(test.begin(), test.end());
    EXPECT_EQ(all, std::multiset<Edge>(positives.begin(), positives.end()));
    for (const auto& e : train) EXPECT_EQ(test.count(e), 0u);
  }
}

TEST(SplitPairs, RatioOutsideOpenIntervalIsConfigError) {
  for (double r : {0.0, 1.0, -0.5, 1.5}) {
    EXPECT_THROW(split_pairs(chain(4), r, 1), ConfigError) << r;
  }
  EXPECT_THROW(split_pairs({}, 0.8, 1), ConfigError);
}

TEST(SampleNegatives, SinglePositiveDrawsANonPositivePair) {
  const auto g = DirectedGraph::from_edges(3, {{0, 1}});
  // Every ordered pair (u, v), u != v, except the positive.
  std::set<Edge> admissible;
  for (NodeIndex u = 0; u < 3; ++u)
    for (NodeIndex v = 0; v < 3; ++v)
      if (u != v && !(u == 0 && v == 1)) admissible.insert({u, v});

  std::size_t reversed = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto neg = sample_negatives(g, {{0, 1}}, seed, 1.0);
    ASSERT_EQ(neg.size(), 1u);
    EXPECT_TRUE(admissible.contains(neg[0]));
    if (neg[0] == Edge{1, 0}) ++reversed;
  }
  // Reverse bucket about half the time, plus (1,0) as 1 of 5 uniform picks.
  EXPECT_GT(reversed, 80u);
  EXPECT_LT(reversed, 160u);
}

TEST(SampleNegatives, AllReverseShareReturnsReversedPositives) {
  const auto g = DirectedGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  const auto neg = sample_negatives(g, g.edges(), 9, 1.0, 1.0);
  EXPECT_EQ(std::set<Edge>(neg.begin(), neg.end()), (std::set<Edge>{{1, 0}, {2, 1}, {3, 2}}));
}

TEST(SampleNegatives, ZeroRatioIsEmpty) {
  const auto g = DirectedGraph::from_edges(3, {{0, 1}});
  EXPECT_TRUE(sample_negatives(g, g.edges(), 1, 0.0).empty());
}

TEST(SampleNegatives, RequestedCountIsCeiling) {
  const auto g = DirectedGraph::from_edges(6, chain(5));
  EXPECT_EQ(sample_negatives(g, g.edges(), 1, 0.5).size(), 3u);
  EXPECT_EQ(sample_negatives(g, g.edges(), 1, 2.0).size(), 10u);
}

TEST(SampleNegatives, CompleteGraphIsExhausted) {
  std::vector<Edge> all;
  for (NodeIndex u = 0; u < 4; ++u)
    for (NodeIndex v = 0; v < 4; ++v)
      if (u != v) all.emplace_back(u, v);
  const auto g = DirectedGraph::from_edges(4, all);
  EXPECT_THROW(sample_negatives(g, all, 1, 1.0), SamplingExhausted);
}

TEST(SampleNegatives, DeterministicGivenSeed) {
  const auto g = DirectedGraph::from_edges(8, chain(7));
  EXPECT_EQ(sample_negatives(g, g.edges(), 4), sample_negatives(g, g.edges(), 4));
}

TEST(SampleNegatives, NeverPositiveNeverDuplicatedOnRandomGraphs) {
  Rng rng(2024);
  std::size_t checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(19);
    std::vector<Edge> edges;
    for (NodeIndex u = 0; u < n; ++u)
      for (NodeIndex v = 0; v < n; ++v)
        if (u != v && rng.uniform() < 0.3) edges.emplace_back(u, v);
    if (edges.empty()) edges.emplace_back(0, 1);
    const auto g = DirectedGraph::from_edges(n, edges);
    const std::set<Edge> positives(g.edges().begin(), g.edges().end());
    const double ratio = rng.uniform(0.0, 2.0);
    std::vector<Edge> neg;
    try {
      neg = sample_negatives(g, g.edges(), rng.next(), ratio);
    } catch (const SamplingExhausted&) {
      // Only legitimate when the request exceeds the non-positive pairs.
      EXPECT_GT(std::ceil(ratio * static_cast<double>(positives.size()) - 1e-9),
                static_cast<double>(n * (n - 1) - positives.size()));
      continue;
    }
    const std::set<Edge> unique(neg.begin(), neg.end());
    EXPECT_EQ(unique.size(), neg.size());
    for (const auto& e : neg) {
      EXPECT_NE(e.first, e.second);
      EXPECT_LT(e.first, n);
      EXPECT_LT(e.second, n);
      EXPECT_FALSE(positives.contains(e));
    }
    ++checked;
  }
  EXPECT_GT(checked, 150u);
}

TEST(DrawNegatives, HonoursExclusionSet) {
  const auto g = DirectedGraph::from_edges(6, {{0, 3}});
  std::set<Edge> excluded{{0, 3}};
  for (NodeIndex u = 0; u < 3; ++u)
    for (NodeIndex v = 3; v < 6; ++v) excluded.insert({u, v});
  Rng rng(1);
  const auto neg = draw_negatives(g, {{0, 3}}, excluded, 20, rng);
  EXPECT_EQ(neg.size(), 20u);
  for (const auto& e : neg) EXPECT_FALSE(excluded.contains(e));
}

TEST(BuildPairSet, LabelsAndSplitsBothClasses) {
  const auto g = DirectedGraph::from_edges(12, chain(11));
  const auto set = build_pair_set(g, g.edges(), 0.8, 1.0, 5);
  std::size_t pos = 0, neg = 0;
  const std::set<Edge> positives(g.edges().begin(), g.edges().end());
  for (const auto& p : set.pairs) {
    if (p.label == 1) {
      ++pos;
      EXPECT_TRUE(positives.contains({p.source, p.target}));
    } else {
      ++neg;
      EXPECT_FALSE(positives.contains({p.source, p.target}));
    }
  }
  EXPECT_EQ(pos, 11u);
  EXPECT_EQ(neg, 11u);
  EXPECT_EQ(set.count(Split::train), 16u);  // 8 + 8
}

TEST(LoadPairs, ParsesOptionalLabels) {
  const auto g = load_edge_list("a\tb\n");
  const auto pairs = load_pairs("a\tb\t1\nb\ta\n# c\nb\ta\t0\n", g);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].label, 1);
  EXPECT_FALSE(pairs[1].label.has_value());
  EXPECT_EQ(pairs[2].source, 1u);
  EXPECT_EQ(pairs[2].label, 0);
  EXPECT_TRUE(load_pairs("", g).empty());
}

TEST(LoadPairs, RejectsUnknownNodesAndBadLabels) {
  const auto g = load_edge_list("a\tb\n");
  EXPECT_THROW(load_pairs("a\tz\n", g), ValidationError);
  EXPECT_THROW(load_pairs("a\tb\t2\n", g), ParseError);
  EXPECT_THROW(load_pairs("a\n", g), ParseError);
}

}  // namespace
