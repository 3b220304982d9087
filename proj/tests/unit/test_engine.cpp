#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "percolab/engine.hpp"
#include "percolab/exact_oracles.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace percolab;

namespace {

template <class V>
void check_sample_invariants(const ClusterSample<V>& s, std::size_t degree) {
  REQUIRE(s.volume >= 1);
  REQUIRE(s.extrinsic_radius <= s.intrinsic_radius);
  REQUIRE(s.intrinsic_radius <= s.volume - 1);
  if (s.status == Status::Finite) {
    REQUIRE(s.volume <= s.touched_edges + 1);
    REQUIRE(s.touched_edges <= degree * s.volume);
  }
}

template <GraphModel G>
void invariants_over(const G& g, std::uint64_t seed, int per_p) {
  for (int j = 1; j <= 9; ++j) {
    const double p = j / 10.0;
    for (int i = 0; i < per_p; ++i) {
      const auto s = explore_cluster(g, p, ExplorationBudget{2000, kUnbounded},
                                     ReplicateSeeds::of(seed + j, static_cast<std::uint64_t>(i)));
      check_sample_invariants(s, g.degree());
    }
  }
}

}  // namespace

TEST_CASE("p = 0 on the tree isolates the root", "[engine]") {
  const RegularTree t(3);
  const auto s = explore_cluster(t, 0.0, ExplorationBudget{100, kUnbounded}, ReplicateSeeds::of(1, 0));
  REQUIRE(s.volume == 1);
  REQUIRE(s.touched_edges == 3);
  REQUIRE(s.intrinsic_radius == 0);
  REQUIRE(s.status == Status::Finite);
}

TEST_CASE("p = 1 on a path from an end", "[engine]") {
  const FiniteGraph path(FiniteSubgraph{3, {{0, 1}, {1, 2}}});
  ExploreOptions opt;
  opt.record_edges = true;
  const auto s = explore_cluster(path, 1.0, ExplorationBudget{10, kUnbounded}, ReplicateSeeds::of(1, 0), opt);
  REQUIRE(s.volume == 3);
  REQUIRE(s.touched_edges == 2);
  REQUIRE(s.intrinsic_radius == 2);
  REQUIRE(s.extrinsic_radius == 2);
  REQUIRE(s.status == Status::Finite);
  REQUIRE(s.edges->edges.size() == 2);
}

TEST_CASE("budgets censor the exploration", "[engine]") {
  const RegularTree t(3);
  const auto s = explore_cluster(t, 1.0, ExplorationBudget{50, kUnbounded}, ReplicateSeeds::of(1, 0));
  REQUIRE(s.status == Status::CensoredEdges);
  const auto r = explore_cluster(t, 1.0, ExplorationBudget{100000, 3}, ReplicateSeeds::of(1, 0));
  REQUIRE(r.status == Status::CensoredRadius);
  REQUIRE_THROWS_AS(explore_cluster(t, 0.5, ExplorationBudget{2, kUnbounded}, ReplicateSeeds::of(1, 0)),
                    ConfigurationError);
  REQUIRE_THROWS_AS(explore_cluster(t, 1.5, ExplorationBudget{20, kUnbounded}, ReplicateSeeds::of(1, 0)), DomainError);
}

TEST_CASE("sample field invariants across models and p", "[engine][property]") {
  invariants_over(RegularTree(3), 100, 3000);
  invariants_over(TreeTimesCycle(3, 4), 200, 3000);
  invariants_over(HypercubicLattice(2), 300, 3000);
  Xoshiro256 rng(7);
  invariants_over(FiniteGraph(testgen::connected_graph(rng, 60, 60)), 400, 2000);
}

TEST_CASE("tree samples touch (k-1)(|K|-1)+k edges", "[engine][property]") {
  for (unsigned k : {3u, 4u, 5u}) {
    const RegularTree t(k);
    for (std::uint64_t i = 0; i < 5000; ++i) {
      const auto s = explore_cluster(t, 0.9 / (k - 1), ExplorationBudget{100000, kUnbounded}, ReplicateSeeds::of(9, i));
      if (s.status != Status::Finite) continue;
      REQUIRE(s.touched_edges == (k - 1) * (s.volume - 1) + k);
    }
  }
}

TEST_CASE("tree fast path matches the generic explorer", "[engine][property]") {
  const RegularTree t(3);
  for (double p : {0.3, 0.5, 0.6}) {
    for (std::uint64_t i = 0; i < 2000; ++i) {
      const ExplorationBudget b{3000, i % 3 == 0 ? 20 : kUnbounded};
      const auto seeds = ReplicateSeeds::of(21, i);
      CoinStream coins(p, seeds.edges);
      const auto fast = explore_tree_counting(t, b, coins);
      CoinStream coins2(p, seeds.edges);
      const auto slow = explore_from(t, t.root(), b, [&](const auto&, const auto&) { return coins2.next(); });
      REQUIRE(fast.volume == slow.volume);
      REQUIRE(fast.touched_edges == slow.touched_edges);
      REQUIRE(fast.intrinsic_radius == slow.intrinsic_radius);
      REQUIRE(fast.extrinsic_radius == slow.extrinsic_radius);
      REQUIRE(fast.status == slow.status);
    }
  }
}

TEST_CASE("each edge is decided once", "[engine][property]") {
  // With record_edges every open edge appears once, and the open edges of a
  // Finite sample number at least volume - 1.
  const TreeTimesCycle g(3, 4);
  ExploreOptions opt;
  opt.record_edges = true;
  for (std::uint64_t i = 0; i < 3000; ++i) {
    const auto s = explore_cluster(g, 0.3, ExplorationBudget{5000, kUnbounded}, ReplicateSeeds::of(31, i), opt);
    if (s.status != Status::Finite) continue;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (auto [a, b] : s.edges->edges) REQUIRE(seen.emplace(std::min(a, b), std::max(a, b)).second);
    REQUIRE(s.edges->edges.size() + 1 >= s.volume);
  }
}

TEST_CASE("BFS layer equals intrinsic distance", "[engine][property]") {
  // On the tree the intrinsic and graph distances coincide, so the recorded
  // intrinsic radius equals the largest word length in the cluster.
  const RegularTree t(3);
  ExploreOptions opt;
  opt.record_vertices = true;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto s = explore_cluster(t, 0.45, ExplorationBudget{5000, kUnbounded}, ReplicateSeeds::of(41, i), opt);
    std::uint64_t longest = 0;
    for (const auto& v : *s.vertices) longest = std::max<std::uint64_t>(longest, v.length());
    REQUIRE(s.intrinsic_radius == longest);
  }
}

TEST_CASE("monotone coupling with shared edge uniforms", "[engine][property]") {
  const TreeTimesCycle g(3, 4);
  ExploreOptions opt;
  opt.record_vertices = true;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto key = derive_seed(51, i, Stream::Edges);
    const ExplorationBudget b{200000, kUnbounded};
    const auto lo = explore_coupled(g, g.root(), 0.15, b, key, opt);
    const auto hi = explore_coupled(g, g.root(), 0.2, b, key, opt);
    if (hi.status != Status::Finite) continue;
    REQUIRE(lo.status == Status::Finite);
    std::set<ProductVertex> big(hi.vertices->begin(), hi.vertices->end());
    for (const auto& v : *lo.vertices) REQUIRE(big.count(v) == 1);
  }
}

TEST_CASE("sample_batch at p = 0 is a point mass", "[engine]") {
  const RegularTree t(3);
  const auto s = sample_batch(t, 0.0, ExplorationBudget{10, kUnbounded}, 1000000, 3);
  REQUIRE(s.volume.count_at_least({1, 2}, Status::Finite) == std::vector<std::uint64_t>{1000000, 0});
}

TEST_CASE("sample_batch isolation probability and pmf at p = 0.5", "[engine]") {
  const RegularTree t(3);
  const std::uint64_t n = 1000000;
  const auto s = sample_batch(t, 0.5, ExplorationBudget{1000000, kUnbounded}, n, 5);
  const auto series = oracle::pmf_by_series(3, 0.5, 20);
  const std::vector<double> pmf(series.begin() + 1, series.end());
  std::vector<std::uint64_t> th;
  for (std::uint64_t j = 1; j <= 21; ++j) th.push_back(j);
  const auto at_least = s.volume.count_at_least(th, Status::Finite);
  for (std::size_t j = 0; j < 20; ++j) {
    const double phat = static_cast<double>(at_least[j] - at_least[j + 1]) / n;
    const double se = std::sqrt(pmf[j] * (1 - pmf[j]) / n);
    INFO("n = " << j + 1);
    REQUIRE(std::fabs(phat - pmf[j]) < 4 * se);
  }
  REQUIRE(pmf[0] == Catch::Approx(0.125));
}

TEST_CASE("sample_batch is independent of worker count", "[engine][property]") {
  const TreeTimesCycle g(3, 4);
  BatchOptions opt;
  opt.witnesses = true;
  opt.skinny = {{2, 4}, {2.0, 4.0}, {1.0, 2.0}};
  const ExplorationBudget b{4000, 30};
  const auto one = sample_batch(g, 0.3, b, 3000, 77, 1, opt);
  const auto four = sample_batch(g, 0.3, b, 3000, 77, 4, opt);
  REQUIRE(one == four);
  const auto again = sample_batch(g, 0.3, b, 3000, 77, 1, opt);
  REQUIRE(one == again);
  const RegularTree t(3);
  REQUIRE(sample_batch(t, 0.5, b, 20000, 8, 1) == sample_batch(t, 0.5, b, 20000, 8, 4));
}

TEST_CASE("summaries merge commutatively and associatively", "[engine][property]") {
  const RegularTree t(3);
  const ExplorationBudget b{2000, kUnbounded};
  BatchOptions opt;
  opt.skinny = {{2}, {3.0}, {1.0}};
  const auto a = sample_range(t, 0.45, b, 0, 500, 9, opt);
  const auto c = sample_range(t, 0.45, b, 500, 900, 9, opt);
  const auto d = sample_range(t, 0.45, b, 900, 1500, 9, opt);
  auto left = a;
  left.merge(c);
  left.merge(d);
  auto cd = c;
  cd.merge(d);
  auto right = a;
  right.merge(cd);
  REQUIRE(left.volume == right.volume);
  REQUIRE(left.skinny_counts == right.skinny_counts);
  auto ca = c;
  ca.merge(a);
  auto ac = a;
  ac.merge(c);
  REQUIRE(ca.volume == ac.volume);
  REQUIRE(ca.touched == ac.touched);
  REQUIRE(left.replicates == 1500);
  REQUIRE(left.volume.count_at_least({0}, Status::Finite).front() +
              left.volume.count_at_least({0}, Status::CensoredEdges).front() ==
          1500);
}

TEST_CASE("witnesses are uniform over the cluster", "[engine]") {
  // A fully open 4-vertex path: each vertex is a witness with probability 1/4.
  const FiniteGraph path(FiniteSubgraph{4, {{0, 1}, {1, 2}, {2, 3}}});
  ExploreOptions opt;
  opt.witnesses = 4;
  std::vector<std::uint64_t> hits(4, 0);
  const std::uint64_t n = 40000;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto s = explore_cluster(path, 1.0, ExplorationBudget{10, kUnbounded}, ReplicateSeeds::of(61, i), opt);
    for (auto v : s.witnesses) ++hits[v];
  }
  for (auto h : hits) REQUIRE(std::fabs(static_cast<double>(h) / (4.0 * n) - 0.25) < 0.01);
}
