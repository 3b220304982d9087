#pragma once

// Hand-rolled random generators for property tests. Every generator takes an
// explicit Xoshiro256 so failures replay from the printed seed.

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "percolab/engine.hpp"
#include "percolab/graph_models.hpp"
#include "percolab/rng.hpp"

namespace testgen {

using percolab::Xoshiro256;

inline std::uint64_t int_in(Xoshiro256& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + rng.below(hi - lo + 1);
}

inline percolab::TreeWord tree_word(Xoshiro256& rng, unsigned k, std::size_t max_len) {
  const auto len = rng.below(max_len + 1);
  std::vector<std::uint8_t> letters;
  for (std::size_t i = 0; i < len; ++i) {
    std::uint8_t a;
    do {
      a = static_cast<std::uint8_t>(rng.below(k));
    } while (!letters.empty() && letters.back() == a);
    letters.push_back(a);
  }
  return percolab::TreeWord(std::move(letters));
}

inline percolab::ProductVertex product_vertex(Xoshiro256& rng, unsigned k, unsigned m, std::size_t max_len) {
  return {tree_word(rng, k, max_len), static_cast<std::uint32_t>(rng.below(m))};
}

inline percolab::LatticePoint lattice_point(Xoshiro256& rng, unsigned d, std::int64_t span) {
  percolab::LatticePoint x;
  for (unsigned i = 0; i < d; ++i)
    x.coords.push_back(static_cast<std::int64_t>(rng.below(2 * span + 1)) - span);
  return x;
}

// Random vertex of any model, near the root.
template <percolab::GraphModel G>
typename G::Vertex vertex(const G& g, Xoshiro256& rng) {
  if constexpr (std::same_as<G, percolab::RegularTree>) {
    return tree_word(rng, g.k(), 12);
  } else if constexpr (std::same_as<G, percolab::TreeTimesCycle>) {
    return product_vertex(rng, g.k(), g.m(), 12);
  } else if constexpr (std::same_as<G, percolab::HypercubicLattice>) {
    return lattice_point(rng, g.dimension(), 20);
  } else {
    return static_cast<std::uint32_t>(rng.below(g.vertex_count()));
  }
}

// Connected simple graph: random spanning tree on `vertices` vertices plus up
// to `extra` random extra edges.
inline percolab::FiniteSubgraph connected_graph(Xoshiro256& rng, std::uint32_t vertices, std::uint32_t extra) {
  percolab::FiniteSubgraph h;
  h.vertex_count = vertices;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::uint32_t i = 1; i < vertices; ++i) {
    const auto j = static_cast<std::uint32_t>(rng.below(i));
    h.edges.emplace_back(j, i);
    seen.emplace(j, i);
  }
  const std::uint64_t max_edges = static_cast<std::uint64_t>(vertices) * (vertices - 1) / 2;
  for (std::uint32_t t = 0; t < 4 * extra && h.edges.size() < std::min<std::uint64_t>(max_edges, vertices - 1 + extra); ++t) {
    auto a = static_cast<std::uint32_t>(rng.below(vertices)), b = static_cast<std::uint32_t>(rng.below(vertices));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.emplace(a, b).second) h.edges.emplace_back(a, b);
  }
  return h;
}

// Finite clusters with recorded edge lists and witnesses, drawn from the
// engine on TreeTimesCycle (many cycles, many bridges), kept when they have
// between 1 and max_edges open edges.
struct SampledCluster {
  percolab::FiniteSubgraph graph;
  std::vector<std::uint32_t> witnesses;  // indices into the cluster
};

inline std::vector<SampledCluster> engine_clusters(std::size_t count, std::size_t max_edges, std::uint64_t seed) {
  using namespace percolab;
  const TreeTimesCycle g(3, 4);
  std::vector<SampledCluster> out;
  ExploreOptions opt;
  opt.record_edges = true;
  opt.witnesses = kMaxWitnesses;
  const double ps[] = {0.25, 0.3, 0.35};
  for (std::uint64_t i = 0; out.size() < count; ++i) {
    const double p = ps[i % 3];
    // Degree 5: a cluster with max_edges open edges touches at most 5 (max_edges + 1).
    const ExplorationBudget budget{5 * (max_edges + 1), kUnbounded};
    auto c = explore_cluster(g, p, budget, ReplicateSeeds::of(seed, i), opt);
    if (c.status != Status::Finite || !c.edges || c.edges->edges.empty() || c.edges->edges.size() > max_edges)
      continue;
    out.push_back({*c.edges, c.witness_index});
  }
  return out;
}

}  // namespace testgen
