#pragma once

// Bridges, 2-edge-connected components and the condensation tree Tr(H) of a
// finite connected graph, plus the Steiner statistic Br(v, x1..xk): the
// number of edges of Tr(H) in the smallest subtree containing the classes of
// v and of every x_i.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "percolab/errors.hpp"
#include "percolab/graph_models.hpp"

namespace percolab {

struct BridgeDecomposition {
  std::uint32_t vertex_count = 0;
  // Indices into the input edge list.
  std::vector<std::uint32_t> bridges;
  // component[v] is the class [v]; classes are numbered 0..component_count-1
  // in order of their smallest vertex.
  std::vector<std::uint32_t> component;
  std::uint32_t component_count = 0;
  // Tr(H): tree_edges[i] joins the classes of the endpoints of bridges[i].
  std::vector<std::pair<std::uint32_t, std::uint32_t>> tree_edges;
};

namespace detail {

struct Csr {
  std::vector<std::uint32_t> offset;
  std::vector<std::uint32_t> target;
  std::vector<std::uint32_t> edge;
};

inline Csr build_csr(const FiniteSubgraph& h) {
  Csr c;
  const std::uint32_t n = h.vertex_count;
  c.offset.assign(n + 1, 0);
  for (auto [a, b] : h.edges) {
    ++c.offset[a + 1];
    ++c.offset[b + 1];
  }
  for (std::uint32_t i = 0; i < n; ++i) c.offset[i + 1] += c.offset[i];
  c.target.resize(c.offset[n]);
  c.edge.resize(c.offset[n]);
  std::vector<std::uint32_t> fill(c.offset.begin(), c.offset.end() - 1);
  for (std::uint32_t e = 0; e < h.edges.size(); ++e) {
    auto [a, b] = h.edges[e];
    c.target[fill[a]] = b;
    c.edge[fill[a]++] = e;
    c.target[fill[b]] = a;
    c.edge[fill[b]++] = e;
  }
  return c;
}

}  // namespace detail

inline void check_shape(const FiniteSubgraph& h) {
  if (h.vertex_count == 0) throw GraphShapeError("graph has no vertices");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> seen;
  seen.reserve(h.edges.size());
  for (auto [a, b] : h.edges) {
    if (a >= h.vertex_count || b >= h.vertex_count)
      throw GraphShapeError("edge endpoint out of range");
    if (a == b) throw GraphShapeError("self-loop at vertex " + std::to_string(a));
    seen.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw GraphShapeError("parallel edges");
}

// Single iterative DFS with low-link values; O(|V| + |E|).
inline BridgeDecomposition decompose(const FiniteSubgraph& h) {
  check_shape(h);
  const std::uint32_t n = h.vertex_count;
  const detail::Csr g = detail::build_csr(h);
  constexpr std::uint32_t none = 0xffffffffu;

  std::vector<std::uint32_t> disc(n, none), low(n, 0), parent_edge(n, none), cursor(n, 0);
  std::vector<char> is_bridge(h.edges.size(), 0);
  std::vector<std::uint32_t> stack;
  stack.reserve(n);
  std::uint32_t time = 0;

  disc[0] = low[0] = time++;
  cursor[0] = g.offset[0];
  stack.push_back(0);
  while (!stack.empty()) {
    const std::uint32_t u = stack.back();
    if (cursor[u] < g.offset[u + 1]) {
      const std::uint32_t i = cursor[u]++;
      const std::uint32_t w = g.target[i];
      if (g.edge[i] == parent_edge[u]) continue;
      if (disc[w] == none) {
        disc[w] = low[w] = time++;
        parent_edge[w] = g.edge[i];
        cursor[w] = g.offset[w];
        stack.push_back(w);
      } else {
        low[u] = std::min(low[u], disc[w]);
      }
    } else {
      stack.pop_back();
      if (!stack.empty()) {
        const std::uint32_t p = stack.back();
        low[p] = std::min(low[p], low[u]);
        if (low[u] > disc[p]) is_bridge[parent_edge[u]] = 1;
      }
    }
  }
  if (time != n) throw ConnectivityError("graph is disconnected");

  BridgeDecomposition d;
  d.vertex_count = n;
  d.component.assign(n, none);
  std::vector<std::uint32_t> todo;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (d.component[s] != none) continue;
    const std::uint32_t c = d.component_count++;
    d.component[s] = c;
    todo.push_back(s);
    while (!todo.empty()) {
      std::uint32_t u = todo.back();
      todo.pop_back();
      for (std::uint32_t i = g.offset[u]; i < g.offset[u + 1]; ++i) {
        if (is_bridge[g.edge[i]]) continue;
        std::uint32_t w = g.target[i];
        if (d.component[w] == none) {
          d.component[w] = c;
          todo.push_back(w);
        }
      }
    }
  }
  for (std::uint32_t e = 0; e < h.edges.size(); ++e) {
    if (!is_bridge[e]) continue;
    d.bridges.push_back(e);
    d.tree_edges.emplace_back(d.component[h.edges[e].first], d.component[h.edges[e].second]);
  }
  return d;
}

// Reusable scratch space for repeated Br queries against one decomposition.
class SteinerCounter {
 public:
  explicit SteinerCounter(const BridgeDecomposition& d) : d_(d) {
    const std::uint32_t c = d.component_count;
    offset_.assign(c + 1, 0);
    for (auto [a, b] : d.tree_edges) {
      ++offset_[a + 1];
      ++offset_[b + 1];
    }
    for (std::uint32_t i = 0; i < c; ++i) offset_[i + 1] += offset_[i];
    adj_.resize(offset_[c]);
    std::vector<std::uint32_t> fill(offset_.begin(), offset_.end() - 1);
    for (auto [a, b] : d.tree_edges) {
      adj_[fill[a]++] = b;
      adj_[fill[b]++] = a;
    }
    degree_.resize(c);
    terminal_.resize(c);
    removed_.resize(c);
  }

  // Steiner edge count for terminal vertices (duplicates allowed). Prunes
  // non-terminal leaves of Tr(H) until none remain.
  std::uint64_t count(const std::vector<std::uint32_t>& vertices) {
    const std::uint32_t c = d_.component_count;
    std::fill(terminal_.begin(), terminal_.end(), 0);
    std::uint32_t distinct = 0;
    for (auto v : vertices) {
      if (v >= d_.vertex_count) throw MembershipError("vertex " + std::to_string(v) + " not in graph");
      auto& t = terminal_[d_.component[v]];
      if (!t) ++distinct;
      t = 1;
    }
    if (distinct <= 1) return 0;
    std::uint32_t alive = c;
    leaves_.clear();
    for (std::uint32_t i = 0; i < c; ++i) {
      degree_[i] = offset_[i + 1] - offset_[i];
      removed_[i] = 0;
      if (degree_[i] <= 1 && !terminal_[i]) leaves_.push_back(i);
    }
    while (!leaves_.empty()) {
      std::uint32_t x = leaves_.back();
      leaves_.pop_back();
      removed_[x] = 1;
      --alive;
      for (std::uint32_t i = offset_[x]; i < offset_[x + 1]; ++i) {
        std::uint32_t y = adj_[i];
        if (removed_[y]) continue;
        if (--degree_[y] == 1 && !terminal_[y]) leaves_.push_back(y);
      }
    }
    return alive - 1;
  }

 private:
  const BridgeDecomposition& d_;
  std::vector<std::uint32_t> offset_, adj_, degree_, leaves_;
  std::vector<char> terminal_, removed_;
};

inline std::uint64_t br_statistic(const BridgeDecomposition& d, std::uint32_t v,
                                  const std::vector<std::uint32_t>& xs) {
  std::vector<std::uint32_t> all;
  all.reserve(xs.size() + 1);
  all.push_back(v);
  all.insert(all.end(), xs.begin(), xs.end());
  return SteinerCounter(d).count(all);
}

}  // namespace percolab
