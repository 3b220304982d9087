#pragma once

// Probes of the two-point function T_p(u,v) = P_p(u <-> v): single entries,
// restrictions of T_p to graph balls, their operator norms, and partial sums
// of the triangle diagram.
//
// On RegularTree entries are exact (p^{d(u,v)}, the path is unique) and the
// ball operator is applied in O(|ball|) by one upward and one downward sweep.
// Other models get Monte Carlo entries; all pairs in a ball share the same
// edge coins per replicate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "percolab/engine.hpp"
#include "percolab/errors.hpp"
#include "percolab/estimators.hpp"
#include "percolab/graph_models.hpp"
#include "percolab/rng.hpp"

namespace percolab {

struct TwoPointEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool exact = false;
};

// Vertices within graph distance R of a center, in BFS order.
template <GraphModel G>
struct Ball {
  std::vector<typename G::Vertex> vertices;
  std::vector<std::uint32_t> parent;  // BFS tree parent; parent[0] = 0
  std::vector<std::uint32_t> depth;
};

template <GraphModel G>
Ball<G> graph_ball(const G& g, const typename G::Vertex& center, std::uint32_t radius,
                   std::size_t max_vertices = 20000) {
  g.validate(center);
  Ball<G> b;
  std::unordered_map<typename G::Vertex, std::uint32_t, typename G::Hash> index;
  b.vertices.push_back(center);
  b.parent.push_back(0);
  b.depth.push_back(0);
  index.emplace(center, 0);
  std::vector<typename G::Vertex> nb;
  for (std::size_t head = 0; head < b.vertices.size(); ++head) {
    if (b.depth[head] == radius) continue;
    nb.clear();
    g.append_neighbors(b.vertices[head], nb);
    for (auto& w : nb) {
      if (index.count(w)) continue;
      if (b.vertices.size() >= max_vertices) throw SizeError("ball exceeds " + std::to_string(max_vertices) + " vertices");
      index.emplace(w, static_cast<std::uint32_t>(b.vertices.size()));
      b.vertices.push_back(w);
      b.parent.push_back(static_cast<std::uint32_t>(head));
      b.depth.push_back(b.depth[head] + 1);
    }
  }
  return b;
}

// Whether u and v are joined by open edges, exploring from u until v is
// found, the cluster is exhausted, or the edge budget runs out (counted as
// "not connected").
template <GraphModel G, class Coin>
bool connected_within(const G& g, const typename G::Vertex& u, const typename G::Vertex& v,
                      std::uint64_t edge_budget, Coin&& coin) {
  if (u == v) return true;
  std::vector<typename G::Vertex> order{u};
  std::unordered_map<typename G::Vertex, std::uint32_t, typename G::Hash> index{{u, 0}};
  std::vector<typename G::Vertex> nb;
  std::uint64_t touched = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    nb.clear();
    g.append_neighbors(order[head], nb);
    for (auto& w : nb) {
      auto it = index.find(w);
      if (it != index.end() && it->second < head) continue;
      ++touched;
      if (!coin(order[head], w)) continue;
      if (it != index.end()) continue;
      if (w == v) return true;
      index.emplace(w, static_cast<std::uint32_t>(order.size()));
      order.push_back(std::move(w));
    }
    if (touched > edge_budget) return false;
  }
  return false;
}

inline constexpr std::uint64_t kTwoPointEdgeBudget = 1000000;

template <GraphModel G>
TwoPointEstimate two_point(const G& g, double p, const typename G::Vertex& u, const typename G::Vertex& v,
                           std::uint64_t replicates, std::uint64_t seed,
                           std::uint64_t edge_budget = kTwoPointEdgeBudget) {
  check_probability(p);
  g.validate(u);
  g.validate(v);
  if (u == v) return {1.0, 1.0, 1.0, true};
  if constexpr (std::same_as<G, RegularTree>) {
    const double x = std::pow(p, static_cast<double>(g.distance(u, v)));
    return {x, x, x, true};
  } else {
    if (replicates == 0) throw ConfigurationError("replicates must be positive");
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < replicates; ++i) {
      CoinStream coins(p, derive_seed(seed, i, Stream::Edges));
      hits += connected_within(g, u, v, edge_budget, [&](const auto&, const auto&) { return coins.next(); });
    }
    const auto ci = wilson_interval(hits, replicates);
    return {static_cast<double>(hits) / replicates, ci.low, ci.high, false};
  }
}

// ---------------------------------------------------------------------------
// Power iteration

struct PowerResult {
  double value = 0.0;
  std::size_t iterations = 0;
};

inline constexpr double kPowerTolerance = 1e-8;
inline constexpr std::size_t kPowerMaxIterations = 10000;

// Largest eigenvalue of a symmetric nonnegative operator, from the all-ones
// start, stopping when successive Rayleigh quotients agree to `tol` relative.
inline PowerResult power_iteration(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
                                   Eigen::Index n, double tol = kPowerTolerance,
                                   std::size_t max_iterations = kPowerMaxIterations) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n).normalized();
  Eigen::VectorXd y(n);
  double lambda = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    apply(x, y);
    const double next = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return {0.0, it};
    x = y / norm;
    if (it > 1 && std::fabs(next - lambda) <= tol * std::fabs(next)) return {next, it};
    lambda = next;
  }
  throw IterationError("power iteration did not converge in " + std::to_string(max_iterations) + " iterations");
}

// ---------------------------------------------------------------------------
// Ball operators

// T_p restricted to the radius-R ball of a RegularTree, applied exactly:
// (T x)(u) = sum_w p^{d(u,w)} x(w). Sweep up: a(u) = x(u) + p sum_c a(c);
// sweep down: y(root) = a(root), y(c) = a(c) + p (y(parent) - p a(c)).
class TreeBallOperator {
 public:
  TreeBallOperator(const RegularTree& g, double p, std::uint32_t radius) : p_(p) {
    check_probability(p);
    auto b = graph_ball(g, g.root(), radius);
    parent_ = std::move(b.parent);
    depth_ = std::move(b.depth);
  }

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(parent_.size()); }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    const std::size_t n = parent_.size();
    up_.assign(x.data(), x.data() + n);
    for (std::size_t i = n; i-- > 1;) up_[parent_[i]] += p_ * up_[i];
    y.resize(static_cast<Eigen::Index>(n));
    y(0) = up_[0];
    for (std::size_t i = 1; i < n; ++i)
      y(static_cast<Eigen::Index>(i)) = up_[i] + p_ * (y(static_cast<Eigen::Index>(parent_[i])) - p_ * up_[i]);
  }

  double entry_from_root(std::size_t i) const { return std::pow(p_, static_cast<double>(depth_[i])); }
  const std::vector<std::uint32_t>& depth() const noexcept { return depth_; }

 private:
  double p_;
  std::vector<std::uint32_t> parent_, depth_;
  mutable std::vector<double> up_;
};

// Monte Carlo T_p on a ball: per replicate, edge coins are a hash of
// (replicate key, edge), ball vertices are grouped by exploring their
// clusters (edge budget per exploration), and T(u,w) is the fraction of
// replicates in which u and w share a cluster.
template <GraphModel G>
Eigen::MatrixXd mc_ball_matrix(const G& g, double p, const Ball<G>& ball, std::uint64_t replicates,
                               std::uint64_t seed, std::uint64_t edge_budget, unsigned workers = 1) {
  check_probability(p);
  const std::size_t n = ball.vertices.size();
  std::unordered_map<typename G::Vertex, std::uint32_t, typename G::Hash> where;
  for (std::uint32_t i = 0; i < n; ++i) where.emplace(ball.vertices[i], i);

  auto run = [&](std::uint64_t first, std::uint64_t last) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<std::uint32_t> label(n);
    for (std::uint64_t rep = first; rep < last; ++rep) {
      const std::uint64_t key = derive_seed(seed, rep, Stream::Instances);
      std::fill(label.begin(), label.end(), ~0u);
      std::uint32_t next = 0;
      for (std::uint32_t i = 0; i < n; ++i) {
        if (label[i] != ~0u) continue;
        label[i] = next;
        ExploreOptions opt;
        opt.record_vertices = true;
        HashedCoins coins(p, key);
        auto c = explore_from(
            g, ball.vertices[i], ExplorationBudget{edge_budget, kUnbounded},
            [&](const auto& a, const auto& b) { return coins(edge_hash(g, a, b)); }, opt);
        for (const auto& v : *c.vertices) {
          auto it = where.find(v);
          if (it != where.end() && label[it->second] == ~0u) label[it->second] = next;
        }
        ++next;
      }
      for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b)
          if (label[a] == label[b]) counts(a, b) += 1.0;
    }
    return counts;
  };

  Eigen::MatrixXd total;
  const std::uint64_t w = std::max<std::uint64_t>(1, std::min<std::uint64_t>(workers, replicates));
  if (w == 1) {
    total = run(0, replicates);
  } else {
    std::vector<Eigen::MatrixXd> parts(w);
    std::vector<std::thread> pool;
    for (std::uint64_t j = 0; j < w; ++j)
      pool.emplace_back([&, j] { parts[j] = run(replicates * j / w, replicates * (j + 1) / w); });
    for (auto& t : pool) t.join();
    total = parts[0];
    for (std::uint64_t j = 1; j < w; ++j) total += parts[j];
  }
  return total / static_cast<double>(replicates);
}

struct McOptions {
  std::uint64_t replicates = 2000;
  std::uint64_t seed = 0;
  std::uint64_t edge_budget = 20000;
  unsigned workers = 1;
};

inline constexpr std::uint32_t kMaxExactTriangleRadius = 12;
inline constexpr std::uint32_t kMaxMcRadius = 6;

// Norm of T_p restricted to the radius-R ball around the root: a lower bound
// for ||T_p||_{2->2}.
template <GraphModel G>
double ball_operator_norm(const G& g, double p, std::uint32_t radius, const McOptions& mc = {}) {
  check_probability(p);
  if constexpr (std::same_as<G, RegularTree>) {
    TreeBallOperator op(g, p, radius);
    return power_iteration([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { op.apply(x, y); }, op.size()).value;
  } else {
    if (radius > kMaxMcRadius) throw SizeError("Monte Carlo ball operators support R <= 6");
    const auto ball = graph_ball(g, g.root(), radius);
    const Eigen::MatrixXd t = mc_ball_matrix(g, p, ball, mc.replicates, mc.seed, mc.edge_budget, mc.workers);
    return power_iteration([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = t * x; }, t.rows()).value;
  }
}

// Partial sums S(R') = sum_{u,w in B(v,R')} T(v,u) T(u,w) T(w,v) for
// R' = 0..R (index R').
template <GraphModel G>
std::vector<double> triangle_diagram(const G& g, double p, std::uint32_t radius, const McOptions& mc = {}) {
  check_probability(p);
  std::vector<double> sums;
  if constexpr (std::same_as<G, RegularTree>) {
    if (radius > kMaxExactTriangleRadius) throw SizeError("exact triangle sums support R <= 12");
    for (std::uint32_t r = 0; r <= radius; ++r) {
      TreeBallOperator op(g, p, r);
      Eigen::VectorXd gv(op.size()), tg;
      for (Eigen::Index i = 0; i < op.size(); ++i) gv(i) = op.entry_from_root(static_cast<std::size_t>(i));
      op.apply(gv, tg);
      sums.push_back(gv.dot(tg));
    }
  } else {
    if (radius > kMaxMcRadius) throw SizeError("Monte Carlo triangle sums support R <= 6");
    const auto ball = graph_ball(g, g.root(), radius);
    const Eigen::MatrixXd t = mc_ball_matrix(g, p, ball, mc.replicates, mc.seed, mc.edge_budget, mc.workers);
    for (std::uint32_t r = 0; r <= radius; ++r) {
      double s = 0.0;
      for (Eigen::Index a = 0; a < t.rows(); ++a) {
        if (ball.depth[static_cast<std::size_t>(a)] > r) continue;
        for (Eigen::Index b = 0; b < t.rows(); ++b) {
          if (ball.depth[static_cast<std::size_t>(b)] > r) continue;
          s += t(0, a) * t(a, b) * t(b, 0);
        }
      }
      sums.push_back(s);
    }
  }
  return sums;
}

}  // namespace percolab
