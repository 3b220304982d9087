#pragma once

// Lazy breadth-first exploration of the open cluster of a start vertex.
//
// An edge's coin is drawn the first time one of its endpoints is processed.
// Because vertices are processed in BFS order and each is processed once, an
// edge {u, w} is new exactly when w has not been processed yet, so membership
// in the processed prefix of the queue is the per-exploration edge memo.
//
// Stopping rule, checked after every processed vertex:
//   touched > max_touched_edges            -> CensoredEdges
//   else max depth > max_intrinsic_radius  -> CensoredRadius
// and Finite when the queue empties first.

#include <algorithm>
#include <array>
#include <cstdint>
#include <exception>
#include <iterator>
#include <map>
#include <optional>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "percolab/bridge_tree.hpp"
#include "percolab/errors.hpp"
#include "percolab/graph_models.hpp"
#include "percolab/rng.hpp"

namespace percolab {

inline constexpr std::uint64_t kUnbounded = ~std::uint64_t{0};

struct ExplorationBudget {
  std::uint64_t max_touched_edges = kUnbounded;
  std::uint64_t max_intrinsic_radius = kUnbounded;
};

enum class Status : std::uint8_t { Finite = 0, CensoredEdges = 1, CensoredRadius = 2 };
inline constexpr std::size_t kStatusCount = 3;

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Finite: return "finite";
    case Status::CensoredEdges: return "censored_edges";
    case Status::CensoredRadius: return "censored_radius";
  }
  return "?";
}

inline constexpr unsigned kMaxWitnesses = 4;

template <class Vertex>
struct ClusterSample {
  std::uint64_t volume = 0;
  std::uint64_t touched_edges = 0;
  std::uint64_t intrinsic_radius = 0;
  std::uint64_t extrinsic_radius = 0;
  Status status = Status::Finite;
  // Independent uniform draws from the cluster (with replacement), given both
  // as addresses and as indices into the discovery order.
  std::vector<Vertex> witnesses;
  std::vector<std::uint32_t> witness_index;
  // Vertices in discovery order (index 0 is the start), and open edges as
  // index pairs into that list; only when requested, edges only if Finite.
  std::optional<std::vector<Vertex>> vertices;
  std::optional<FiniteSubgraph> edges;
};

struct ExploreOptions {
  bool record_edges = false;
  bool record_vertices = false;  // keep the discovery order whatever the status
  unsigned witnesses = 0;
};

inline void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
}

// Generic explorer. `coin(u, w)` is called once per newly touched edge.
template <GraphModel G, class Coin>
ClusterSample<typename G::Vertex> explore_from(const G& g, const typename G::Vertex& start,
                                              const ExplorationBudget& budget, Coin&& coin,
                                              const ExploreOptions& options = {},
                                              Xoshiro256* witness_rng = nullptr) {
  using V = typename G::Vertex;
  if (options.witnesses > kMaxWitnesses) throw ConfigurationError("at most 4 witnesses per sample");
  if (options.witnesses > 0 && witness_rng == nullptr)
    throw ConfigurationError("witness sampling needs a random stream");

  ClusterSample<V> s;
  std::vector<V> order;
  std::vector<std::uint64_t> depth;
  std::unordered_map<V, std::uint32_t, typename G::Hash> index;
  FiniteSubgraph open;
  auto dist = distance_oracle(g, start);

  order.push_back(start);
  depth.push_back(0);
  index.emplace(start, 0);

  std::vector<V> nb;
  nb.reserve(g.degree());
  std::size_t head = 0;
  std::uint64_t touched = 0, max_depth = 0, max_dist = 0;
  Status status = Status::Finite;

  while (head < order.size()) {
    const std::uint32_t ui = static_cast<std::uint32_t>(head);
    nb.clear();
    g.append_neighbors(order[ui], nb);
    for (auto& w : nb) {
      auto it = index.find(w);
      if (it != index.end() && it->second < head) continue;  // edge already decided
      ++touched;
      if (!coin(order[ui], w)) continue;
      std::uint32_t wi;
      if (it == index.end()) {
        wi = static_cast<std::uint32_t>(order.size());
        index.emplace(w, wi);
        const std::uint64_t d = depth[ui] + 1;
        max_depth = std::max(max_depth, d);
        max_dist = std::max<std::uint64_t>(max_dist, dist(w));
        order.push_back(std::move(w));
        depth.push_back(d);
      } else {
        wi = it->second;
      }
      if (options.record_edges) open.edges.emplace_back(ui, wi);
    }
    ++head;
    if (touched > budget.max_touched_edges) {
      status = Status::CensoredEdges;
      break;
    }
    if (max_depth > budget.max_intrinsic_radius) {
      status = Status::CensoredRadius;
      break;
    }
  }

  s.volume = order.size();
  s.touched_edges = touched;
  s.intrinsic_radius = max_depth;
  s.extrinsic_radius = max_dist;
  s.status = status;
  for (unsigned i = 0; i < options.witnesses; ++i) {
    auto j = static_cast<std::uint32_t>(witness_rng->below(order.size()));
    s.witness_index.push_back(j);
    s.witnesses.push_back(order[j]);
  }
  const bool keep_edges = options.record_edges && status == Status::Finite;
  if (keep_edges) {
    open.vertex_count = static_cast<std::uint32_t>(order.size());
    s.edges = std::move(open);
  }
  if (keep_edges || options.record_vertices) s.vertices = std::move(order);
  return s;
}

// Layer-counting explorer for RegularTree from the root with sequential
// coins. Consumes the coin stream in exactly the generic explorer's order
// (root: k coins; then every vertex in BFS order: k-1 child coins), so its
// summary statistics are bit-identical to explore_from.
inline ClusterSample<TreeWord> explore_tree_counting(const RegularTree& g,
                                                     const ExplorationBudget& budget,
                                                     CoinStream& coins) {
  ClusterSample<TreeWord> s;
  const unsigned k = g.k();
  std::uint64_t touched = 0, volume = 1, depth = 0;
  Status status = Status::Finite;

  // Root.
  std::uint64_t next_layer = 0;
  for (unsigned i = 0; i < k; ++i) next_layer += coins.next();
  touched = k;
  volume += next_layer;
  std::uint64_t max_depth = next_layer > 0 ? 1 : 0;
  if (touched > budget.max_touched_edges) {
    status = Status::CensoredEdges;
  } else if (max_depth > budget.max_intrinsic_radius) {
    status = Status::CensoredRadius;
  } else {
    std::uint64_t layer = next_layer;
    depth = 1;
    const unsigned branch = k - 1;
    while (layer > 0 && status == Status::Finite) {
      next_layer = 0;
      for (std::uint64_t v = 0; v < layer; ++v) {
        std::uint64_t born = 0;
        for (unsigned i = 0; i < branch; ++i) born += coins.next();
        touched += branch;
        next_layer += born;
        volume += born;
        if (next_layer > 0) max_depth = depth + 1;
        if (touched > budget.max_touched_edges) {
          status = Status::CensoredEdges;
          break;
        }
        if (max_depth > budget.max_intrinsic_radius) {
          status = Status::CensoredRadius;
          break;
        }
      }
      layer = next_layer;
      ++depth;
    }
  }
  s.volume = volume;
  s.touched_edges = touched;
  s.intrinsic_radius = max_depth;
  s.extrinsic_radius = max_depth;
  s.status = status;
  return s;
}

struct ReplicateSeeds {
  std::uint64_t edges;
  std::uint64_t witnesses;

  static ReplicateSeeds of(std::uint64_t seed, std::uint64_t replicate) {
    return {derive_seed(seed, replicate, Stream::Edges),
            derive_seed(seed, replicate, Stream::Witnesses)};
  }
};

// Cluster of the model root at parameter p with sequential coins.
template <GraphModel G>
ClusterSample<typename G::Vertex> explore_cluster(const G& g, double p, const ExplorationBudget& budget,
                                                  const ReplicateSeeds& seeds,
                                                  const ExploreOptions& options = {}) {
  check_probability(p);
  if (budget.max_touched_edges < g.degree())
    throw ConfigurationError("edge budget must be at least the model degree");
  CoinStream coins(p, seeds.edges);
  if constexpr (std::same_as<G, RegularTree>) {
    if (!options.record_edges && !options.record_vertices && options.witnesses == 0)
      return explore_tree_counting(g, budget, coins);
  }
  Xoshiro256 wrng(seeds.witnesses);
  return explore_from(
      g, g.root(), budget, [&coins](const auto&, const auto&) { return coins.next(); }, options, &wrng);
}

// Same cluster law, but each edge's coin is a fixed function of (key, edge),
// so explorations at different p share uniforms edge by edge.
template <GraphModel G>
ClusterSample<typename G::Vertex> explore_coupled(const G& g, const typename G::Vertex& start, double p,
                                                  const ExplorationBudget& budget, std::uint64_t key,
                                                  const ExploreOptions& options = {}) {
  check_probability(p);
  HashedCoins coins(p, key);
  return explore_from(
      g, start, budget,
      [&](const typename G::Vertex& u, const typename G::Vertex& w) { return coins(edge_hash(g, u, w)); },
      options);
}

// ---------------------------------------------------------------------------
// Summaries

// Counts of (value, status). Values below kDense are stored densely.
class StatusHistogram {
 public:
  static constexpr std::uint64_t kDense = 4096;
  using Row = std::array<std::uint64_t, kStatusCount>;

  void add(std::uint64_t value, Status s, std::uint64_t n = 1) {
    auto si = static_cast<std::size_t>(s);
    if (value < kDense) {
      if (value >= dense_.size()) dense_.resize(value + 1, Row{});
      dense_[value][si] += n;
    } else {
      sparse_[value][si] += n;
    }
    total_ += n;
  }

  void merge(const StatusHistogram& o) {
    if (o.dense_.size() > dense_.size()) dense_.resize(o.dense_.size(), Row{});
    for (std::size_t v = 0; v < o.dense_.size(); ++v)
      for (std::size_t s = 0; s < kStatusCount; ++s) dense_[v][s] += o.dense_[v][s];
    for (const auto& [v, row] : o.sparse_) {
      auto& mine = sparse_[v];
      for (std::size_t s = 0; s < kStatusCount; ++s) mine[s] += row[s];
    }
    total_ += o.total_;
  }

  std::uint64_t total() const noexcept { return total_; }

  std::uint64_t count(std::uint64_t value, Status s) const {
    auto si = static_cast<std::size_t>(s);
    if (value < kDense) return value < dense_.size() ? dense_[value][si] : 0;
    auto it = sparse_.find(value);
    return it == sparse_.end() ? 0 : it->second[si];
  }

  // Nonzero rows in increasing value order.
  std::vector<std::pair<std::uint64_t, Row>> rows() const {
    std::vector<std::pair<std::uint64_t, Row>> out;
    for (std::size_t v = 0; v < dense_.size(); ++v)
      if (dense_[v][0] | dense_[v][1] | dense_[v][2]) out.emplace_back(v, dense_[v]);
    for (const auto& [v, row] : sparse_) out.emplace_back(v, row);
    return out;
  }

  // #{samples with value >= t and status s} for each t in increasing `thresholds`.
  std::vector<std::uint64_t> count_at_least(const std::vector<std::uint64_t>& thresholds, Status s) const {
    auto si = static_cast<std::size_t>(s);
    auto r = rows();
    std::vector<std::uint64_t> suffix(r.size() + 1, 0);
    for (std::size_t i = r.size(); i-- > 0;) suffix[i] = suffix[i + 1] + r[i].second[si];
    std::vector<std::uint64_t> out;
    out.reserve(thresholds.size());
    for (auto t : thresholds) {
      auto it = std::lower_bound(r.begin(), r.end(), t,
                                 [](const auto& row, std::uint64_t x) { return row.first < x; });
      out.push_back(suffix[static_cast<std::size_t>(it - r.begin())]);
    }
    return out;
  }

  // Power sums over one status: sum of value^j for j = 0..max_power.
  std::vector<long double> power_sums(Status s, unsigned max_power) const {
    auto si = static_cast<std::size_t>(s);
    std::vector<long double> out(max_power + 1, 0.0L);
    for (const auto& [v, row] : rows()) {
      long double x = 1.0L;
      for (unsigned j = 0; j <= max_power; ++j) {
        out[j] += x * row[si];
        x *= static_cast<long double>(v);
      }
    }
    return out;
  }

  friend bool operator==(const StatusHistogram& a, const StatusHistogram& b) {
    return a.total_ == b.total_ && a.rows() == b.rows();
  }

 private:
  std::vector<Row> dense_;
  std::map<std::uint64_t, Row> sparse_;
  std::uint64_t total_ = 0;
};

// Witness subsets: 4 singles, 6 pairs, 4 triples of the four witness slots.
inline const std::vector<std::vector<unsigned>>& witness_subsets() {
  static const std::vector<std::vector<unsigned>> subsets = {
      {0}, {1}, {2}, {3},
      {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
      {0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  return subsets;
}

// Subsets of size k occupy [first, first + count) in witness_subsets().
inline std::pair<std::size_t, std::size_t> witness_subset_range(unsigned k) {
  switch (k) {
    case 1: return {0, 4};
    case 2: return {4, 6};
    case 3: return {10, 4};
  }
  throw ConfigurationError("witness tuples have size 1, 2 or 3");
}

struct WitnessRecord {
  std::uint64_t replicate = 0;
  std::uint64_t volume = 0;
  std::uint64_t touched_edges = 0;
  // Br(root, subset) for each entry of witness_subsets().
  std::array<std::uint32_t, 14> br{};

  friend bool operator==(const WitnessRecord&, const WitnessRecord&) = default;
};

struct SkinnyGrid {
  std::vector<std::uint64_t> radii;
  std::vector<double> alphas;   // event: Finite, R >= r, E <= alpha * R
  std::vector<double> s_values; // event: Finite, R >= r, E <= r^2 / s

  bool empty() const noexcept { return radii.empty(); }
};

struct ConditionalCounts {
  std::uint64_t numerator = 0;    // Finite, R >= r, E <= r^2/s
  std::uint64_t denominator = 0;  // R >= r certified (Finite or censored with R >= r)
  std::uint64_t unknown = 0;      // censored before reaching radius r
  friend bool operator==(const ConditionalCounts&, const ConditionalCounts&) = default;
};

struct BatchOptions {
  bool witnesses = false;  // record WitnessRecords (generic explorer, slower)
  SkinnyGrid skinny;
};

struct SampleSummary {
  double p = 0.0;
  std::uint64_t replicates = 0;
  ExplorationBudget budget;
  StatusHistogram volume, touched, intrinsic, extrinsic;
  SkinnyGrid skinny;
  // Indexed [radius][alpha] and [radius][s].
  std::vector<std::vector<std::uint64_t>> skinny_counts;
  std::vector<std::vector<ConditionalCounts>> conditional_counts;
  std::vector<WitnessRecord> witness_records;

  void init_skinny(const SkinnyGrid& grid) {
    skinny = grid;
    skinny_counts.assign(grid.radii.size(), std::vector<std::uint64_t>(grid.alphas.size(), 0));
    conditional_counts.assign(grid.radii.size(), std::vector<ConditionalCounts>(grid.s_values.size()));
  }

  template <class V>
  void add(const ClusterSample<V>& c) {
    ++replicates;
    volume.add(c.volume, c.status);
    touched.add(c.touched_edges, c.status);
    intrinsic.add(c.intrinsic_radius, c.status);
    extrinsic.add(c.extrinsic_radius, c.status);
    const bool finite = c.status == Status::Finite;
    const auto R = c.intrinsic_radius;
    const auto E = static_cast<double>(c.touched_edges);
    for (std::size_t i = 0; i < skinny.radii.size(); ++i) {
      const auto r = skinny.radii[i];
      const bool reached = R >= r;
      for (std::size_t j = 0; j < skinny.alphas.size(); ++j)
        if (finite && reached && E <= skinny.alphas[j] * static_cast<double>(R)) ++skinny_counts[i][j];
      const double r2 = static_cast<double>(r) * static_cast<double>(r);
      for (std::size_t j = 0; j < skinny.s_values.size(); ++j) {
        auto& cc = conditional_counts[i][j];
        if (reached) {
          ++cc.denominator;
          if (finite && E * skinny.s_values[j] <= r2) ++cc.numerator;
        } else if (!finite) {
          ++cc.unknown;
        }
      }
    }
  }

  // Commutative and associative on the counting fields; witness records are
  // kept sorted by replicate index.
  void merge(const SampleSummary& o) {
    replicates += o.replicates;
    volume.merge(o.volume);
    touched.merge(o.touched);
    intrinsic.merge(o.intrinsic);
    extrinsic.merge(o.extrinsic);
    for (std::size_t i = 0; i < skinny_counts.size() && i < o.skinny_counts.size(); ++i)
      for (std::size_t j = 0; j < skinny_counts[i].size(); ++j) skinny_counts[i][j] += o.skinny_counts[i][j];
    for (std::size_t i = 0; i < conditional_counts.size() && i < o.conditional_counts.size(); ++i)
      for (std::size_t j = 0; j < conditional_counts[i].size(); ++j) {
        conditional_counts[i][j].numerator += o.conditional_counts[i][j].numerator;
        conditional_counts[i][j].denominator += o.conditional_counts[i][j].denominator;
        conditional_counts[i][j].unknown += o.conditional_counts[i][j].unknown;
      }
    std::vector<WitnessRecord> merged;
    merged.reserve(witness_records.size() + o.witness_records.size());
    std::merge(witness_records.begin(), witness_records.end(), o.witness_records.begin(),
               o.witness_records.end(), std::back_inserter(merged),
               [](const auto& a, const auto& b) { return a.replicate < b.replicate; });
    witness_records = std::move(merged);
  }

  friend bool operator==(const SampleSummary& a, const SampleSummary& b) {
    return a.p == b.p && a.replicates == b.replicates && a.volume == b.volume && a.touched == b.touched &&
           a.intrinsic == b.intrinsic && a.extrinsic == b.extrinsic && a.skinny_counts == b.skinny_counts &&
           a.conditional_counts == b.conditional_counts && a.witness_records == b.witness_records;
  }
};

// Br(start, subset) for every witness subset of a Finite sample with edges.
template <class V>
WitnessRecord witness_record(std::uint64_t replicate, const ClusterSample<V>& c) {
  WitnessRecord w;
  w.replicate = replicate;
  w.volume = c.volume;
  w.touched_edges = c.touched_edges;
  const auto d = decompose(*c.edges);
  SteinerCounter counter(d);
  const auto& subsets = witness_subsets();
  std::vector<std::uint32_t> terminals;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    terminals.assign(1, 0);
    for (unsigned slot : subsets[i]) terminals.push_back(c.witness_index[slot]);
    w.br[i] = static_cast<std::uint32_t>(counter.count(terminals));
  }
  return w;
}

template <GraphModel G>
SampleSummary sample_range(const G& g, double p, const ExplorationBudget& budget, std::uint64_t first,
                           std::uint64_t last, std::uint64_t seed, const BatchOptions& options) {
  SampleSummary s;
  s.p = p;
  s.budget = budget;
  s.init_skinny(options.skinny);
  ExploreOptions eo;
  if (options.witnesses) {
    eo.record_edges = true;
    eo.witnesses = kMaxWitnesses;
  }
  for (std::uint64_t i = first; i < last; ++i) {
    auto c = explore_cluster(g, p, budget, ReplicateSeeds::of(seed, i), eo);
    s.add(c);
    if (options.witnesses && c.status == Status::Finite) s.witness_records.push_back(witness_record(i, c));
  }
  return s;
}

// Replicate i always uses streams derived from (seed, i); workers take
// contiguous index ranges and partial summaries merge in index order.
template <GraphModel G>
SampleSummary sample_batch(const G& g, double p, const ExplorationBudget& budget, std::uint64_t replicates,
                           std::uint64_t seed, unsigned workers = 1, const BatchOptions& options = {}) {
  check_probability(p);
  if (replicates == 0) throw ConfigurationError("replicates must be positive");
  if (workers == 0) throw ConfigurationError("workers must be positive");
  if (budget.max_touched_edges < g.degree())
    throw ConfigurationError("edge budget must be at least the model degree");
  const std::uint64_t w = std::min<std::uint64_t>(workers, replicates);
  std::vector<SampleSummary> parts(w);
  auto bound = [&](std::uint64_t j) { return replicates * j / w; };
  if (w == 1) {
    parts[0] = sample_range(g, p, budget, 0, replicates, seed, options);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(w);
    for (std::uint64_t j = 0; j < w; ++j)
      pool.emplace_back([&, j] {
        try {
          parts[j] = sample_range(g, p, budget, bound(j), bound(j + 1), seed, options);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  SampleSummary total = std::move(parts[0]);
  for (std::uint64_t j = 1; j < w; ++j) total.merge(parts[j]);
  return total;
}

}  // namespace percolab
