#pragma once

// Graphs on which percolation runs.
//
// Implicit infinite transitive models address vertices canonically, so that an
// edge seen from either endpoint maps to the same key:
//
//   RegularTree(k)        reduced word over labels 0..k-1; each label is an
//                         involution, so "reduced" means no letter repeats
//                         immediately. The empty word is the root.
//   TreeTimesCycle(k, m)  (tree word, cycle coordinate in Z/m).
//   HypercubicLattice(d)  integer coordinate vector (amenable control).
//   FiniteGraph           dense index into an explicit adjacency list.
//
// All models are immutable after construction.

#include <algorithm>
#include <concepts>
#include <compare>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "percolab/errors.hpp"
#include "percolab/rng.hpp"

namespace percolab {

// ---------------------------------------------------------------------------
// Vertex addresses

class TreeWord {
 public:
  TreeWord() = default;
  explicit TreeWord(std::vector<std::uint8_t> letters) : letters_(std::move(letters)) {}

  // "" is the root; otherwise letters 'a', 'b', ... name labels 0, 1, ...
  static TreeWord parse(std::string_view text) {
    std::vector<std::uint8_t> letters;
    letters.reserve(text.size());
    for (char c : text) {
      if (c < 'a' || c > 'z') throw AddressError("tree word letters must be in a..z: '" + std::string(text) + "'");
      letters.push_back(static_cast<std::uint8_t>(c - 'a'));
    }
    return TreeWord(std::move(letters));
  }

  std::size_t length() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  const std::vector<std::uint8_t>& letters() const noexcept { return letters_; }
  std::uint8_t back() const { return letters_.back(); }

  TreeWord extended(std::uint8_t label) const {
    TreeWord w = *this;
    w.letters_.push_back(label);
    return w;
  }
  TreeWord parent() const {
    TreeWord w = *this;
    w.letters_.pop_back();
    return w;
  }

  // Follow one labelled edge: cancels the last letter if it equals `label`.
  TreeWord step(std::uint8_t label) const {
    if (!letters_.empty() && letters_.back() == label) return parent();
    return extended(label);
  }

  std::string to_string() const {
    std::string s;
    for (auto l : letters_) s.push_back(static_cast<char>('a' + l));
    return s;
  }

  std::uint64_t hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ letters_.size();
    for (auto l : letters_) h = (h ^ l) * 0x100000001b3ULL;
    return mix64(h);
  }

  friend bool operator==(const TreeWord&, const TreeWord&) = default;
  friend auto operator<=>(const TreeWord&, const TreeWord&) = default;

 private:
  std::vector<std::uint8_t> letters_;
};

inline std::size_t common_prefix(const TreeWord& a, const TreeWord& b) noexcept {
  const auto& x = a.letters();
  const auto& y = b.letters();
  std::size_t n = std::min(x.size(), y.size());
  std::size_t i = 0;
  while (i < n && x[i] == y[i]) ++i;
  return i;
}

struct ProductVertex {
  TreeWord word;
  std::uint32_t cycle = 0;

  friend bool operator==(const ProductVertex&, const ProductVertex&) = default;
  friend auto operator<=>(const ProductVertex&, const ProductVertex&) = default;
};

struct LatticePoint {
  std::vector<std::int64_t> coords;

  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

// Order-independent edge identifier: lo < hi.
template <class Vertex>
struct EdgeId {
  Vertex lo;
  Vertex hi;
  friend bool operator==(const EdgeId&, const EdgeId&) = default;
  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

// Undirected simple graph on vertices 0..vertex_count-1.
struct FiniteSubgraph {
  std::uint32_t vertex_count = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

// ---------------------------------------------------------------------------
// Models
//
// Each model exposes:
//   Vertex, Hash                      address type and its hasher
//   degree(), root()
//   neighbors(v)                      validated, sorted ascending
//   append_neighbors(v, out)          unchecked, sorted ascending (hot path)
//   distance(u, v)
//   stable_hash(v)                    platform-independent 64-bit hash
//   validate(v)                       throws AddressError

template <class G>
concept GraphModel = requires(const G& g, const typename G::Vertex& v,
                              std::vector<typename G::Vertex>& out) {
  typename G::Hash;
  { g.degree() } -> std::convertible_to<std::size_t>;
  { g.root() } -> std::convertible_to<typename G::Vertex>;
  g.append_neighbors(v, out);
  { g.neighbors(v) } -> std::same_as<std::vector<typename G::Vertex>>;
  { g.distance(v, v) } -> std::convertible_to<std::uint64_t>;
  { g.stable_hash(v) } -> std::convertible_to<std::uint64_t>;
  g.validate(v);
};

class RegularTree {
 public:
  using Vertex = TreeWord;
  struct Hash {
    std::size_t operator()(const TreeWord& w) const noexcept { return w.hash(); }
  };

  explicit RegularTree(unsigned k) : k_(k) {
    if (k < 3 || k > 26) throw AddressError("RegularTree requires 3 <= k <= 26");
  }

  unsigned k() const noexcept { return k_; }
  std::size_t degree() const noexcept { return k_; }
  Vertex root() const { return {}; }
  double critical_point() const noexcept { return 1.0 / (k_ - 1.0); }

  void validate(const Vertex& v) const {
    const auto& l = v.letters();
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (l[i] >= k_) throw AddressError("label out of range in tree word '" + v.to_string() + "'");
      if (i > 0 && l[i] == l[i - 1])
        throw AddressError("tree word '" + v.to_string() + "' is not reduced");
    }
  }

  void append_neighbors(const Vertex& v, std::vector<Vertex>& out) const {
    // The parent is a prefix of every child, so it sorts first.
    if (!v.empty()) out.push_back(v.parent());
    const int last = v.empty() ? -1 : v.back();
    for (unsigned a = 0; a < k_; ++a)
      if (static_cast<int>(a) != last) out.push_back(v.extended(static_cast<std::uint8_t>(a)));
  }

  std::vector<Vertex> neighbors(const Vertex& v) const {
    validate(v);
    std::vector<Vertex> out;
    out.reserve(k_);
    append_neighbors(v, out);
    return out;
  }

  std::uint64_t distance(const Vertex& u, const Vertex& v) const noexcept {
    std::size_t c = common_prefix(u, v);
    return u.length() + v.length() - 2 * c;
  }

  std::uint64_t stable_hash(const Vertex& v) const noexcept { return v.hash(); }

 private:
  unsigned k_;
};

class TreeTimesCycle {
 public:
  using Vertex = ProductVertex;
  struct Hash {
    std::size_t operator()(const ProductVertex& v) const noexcept {
      return mix64(v.word.hash() ^ (v.cycle * kGoldenGamma));
    }
  };

  TreeTimesCycle(unsigned k, unsigned m) : tree_(k), m_(m) {
    if (m < 3) throw AddressError("TreeTimesCycle requires m >= 3");
  }

  unsigned k() const noexcept { return tree_.k(); }
  unsigned m() const noexcept { return m_; }
  std::size_t degree() const noexcept { return tree_.k() + 2; }
  Vertex root() const { return {}; }

  void validate(const Vertex& v) const {
    tree_.validate(v.word);
    if (v.cycle >= m_) throw AddressError("cycle coordinate out of range");
  }

  void append_neighbors(const Vertex& v, std::vector<Vertex>& out) const {
    const std::size_t first = out.size();
    std::vector<TreeWord> words;
    words.reserve(tree_.k());
    tree_.append_neighbors(v.word, words);
    for (auto& w : words) out.push_back({std::move(w), v.cycle});
    out.push_back({v.word, (v.cycle + 1) % m_});
    out.push_back({v.word, (v.cycle + m_ - 1) % m_});
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
  }

  std::vector<Vertex> neighbors(const Vertex& v) const {
    validate(v);
    std::vector<Vertex> out;
    out.reserve(degree());
    append_neighbors(v, out);
    return out;
  }

  std::uint64_t distance(const Vertex& u, const Vertex& v) const noexcept {
    std::uint32_t a = u.cycle > v.cycle ? u.cycle - v.cycle : v.cycle - u.cycle;
    return tree_.distance(u.word, v.word) + std::min<std::uint32_t>(a, m_ - a);
  }

  std::uint64_t stable_hash(const Vertex& v) const noexcept { return Hash{}(v); }

 private:
  RegularTree tree_;
  unsigned m_;
};

class HypercubicLattice {
 public:
  using Vertex = LatticePoint;
  struct Hash {
    std::size_t operator()(const LatticePoint& v) const noexcept {
      std::uint64_t h = 0x84222325cbf29ce4ULL;
      for (auto c : v.coords) h = mix64(h ^ static_cast<std::uint64_t>(c));
      return h;
    }
  };

  explicit HypercubicLattice(unsigned d) : d_(d) {
    if (d < 1) throw AddressError("HypercubicLattice requires d >= 1");
  }

  unsigned dimension() const noexcept { return d_; }
  std::size_t degree() const noexcept { return 2 * d_; }
  Vertex root() const { return {std::vector<std::int64_t>(d_, 0)}; }

  void validate(const Vertex& v) const {
    if (v.coords.size() != d_) throw AddressError("lattice point has wrong dimension");
  }

  void append_neighbors(const Vertex& v, std::vector<Vertex>& out) const {
    const std::size_t first = out.size();
    for (unsigned i = 0; i < d_; ++i) {
      for (int s : {-1, 1}) {
        Vertex w = v;
        w.coords[i] += s;
        out.push_back(std::move(w));
      }
    }
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
  }

  std::vector<Vertex> neighbors(const Vertex& v) const {
    validate(v);
    std::vector<Vertex> out;
    out.reserve(degree());
    append_neighbors(v, out);
    return out;
  }

  std::uint64_t distance(const Vertex& u, const Vertex& v) const noexcept {
    std::uint64_t s = 0;
    for (unsigned i = 0; i < d_; ++i) {
      auto a = u.coords[i] - v.coords[i];
      s += static_cast<std::uint64_t>(a < 0 ? -a : a);
    }
    return s;
  }

  std::uint64_t stable_hash(const Vertex& v) const noexcept { return Hash{}(v); }

 private:
  unsigned d_;
};

class FiniteGraph {
 public:
  using Vertex = std::uint32_t;
  struct Hash {
    std::size_t operator()(std::uint32_t v) const noexcept { return mix64(v); }
  };

  explicit FiniteGraph(const FiniteSubgraph& g) : adj_(g.vertex_count) {
    if (g.vertex_count == 0) throw AddressError("finite graph has no vertices");
    for (auto [a, b] : g.edges) {
      if (a >= g.vertex_count || b >= g.vertex_count)
        throw AddressError("edge endpoint out of range");
      if (a == b) throw AdjacencyError("self-loop at vertex " + std::to_string(a));
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    for (auto& nb : adj_) {
      std::sort(nb.begin(), nb.end());
      if (std::adjacent_find(nb.begin(), nb.end()) != nb.end())
        throw AdjacencyError("parallel edges are not supported");
      max_degree_ = std::max(max_degree_, nb.size());
    }
    edges_ = g;
  }

  // Edge-list text: one "u v" pair per line, 0-based, whitespace separated.
  static FiniteGraph from_edge_list(std::istream& in) {
    FiniteSubgraph g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      long long a = 0, b = 0;
      if (!(ls >> a)) continue;  // blank line
      std::string rest;
      if (!(ls >> b) || (ls >> rest) || a < 0 || b < 0 ||
          a > std::numeric_limits<std::uint32_t>::max() - 1 ||
          b > std::numeric_limits<std::uint32_t>::max() - 1)
        throw AddressError("edge list line " + std::to_string(lineno) + ": expected 'u v'");
      g.edges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
      g.vertex_count = std::max<std::uint32_t>(
          g.vertex_count, static_cast<std::uint32_t>(std::max(a, b) + 1));
    }
    return FiniteGraph(g);
  }

  static FiniteGraph from_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AddressError("cannot open edge list '" + path + "'");
    return from_edge_list(in);
  }

  std::uint32_t vertex_count() const noexcept { return static_cast<std::uint32_t>(adj_.size()); }
  const FiniteSubgraph& edge_list() const noexcept { return edges_; }
  std::size_t degree() const noexcept { return max_degree_; }
  Vertex root() const noexcept { return 0; }

  void validate(Vertex v) const {
    if (v >= adj_.size()) throw AddressError("vertex " + std::to_string(v) + " not in finite graph");
  }

  void append_neighbors(Vertex v, std::vector<Vertex>& out) const {
    out.insert(out.end(), adj_[v].begin(), adj_[v].end());
  }

  std::vector<Vertex> neighbors(Vertex v) const {
    validate(v);
    return adj_[v];
  }

  bool adjacent(Vertex u, Vertex v) const {
    return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
  }

  std::vector<std::uint64_t> distances_from(Vertex s) const {
    validate(s);
    constexpr auto inf = std::numeric_limits<std::uint64_t>::max();
    std::vector<std::uint64_t> d(adj_.size(), inf);
    std::queue<Vertex> q;
    d[s] = 0;
    q.push(s);
    while (!q.empty()) {
      Vertex u = q.front();
      q.pop();
      for (Vertex w : adj_[u])
        if (d[w] == inf) {
          d[w] = d[u] + 1;
          q.push(w);
        }
    }
    return d;
  }

  // Graph distance; unreachable pairs report max().
  std::uint64_t distance(Vertex u, Vertex v) const {
    validate(v);
    return distances_from(u)[v];
  }

  std::uint64_t stable_hash(Vertex v) const noexcept { return mix64(v); }

 private:
  std::vector<std::vector<Vertex>> adj_;
  std::size_t max_degree_ = 0;
  FiniteSubgraph edges_;
};

static_assert(GraphModel<RegularTree>);
static_assert(GraphModel<TreeTimesCycle>);
static_assert(GraphModel<HypercubicLattice>);
static_assert(GraphModel<FiniteGraph>);

// ---------------------------------------------------------------------------
// Free-function surface

template <GraphModel G>
std::vector<typename G::Vertex> neighbors(const G& g, const typename G::Vertex& v) {
  return g.neighbors(v);
}

template <GraphModel G>
std::uint64_t distance(const G& g, const typename G::Vertex& u, const typename G::Vertex& v) {
  g.validate(u);
  g.validate(v);
  return g.distance(u, v);
}

template <GraphModel G>
bool adjacent(const G& g, const typename G::Vertex& u, const typename G::Vertex& v) {
  if constexpr (std::same_as<G, FiniteGraph>) {
    return g.adjacent(u, v);
  } else {
    return g.distance(u, v) == 1;
  }
}

template <GraphModel G>
EdgeId<typename G::Vertex> canonical_edge(const G& g, const typename G::Vertex& u,
                                          const typename G::Vertex& v) {
  g.validate(u);
  g.validate(v);
  if (u == v) throw AdjacencyError("self-pair is not an edge");
  if (!adjacent(g, u, v)) throw AdjacencyError("vertices are not adjacent");
  if (v < u) return {v, u};
  return {u, v};
}

template <GraphModel G>
std::uint64_t edge_hash(const G& g, const typename G::Vertex& u, const typename G::Vertex& v) {
  std::uint64_t a = g.stable_hash(u);
  std::uint64_t b = g.stable_hash(v);
  if (v < u) std::swap(a, b);
  return mix64(a * 0x9e3779b97f4a7c15ULL + mix64(b));
}

// Extrinsic distance from a fixed source, amortised for finite graphs.
template <GraphModel G>
auto distance_oracle(const G& g, const typename G::Vertex& source) {
  if constexpr (std::same_as<G, FiniteGraph>) {
    return [table = g.distances_from(source)](const std::uint32_t& v) { return table[v]; };
  } else {
    return [&g, source](const typename G::Vertex& v) { return g.distance(source, v); };
  }
}

// ---------------------------------------------------------------------------
// Model selection strings: tree:k=3, treexcycle:k=3,m=6, lattice:d=2,
// finite:<edge-list path>

using AnyModel = std::variant<RegularTree, TreeTimesCycle, HypercubicLattice, FiniteGraph>;

namespace detail {
inline unsigned parse_model_int(std::string_view spec, std::string_view params, std::string_view key) {
  std::size_t pos = 0;
  while (pos <= params.size()) {
    std::size_t end = params.find(',', pos);
    if (end == std::string_view::npos) end = params.size();
    std::string_view item = params.substr(pos, end - pos);
    std::size_t eq = item.find('=');
    if (eq != std::string_view::npos && item.substr(0, eq) == key) {
      std::string value(item.substr(eq + 1));
      try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size() || v <= 0) throw std::invalid_argument("bad");
        return static_cast<unsigned>(v);
      } catch (const std::exception&) {
        throw AddressError("model '" + std::string(spec) + "': bad value for " + std::string(key));
      }
    }
    pos = end + 1;
  }
  throw AddressError("model '" + std::string(spec) + "': missing " + std::string(key));
}
}  // namespace detail

inline AnyModel parse_model(std::string_view spec) {
  std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos) throw AddressError("model '" + std::string(spec) + "': expected kind:params");
  std::string_view kind = spec.substr(0, colon);
  std::string_view params = spec.substr(colon + 1);
  if (kind == "tree") return RegularTree(detail::parse_model_int(spec, params, "k"));
  if (kind == "treexcycle")
    return TreeTimesCycle(detail::parse_model_int(spec, params, "k"),
                          detail::parse_model_int(spec, params, "m"));
  if (kind == "lattice") return HypercubicLattice(detail::parse_model_int(spec, params, "d"));
  if (kind == "finite") return FiniteGraph::from_edge_list_file(std::string(params));
  throw AddressError("unknown model kind '" + std::string(kind) + "'");
}

// The lattice is amenable; results on it are labelled as a control.
inline bool is_control(const AnyModel& m) { return std::holds_alternative<HypercubicLattice>(m); }

}  // namespace percolab
