#pragma once

// Ground truth.
//
// Tree oracles describe the root cluster of the k-regular tree as a
// branching process: the root has Binomial(k, p) children and every other
// vertex Binomial(k-1, p). Enumeration oracles sum over all 2^|E| edge
// configurations of a small finite graph.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "percolab/errors.hpp"
#include "percolab/graph_models.hpp"

namespace percolab {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Tree oracles

inline void check_tree_degree(unsigned k) {
  if (k < 3) throw DomainError("tree oracles need k >= 3");
}

inline double critical_point(unsigned k) {
  check_tree_degree(k);
  return 1.0 / (k - 1.0);
}

// q(1-q)^(k-2) for the duality relation.
inline double duality_weight(unsigned k, double q) { return q * std::pow(1.0 - q, k - 2.0); }

// The q in [0, p_c] with q(1-q)^(k-2) = p(1-p)^(k-2), for p in [p_c, 1].
inline double dual_parameter(unsigned k, double p) {
  const double pc = critical_point(k);
  if (!(p >= pc && p <= 1.0)) throw DomainError("dual_parameter needs p in [p_c, 1]");
  if (p == pc) return pc;
  const double target = duality_weight(k, p);
  double lo = 0.0, hi = pc;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (duality_weight(k, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Subcritical parameter with the same finite-cluster law.
inline double subcritical_parameter(unsigned k, double p) {
  return p > critical_point(k) ? dual_parameter(k, p) : p;
}

// theta(p) = 1 - (1-p+p rho)^k with rho the smallest fixed point of
// rho = (1-p+p rho)^(k-1). For p > p_c, h(rho) = (1-p+p rho)^(k-1) - rho is
// convex with h(0) > 0 > h(rho_min), so the root in [0, rho_min] is bracketed.
inline double extinction_probability(unsigned k, double p) {
  check_tree_degree(k);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
  if (p <= critical_point(k)) return 1.0;
  if (p == 1.0) return 0.0;
  auto h = [&](double r) { return std::pow(1.0 - p + p * r, k - 1.0) - r; };
  const double rho_min = (std::pow(1.0 / ((k - 1.0) * p), 1.0 / (k - 2.0)) - (1.0 - p)) / p;
  double lo = 0.0, hi = std::clamp(rho_min, 0.0, 1.0);
  for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double survival_probability(unsigned k, double p) {
  const double rho = extinction_probability(k, p);
  if (rho == 1.0) return 0.0;
  return 1.0 - std::pow(1.0 - p + p * rho, static_cast<double>(k));
}

namespace detail {

inline double binomial_pmf(std::uint64_t n, double p, std::int64_t x) {
  if (x < 0 || static_cast<std::uint64_t>(x) > n) return 0.0;
  if (p == 0.0) return x == 0 ? 1.0 : 0.0;
  if (p == 1.0) return static_cast<std::uint64_t>(x) == n ? 1.0 : 0.0;
  return boost::math::pdf(boost::math::binomial_distribution<double>(static_cast<double>(n), p),
                          static_cast<double>(x));
}

// P(|K| = n) by the hitting-time formula: conditional on j root children,
// the remaining n-1 vertices form a forest of j Binomial(k-1, p) trees, so
// P = sum_j Bin(k,p)(j) * j/(n-1) * Bin((k-1)(n-1), p)(n-1-j).
inline double cluster_size_probability(unsigned k, double p, std::uint64_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return std::pow(1.0 - p, static_cast<double>(k));
  double s = 0.0;
  const std::uint64_t m = n - 1;
  for (unsigned j = 1; j <= k && j <= m; ++j)
    s += binomial_pmf(k, p, j) * static_cast<double>(j) / static_cast<double>(m) *
         binomial_pmf((k - 1) * m, p, static_cast<std::int64_t>(m - j));
  return s;
}

inline std::vector<double> cluster_size_pmf_unchecked(unsigned k, double p, std::uint64_t n_max) {
  std::vector<double> out(n_max);
  for (std::uint64_t n = 1; n <= n_max; ++n) out[n - 1] = cluster_size_probability(k, p, n);
  return out;
}

}  // namespace detail

inline constexpr std::uint64_t kMaxPmfLength = 100000;
inline constexpr std::uint64_t kMaxRadius = 10000;

// P_p(|K_root| = n) for n = 1..n_max (index n-1). Mass on finite clusters
// only, so the total is 1 - theta(p).
inline std::vector<double> cluster_size_pmf(unsigned k, double p, std::uint64_t n_max) {
  check_tree_degree(k);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
  if (n_max > kMaxPmfLength) throw SizeError("cluster_size_pmf supports n_max <= 100000");
  return detail::cluster_size_pmf_unchecked(k, p, n_max);
}

enum class RateNormalization { Volume, TouchedEdges };

// Cramer rate of the total-progeny law at the subcritical (or dual)
// parameter pt: sup_x [x - (k-1) log(1 - pt + pt e^x)]. The stationarity
// condition is solved by bisection on the decreasing derivative. On the tree
// E_v = (k-1)|K| + 1, so the touched-edge rate is the volume rate / (k-1).
inline double zeta_exact(unsigned k, double p, RateNormalization norm = RateNormalization::Volume) {
  check_tree_degree(k);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("zeta_exact needs p in (0, 1)");
  if (p == critical_point(k)) return 0.0;
  const double q = subcritical_parameter(k, p);
  const double b = k - 1.0;
  auto phi = [&](double x) { return x - b * std::log1p(q * std::expm1(x)); };
  auto dphi = [&](double x) {
    const double ex = std::exp(x);
    return 1.0 - b * q * ex / (1.0 - q + q * ex);
  };
  double lo = 0.0, hi = 1.0;
  while (dphi(hi) > 0.0) hi *= 2.0;
  for (int i = 0; i < 300 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (dphi(mid) > 0.0 ? lo : hi) = mid;
  }
  const double z = std::max(0.0, phi(0.5 * (lo + hi)));
  return norm == RateNormalization::Volume ? z : z / (k - 1.0);
}

// Exponential decay rate of P(r <= R < inf) in r: the subcritical
// generation-survival rate -log((k-1) q) at the subcritical or dual q.
inline double radius_rate_exact(unsigned k, double p) {
  check_tree_degree(k);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("radius_rate_exact needs p in (0, 1)");
  if (p == critical_point(k)) return 0.0;
  return -std::log((k - 1.0) * subcritical_parameter(k, p));
}

// P_p(n <= |K| < inf) for n = 1..n_max (index n-1).
//
// Away from p_c the tail is summed backward from far beyond n_max, where the
// pmf is exponentially small, with a geometric remainder; this keeps full
// relative precision deep in the tail. Close to p_c the decay length is too
// long for that and the tail is (1 - theta) minus the partial sums.
inline std::vector<double> finite_volume_tail(unsigned k, double p, std::uint64_t n_max) {
  check_tree_degree(k);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
  if (n_max > kMaxPmfLength) throw SizeError("finite_volume_tail supports n_max <= 100000");
  std::vector<double> tail(n_max, 0.0);
  if (n_max == 0) return tail;
  if (p == 0.0) {
    tail[0] = 1.0;
    return tail;
  }
  if (p == 1.0) return tail;

  const double zeta = zeta_exact(k, p);
  constexpr std::uint64_t kExtensionCap = 4000000;
  const double extension = zeta > 0.0 ? std::ceil(60.0 / zeta) : std::numeric_limits<double>::infinity();
  if (static_cast<double>(n_max) + extension <= static_cast<double>(kExtensionCap)) {
    const auto m = n_max + static_cast<std::uint64_t>(extension);
    auto pmf = detail::cluster_size_pmf_unchecked(k, p, m);
    double rem = 0.0;
    if (m >= 2 && pmf[m - 2] > 0.0) {
      const double r = pmf[m - 1] / pmf[m - 2];
      if (r < 1.0) rem = pmf[m - 1] * r / (1.0 - r);
    }
    CompensatedSum acc;
    acc.add(rem);
    for (std::uint64_t n = m; n >= 1; --n) {
      acc.add(pmf[n - 1]);
      if (n <= n_max) tail[n - 1] = acc.value();
    }
    return tail;
  }
  const double finite_mass = 1.0 - survival_probability(k, p);
  CompensatedSum cum;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    tail[n - 1] = std::max(0.0, finite_mass - cum.value());
    cum.add(detail::cluster_size_probability(k, p, n));
  }
  return tail;
}

// P_p(R_root >= r) for r = 0..r_max, infinite clusters included.
// u_j = P(a non-root vertex has descendants j generations below it), with
// u_0 = 1 and u_j = 1 - (1 - p u_{j-1})^(k-1); then P(R >= r) = 1 - (1 - p u_{r-1})^k.
inline std::vector<double> radius_tail(unsigned k, double p, std::uint64_t r_max) {
  check_tree_degree(k);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
  if (r_max > kMaxRadius) throw SizeError("radius_tail supports r_max <= 10000");
  std::vector<double> out(r_max + 1);
  out[0] = 1.0;
  double u = 1.0;
  for (std::uint64_t r = 1; r <= r_max; ++r) {
    out[r] = -std::expm1(k * std::log1p(-p * u));
    u = -std::expm1((k - 1.0) * std::log1p(-p * u));
  }
  return out;
}

// P_p(r <= R_root < inf) for r = 0..r_max. Above p_c the finite cluster is
// distributed as the cluster at the dual parameter, scaled by 1 - theta.
inline std::vector<double> finite_radius_tail(unsigned k, double p, std::uint64_t r_max) {
  auto out = radius_tail(k, subcritical_parameter(k, p), r_max);
  if (p > critical_point(k)) {
    const double finite_mass = 1.0 - survival_probability(k, p);
    for (auto& x : out) x *= finite_mass;
  }
  return out;
}

// E_p[|K|^j 1(|K| < inf)] for j = 1..max_power, by pmf summation out to
// where the remaining mass is negligible.
inline std::vector<double> tree_truncated_moments(unsigned k, double p, unsigned max_power) {
  check_tree_degree(k);
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("tree moments need p in [0, 1)");
  if (p == critical_point(k)) throw DomainError("truncated moments diverge at p_c");
  const double zeta = p == 0.0 ? 1.0 : zeta_exact(k, p);
  const auto m = static_cast<std::uint64_t>(std::ceil((80.0 + 10.0 * max_power) / zeta)) + 100;
  if (m > 20000000) throw SizeError("p too close to p_c for moment summation");
  std::vector<CompensatedSum> acc(max_power);
  for (std::uint64_t n = m; n >= 1; --n) {
    const double w = detail::cluster_size_probability(k, p, n);
    double x = w;
    for (unsigned j = 0; j < max_power; ++j) {
      x *= static_cast<double>(n);
      acc[j].add(x);
    }
  }
  std::vector<double> out;
  for (auto& a : acc) out.push_back(a.value());
  return out;
}

// ---------------------------------------------------------------------------
// Exact polynomials in p

using Rational = boost::multiprecision::cpp_rational;

class PolynomialInP {
 public:
  PolynomialInP() = default;
  explicit PolynomialInP(std::vector<Rational> c) : c_(std::move(c)) { trim(); }

  const std::vector<Rational>& coefficients() const noexcept { return c_; }
  std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }

  Rational evaluate_exact(const Rational& x) const {
    Rational acc = 0;
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
    return acc;
  }
  // The double argument is converted exactly; only the result is rounded.
  double operator()(double p) const { return evaluate_exact(Rational(p)).convert_to<double>(); }

  PolynomialInP derivative() const {
    std::vector<Rational> d;
    for (std::size_t i = 1; i < c_.size(); ++i) d.push_back(c_[i] * static_cast<long>(i));
    return PolynomialInP(std::move(d));
  }

  friend bool operator==(const PolynomialInP& a, const PolynomialInP& b) { return a.c_ == b.c_; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<Rational> c_;
};

// ---------------------------------------------------------------------------
// Configuration enumeration on small finite graphs

inline constexpr std::size_t kMaxEnumerationEdges = 20;

// The cluster of the root in one configuration.
struct ClusterInfo {
  std::uint64_t vertices = 0;    // bit mask
  std::uint32_t open_edges = 0;  // mask of open edges with both ends in the cluster
  std::uint32_t volume = 0;
  std::uint32_t touched = 0;     // edges with at least one endpoint in the cluster
  std::uint32_t radius = 0;      // intrinsic radius
};

using ClusterFunctional = std::function<double(const ClusterInfo&)>;

namespace detail {

class Enumerator {
 public:
  Enumerator(const FiniteSubgraph& h, std::uint32_t root) : h_(h), root_(root) {
    if (h.edges.size() > kMaxEnumerationEdges)
      throw SizeError("enumeration supports at most 20 edges");
    if (h.vertex_count > 64) throw SizeError("enumeration supports at most 64 vertices");
    if (root >= h.vertex_count) throw MembershipError("root not in graph");
    adj_.resize(h.vertex_count);
    for (std::uint32_t e = 0; e < h.edges.size(); ++e) {
      auto [a, b] = h.edges[e];
      if (a >= h.vertex_count || b >= h.vertex_count || a == b)
        throw GraphShapeError("bad edge in enumeration graph");
      adj_[a].push_back({b, e});
      adj_[b].push_back({a, e});
    }
  }

  std::size_t edge_count() const noexcept { return h_.edges.size(); }

  ClusterInfo cluster(std::uint32_t open) const {
    ClusterInfo c;
    std::uint32_t queue[64];
    std::uint32_t depth[64];
    std::size_t head = 0, tail = 0;
    queue[tail] = root_;
    depth[tail++] = 0;
    c.vertices = std::uint64_t{1} << root_;
    while (head < tail) {
      const std::uint32_t u = queue[head];
      const std::uint32_t d = depth[head++];
      c.radius = std::max(c.radius, d);
      for (auto [w, e] : adj_[u]) {
        if (!(open >> e & 1u)) continue;
        if (c.vertices >> w & 1u) continue;
        c.vertices |= std::uint64_t{1} << w;
        queue[tail] = w;
        depth[tail++] = d + 1;
      }
    }
    c.volume = static_cast<std::uint32_t>(tail);
    for (std::uint32_t e = 0; e < h_.edges.size(); ++e) {
      auto [a, b] = h_.edges[e];
      const bool ina = c.vertices >> a & 1u, inb = c.vertices >> b & 1u;
      if (ina || inb) ++c.touched;
      if (ina && inb && (open >> e & 1u)) c.open_edges |= 1u << e;
    }
    return c;
  }

  const FiniteSubgraph& graph() const noexcept { return h_; }
  std::uint32_t root() const noexcept { return root_; }

 private:
  struct Arc {
    std::uint32_t to, edge;
  };
  const FiniteSubgraph& h_;
  std::uint32_t root_;
  std::vector<std::vector<Arc>> adj_;
};

inline std::vector<Rational> binomial_row(std::size_t n) {
  std::vector<Rational> row(n + 1);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) row[i] = row[i - 1] * static_cast<long>(n - i + 1) / static_cast<long>(i);
  return row;
}

// sum_j s[j] p^j (1-p)^(m-j), expanded into monomials.
inline PolynomialInP bernstein_to_monomial(const std::vector<Rational>& s) {
  const std::size_t m = s.size() - 1;
  std::vector<Rational> c(m + 1, Rational(0));
  for (std::size_t j = 0; j <= m; ++j) {
    if (s[j] == 0) continue;
    auto row = binomial_row(m - j);
    for (std::size_t i = 0; i <= m - j; ++i) {
      Rational term = s[j] * row[i];
      if (i % 2) c[j + i] -= term;
      else c[j + i] += term;
    }
  }
  return PolynomialInP(std::move(c));
}

// p^a (1-p)^b, with 0^0 = 1.
inline double bernoulli_weight(double p, std::size_t a, std::size_t b) {
  return std::pow(p, static_cast<double>(a)) * std::pow(1.0 - p, static_cast<double>(b));
}

}  // namespace detail

// E_{p,n}[F(K_root)] = E_p[F(K) 1(E_v <= n)] as an exact polynomial.
inline PolynomialInP enumerate_truncated_expectation(const FiniteSubgraph& h, const ClusterFunctional& f,
                                                     std::uint64_t n, std::uint32_t root = 0) {
  detail::Enumerator en(h, root);
  const std::size_t m = en.edge_count();
  std::vector<Rational> by_open(m + 1, Rational(0));
  for (std::uint32_t omega = 0; omega < (1u << m); ++omega) {
    const auto c = en.cluster(omega);
    if (c.touched > n) continue;
    const double v = f(c);
    if (v != 0.0) by_open[static_cast<std::size_t>(std::popcount(omega))] += Rational(v);
  }
  return detail::bernstein_to_monomial(by_open);
}

namespace detail {

struct ConfigTable {
  std::vector<double> f;
  std::vector<std::uint32_t> touched;
};

inline ConfigTable tabulate(const Enumerator& en, const ClusterFunctional& f) {
  const std::size_t m = en.edge_count();
  ConfigTable t;
  t.f.resize(std::size_t{1} << m);
  t.touched.resize(std::size_t{1} << m);
  for (std::uint32_t omega = 0; omega < (1u << m); ++omega) {
    const auto c = en.cluster(omega);
    t.f[omega] = f(c);
    t.touched[omega] = c.touched;
  }
  return t;
}

inline void check_open_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("u_term and d_term need 0 < p < 1");
}

}  // namespace detail

// U = (1/p) sum_e E_{p,n}[(F(K) - F(K(omega_e))) 1(omega(e) = 1)], with
// omega_e the configuration with e closed.
inline double u_term(const FiniteSubgraph& h, const ClusterFunctional& f, std::uint64_t n, double p,
                     std::uint32_t root = 0) {
  detail::check_open_probability(p);
  detail::Enumerator en(h, root);
  const std::size_t m = en.edge_count();
  const auto t = detail::tabulate(en, f);
  std::vector<CompensatedSum> by_open(m + 1);
  for (std::uint32_t omega = 0; omega < (1u << m); ++omega) {
    if (t.touched[omega] > n) continue;
    for (std::uint32_t e = 0; e < m; ++e)
      if (omega >> e & 1u) by_open[std::popcount(omega)].add(t.f[omega] - t.f[omega & ~(1u << e)]);
  }
  CompensatedSum u;
  for (std::size_t j = 1; j <= m; ++j) u.add(by_open[j].value() * detail::bernoulli_weight(p, j - 1, m - j));
  return u.value();
}

// D = 1/(1-p) sum_e E_p[F(K) 1(omega(e) = 0, E_v <= n < E_v(omega^e))], with
// omega^e the configuration with e opened.
inline double d_term(const FiniteSubgraph& h, const ClusterFunctional& f, std::uint64_t n, double p,
                     std::uint32_t root = 0) {
  detail::check_open_probability(p);
  detail::Enumerator en(h, root);
  const std::size_t m = en.edge_count();
  const auto t = detail::tabulate(en, f);
  std::vector<CompensatedSum> by_open(m + 1);
  for (std::uint32_t omega = 0; omega < (1u << m); ++omega) {
    if (t.touched[omega] > n) continue;
    for (std::uint32_t e = 0; e < m; ++e)
      if (!(omega >> e & 1u) && t.touched[omega | (1u << e)] > n) by_open[std::popcount(omega)].add(t.f[omega]);
  }
  CompensatedSum d;
  for (std::size_t j = 0; j < m; ++j) d.add(by_open[j].value() * detail::bernoulli_weight(p, j, m - j - 1));
  return d.value();
}

namespace detail {

// For each open bridge of the cluster, the set of cluster vertices still
// joined to the root once it is deleted. Found by deleting each open edge in
// turn, independently of the low-link decomposition.
inline std::vector<std::uint64_t> root_sides_of_bridges(const Enumerator& en, const ClusterInfo& c) {
  std::vector<std::uint64_t> sides;
  for (std::uint32_t e = 0; e < en.edge_count(); ++e) {
    if (!(c.open_edges >> e & 1u)) continue;
    const auto reduced = en.cluster(c.open_edges & ~(1u << e));
    if (reduced.vertices != c.vertices) sides.push_back(reduced.vertices);
  }
  return sides;
}

inline std::uint32_t br_from_sides(const std::vector<std::uint64_t>& sides, std::uint64_t terminals) {
  std::uint32_t br = 0;
  for (auto s : sides)
    if (terminals & ~s) ++br;
  return br;
}

inline std::vector<std::uint32_t> mask_members(std::uint64_t mask) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; mask; ++i, mask >>= 1)
    if (mask & 1u) out.push_back(i);
  return out;
}

// sum over x in K^k of g(Br(root, x)).
template <class Fn>
double tuple_sum(const std::vector<std::uint32_t>& members, const std::vector<std::uint64_t>& sides, unsigned k,
                 Fn&& g) {
  double total = 0.0;
  const std::size_t v = members.size();
  std::vector<std::size_t> idx(k, 0);
  while (true) {
    std::uint64_t terminals = 0;
    for (auto i : idx) terminals |= std::uint64_t{1} << members[i];
    total += g(br_from_sides(sides, terminals));
    std::size_t pos = 0;
    while (pos < k && ++idx[pos] == v) idx[pos++] = 0;
    if (pos == k) break;
  }
  return total;
}

template <class Fn>
double enumerate_tuple_expectation(const FiniteSubgraph& h, unsigned k, std::uint64_t n, double p,
                                   std::uint32_t root, Fn&& integrand) {
  if (k < 1 || k > 3) throw DomainError("tuple size must be 1, 2 or 3");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
  Enumerator en(h, root);
  const std::size_t m = en.edge_count();
  CompensatedSum acc;
  for (std::uint32_t omega = 0; omega < (1u << m); ++omega) {
    const auto c = en.cluster(omega);
    if (c.touched > n) continue;
    const auto j = static_cast<std::size_t>(std::popcount(omega));
    const double w = bernoulli_weight(p, j, m - j);
    if (w == 0.0) continue;
    const auto sides = root_sides_of_bridges(en, c);
    const auto members = mask_members(c.vertices);
    acc.add(w * tuple_sum(members, sides, k, [&](std::uint32_t br) { return integrand(c, br); }));
  }
  return acc.value();
}

}  // namespace detail

// G_{k,n}(s,t) = E_{p,n}[sum_{x in K^k} exp(s E_v + t Br(root, x))].
inline double enumerate_gen_function(const FiniteSubgraph& h, unsigned k, std::uint64_t n, double s, double t,
                                     double p, std::uint32_t root = 0) {
  return detail::enumerate_tuple_expectation(h, k, n, p, root, [&](const ClusterInfo& c, std::uint32_t br) {
    return std::exp(s * c.touched + t * br);
  });
}

// E_{p,n}[sum_{x in K^k} Br(root, x)].
inline double enumerate_br_moment(const FiniteSubgraph& h, unsigned k, std::uint64_t n, double p,
                                  std::uint32_t root = 0) {
  return detail::enumerate_tuple_expectation(
      h, k, n, p, root, [](const ClusterInfo&, std::uint32_t br) { return static_cast<double>(br); });
}

}  // namespace percolab
