#include <catch_amalgamated.hpp>

#include <cmath>

#include "percolab/exact_oracles.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace percolab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double kl(double a, double b) { return a * std::log(a / b) + (1 - a) * std::log((1 - a) / (1 - b)); }

// Smallest fixed point of rho = (1-p+p rho)^(k-1) by monotone iteration from 0.
double extinction_by_iteration(unsigned k, double p) {
  double rho = 0.0;
  for (int i = 0; i < 200000; ++i) rho = std::pow(1 - p + p * rho, k - 1.0);
  return rho;
}

// P(R >= r) on the k-regular tree by enumerating every configuration of the
// depth-r ball: some depth-r vertex has its whole root path open.
double radius_tail_by_enumeration(unsigned k, double p, unsigned r) {
  if (r == 0) return 1.0;
  std::vector<std::uint32_t> path_mask{0};  // per vertex: mask of edges on its root path
  std::vector<unsigned> depth{0};
  std::uint32_t edges = 0;
  for (std::size_t i = 0; i < path_mask.size(); ++i) {
    if (depth[i] == r) continue;
    const unsigned children = i == 0 ? k : k - 1;
    for (unsigned c = 0; c < children; ++c) {
      path_mask.push_back(path_mask[i] | 1u << edges++);
      depth.push_back(depth[i] + 1);
    }
  }
  double total = 0.0;
  for (std::uint32_t omega = 0; omega < (1u << edges); ++omega) {
    bool reached = false;
    for (std::size_t i = 0; i < path_mask.size() && !reached; ++i)
      reached = depth[i] == r && (path_mask[i] & omega) == path_mask[i];
    if (reached) {
      const int open = std::popcount(omega);
      total += std::pow(p, open) * std::pow(1 - p, static_cast<double>(edges) - open);
    }
  }
  return total;
}

FiniteSubgraph graph(std::uint32_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> e) {
  return FiniteSubgraph{n, std::move(e)};
}

}  // namespace

TEST_CASE("critical points and duality", "[exact_oracles]") {
  REQUIRE(critical_point(3) == 0.5);
  REQUIRE(critical_point(4) == Catch::Approx(1.0 / 3));
  for (double p : {0.55, 0.7, 0.9}) REQUIRE_THAT(dual_parameter(3, p), WithinAbs(1 - p, 1e-14));
  for (unsigned k : {4u, 5u, 7u})
    for (double p : {0.4, 0.6, 0.8}) {
      if (p <= critical_point(k)) continue;
      const double q = dual_parameter(k, p);
      REQUIRE(q < critical_point(k));
      REQUIRE_THAT(q * std::pow(1 - q, k - 2.0), WithinRel(p * std::pow(1 - p, k - 2.0), 1e-12));
    }
  REQUIRE_THROWS_AS(dual_parameter(3, 0.3), DomainError);
  REQUIRE_THROWS_AS(critical_point(2), DomainError);
}

TEST_CASE("survival probability", "[exact_oracles]") {
  REQUIRE(survival_probability(3, 0.5) == 0.0);
  REQUIRE(survival_probability(3, 0.3) == 0.0);
  REQUIRE(survival_probability(3, 1.0) == 1.0);
  for (unsigned k : {3u, 4u, 6u})
    for (double p : {0.55, 0.6, 0.75, 0.95}) {
      const double rho = extinction_by_iteration(k, p);
      REQUIRE_THAT(survival_probability(k, p), WithinAbs(1 - std::pow(1 - p + p * rho, k), 1e-9));
    }
  // k = 3: rho = ((1-p)/p)^2, closed form.
  const double rho = std::pow(0.25 / 0.75, 2);
  REQUIRE_THAT(survival_probability(3, 0.75), WithinAbs(1 - std::pow(0.25 + 0.75 * rho, 3), 1e-14));
}

TEST_CASE("pmf matches the power-series oracle", "[exact_oracles]") {
  for (unsigned k : {3u, 4u, 5u})
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto lib = cluster_size_pmf(k, p, 60);
      const auto ref = oracle::pmf_by_series(k, p, 60);
      for (std::size_t n = 1; n <= 60; ++n) {
        INFO("k " << k << " p " << p << " n " << n);
        REQUIRE_THAT(lib[n - 1], WithinAbs(ref[n], 1e-14 + 1e-10 * ref[n]));
      }
    }
}

TEST_CASE("pmf matches rooted subtree counts", "[exact_oracles]") {
  for (unsigned k : {3u, 4u}) {
    const auto counts = oracle::rooted_subtree_counts(k, 9);
    for (double p : {0.2, 0.5, 0.8}) {
      const auto lib = cluster_size_pmf(k, p, 9);
      for (unsigned n = 1; n <= 9; ++n) {
        const double expect = static_cast<double>(counts[n]) * std::pow(p, n - 1.0) *
                              std::pow(1 - p, (k - 2.0) * (n - 1) + k);
        REQUIRE_THAT(lib[n - 1], WithinRel(expect, 1e-11));
      }
    }
  }
  // Rooted binary-tree counts on the 3-regular tree: 1, 3, 9, 28, 90.
  const auto c3 = oracle::rooted_subtree_counts(3, 5);
  REQUIRE(std::vector<std::uint64_t>(c3.begin() + 1, c3.end()) == std::vector<std::uint64_t>{1, 3, 9, 28, 90});
}

TEST_CASE("pmf mass is 1 - theta and finite law is the dual law rescaled", "[exact_oracles]") {
  for (unsigned k : {3u, 4u})
    for (double p : {0.2, 0.3, 0.6, 0.8}) {
      double mass = 0.0;
      for (double x : cluster_size_pmf(k, p, 100000)) mass += x;
      REQUIRE_THAT(mass, WithinAbs(1 - survival_probability(k, p), 1e-9));
      if (p <= critical_point(k)) continue;
      const double q = dual_parameter(k, p);
      const double scale = std::pow((1 - p) / (1 - q), k);
      REQUIRE_THAT(scale, WithinAbs(1 - survival_probability(k, p), 1e-9));
      const auto a = cluster_size_pmf(k, p, 30), b = cluster_size_pmf(k, q, 30);
      for (std::size_t n = 0; n < 30; ++n) REQUIRE_THAT(a[n], WithinRel(scale * b[n], 1e-9));
    }
}

TEST_CASE("zeta equals (k-1) KL(1/(k-1) | q)", "[exact_oracles]") {
  for (unsigned k : {3u, 4u, 5u})
    for (double p : {0.05, 0.2, 0.3, 0.45, 0.6, 0.8}) {
      if (std::fabs(p - critical_point(k)) < 1e-12) continue;
      const double q = p > critical_point(k) ? dual_parameter(k, p) : p;
      const double ref = (k - 1.0) * kl(1.0 / (k - 1), q);
      INFO("k " << k << " p " << p);
      REQUIRE_THAT(zeta_exact(k, p), WithinAbs(ref, 1e-10));
      REQUIRE_THAT(zeta_exact(k, p, RateNormalization::TouchedEdges), WithinAbs(ref / (k - 1), 1e-10));
    }
  REQUIRE(zeta_exact(3, 0.5) == 0.0);
}

TEST_CASE("zeta is the decay rate of the pmf", "[exact_oracles]") {
  // log P(n) - log P(2n) = zeta n + (3/2) log 2 + O(1/n).
  for (double p : {0.4, 0.6}) {
    const auto pmf = cluster_size_pmf(3, p, 4000);
    const double n = 2000;
    const double rate = (std::log(pmf[1999]) - std::log(pmf[3999]) - 1.5 * std::log(2.0)) / n;
    REQUIRE_THAT(rate, WithinAbs(zeta_exact(3, p), 1e-5));
  }
}

TEST_CASE("radius tail by ball enumeration", "[exact_oracles]") {
  for (double p : {0.3, 0.5, 0.7}) {
    const auto t = radius_tail(3, p, 3);
    for (unsigned r = 0; r <= 3; ++r) REQUIRE_THAT(t[r], WithinAbs(radius_tail_by_enumeration(3, p, r), 1e-10));
  }
  const auto t4 = radius_tail(4, 0.4, 2);
  for (unsigned r = 0; r <= 2; ++r) REQUIRE_THAT(t4[r], WithinAbs(radius_tail_by_enumeration(4, 0.4, r), 1e-10));
}

TEST_CASE("radius tail limits and rates", "[exact_oracles]") {
  REQUIRE_THAT(radius_tail(3, 0.7, 2000).back(), WithinAbs(survival_probability(3, 0.7), 1e-9));
  REQUIRE_THAT(finite_radius_tail(3, 0.7, 5).front(), WithinAbs(1 - survival_probability(3, 0.7), 1e-12));
  for (double p : {0.35, 0.65}) {
    const auto t = finite_radius_tail(3, p, 400);
    const double rate = std::log(t[300] / t[400]) / 100;
    REQUIRE_THAT(rate, WithinAbs(radius_rate_exact(3, p), 1e-6));
  }
  // Finite tail = full tail minus survival.
  const auto full = radius_tail(3, 0.6, 50), fin = finite_radius_tail(3, 0.6, 50);
  const double theta = survival_probability(3, 0.6);
  for (std::size_t r = 0; r <= 50; ++r) REQUIRE_THAT(fin[r], WithinAbs(full[r] - theta, 1e-10));
}

TEST_CASE("finite volume tail agrees with partial sums of the series pmf", "[exact_oracles]") {
  for (double p : {0.3, 0.48, 0.52, 0.7}) {
    const auto ref = oracle::pmf_by_series(3, p, 200);
    const auto tail = finite_volume_tail(3, p, 200);
    double cum = 0.0;
    const double mass = 1 - survival_probability(3, p);
    for (std::size_t n = 1; n <= 200; ++n) {
      INFO("p " << p << " n " << n);
      REQUIRE_THAT(tail[n - 1], WithinAbs(mass - cum, 1e-9));
      cum += ref[n];
    }
  }
  // Deep tail keeps relative precision.
  const auto deep = finite_volume_tail(3, 0.4, 2000);
  const auto pmf = cluster_size_pmf(3, 0.4, 2001);
  REQUIRE(deep.back() > 0.0);
  REQUIRE(deep[1998] / deep[1999] == Catch::Approx(1 + pmf[1998] / deep[1999]).epsilon(1e-9));
}

TEST_CASE("truncated moments", "[exact_oracles]") {
  for (unsigned k : {3u, 4u})
    for (double p : {0.1, 0.2, 0.3}) {
      if (p >= critical_point(k)) continue;
      const auto m = tree_truncated_moments(k, p, 2);
      REQUIRE_THAT(m[0], WithinRel(1 + k * p / (1 - (k - 1) * p), 1e-10));
    }
  // Above p_c: E[|K|; finite] from the dual law.
  const double q = dual_parameter(3, 0.7);
  const double scale = 1 - survival_probability(3, 0.7);
  REQUIRE_THAT(tree_truncated_moments(3, 0.7, 1)[0], WithinRel(scale * (1 + 3 * q / (1 - 2 * q)), 1e-10));
  REQUIRE_THROWS_AS(tree_truncated_moments(3, 0.5, 1), DomainError);
}

TEST_CASE("tree oracles reject bad arguments", "[exact_oracles]") {
  REQUIRE_THROWS_AS(cluster_size_pmf(2, 0.5, 10), DomainError);
  REQUIRE_THROWS_AS(cluster_size_pmf(3, -0.1, 10), DomainError);
  REQUIRE_THROWS_AS(cluster_size_pmf(3, 0.5, 200000), SizeError);
  REQUIRE_THROWS_AS(radius_tail(3, 0.5, 20000), SizeError);
  REQUIRE_THROWS_AS(zeta_exact(3, 0.0), DomainError);
}

TEST_CASE("compensated summation", "[exact_oracles]") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  REQUIRE(s.value() == 1.0);
}

TEST_CASE("enumerated expectations match union-find enumeration", "[exact_oracles][property]") {
  Xoshiro256 rng(501);
  for (int i = 0; i < 200; ++i) {
    const auto n = static_cast<std::uint32_t>(testgen::int_in(rng, 1, 8));
    const auto h = testgen::connected_graph(rng, n, static_cast<std::uint32_t>(testgen::int_in(rng, 0, 4)));
    const auto cap = testgen::int_in(rng, 0, h.edges.size() + 1);
    const auto vol = enumerate_truncated_expectation(h, [](const ClusterInfo& c) { return double(c.volume); }, cap);
    const auto one = enumerate_truncated_expectation(h, [](const ClusterInfo&) { return 1.0; }, cap);
    for (double p : {0.0, 0.25, 0.5, 0.9, 1.0}) {
      REQUIRE_THAT(vol(p), WithinAbs(oracle::direct_expectation(h, [](auto& c) { return double(c.volume); }, cap, p), 1e-12));
      REQUIRE_THAT(one(p), WithinAbs(oracle::direct_expectation(h, [](auto&) { return 1.0; }, cap, p), 1e-12));
    }
    std::uint64_t root_degree = 0;
    for (auto [x, y] : h.edges) root_degree += x == 0 || y == 0;
    REQUIRE(one(0.0) == (root_degree <= cap ? 1.0 : 0.0));
  }
}

TEST_CASE("Russo: U - D equals the derivative of the exact polynomial", "[exact_oracles][property]") {
  Xoshiro256 rng(502);
  const std::vector<std::pair<const char*, ClusterFunctional>> fs{
      {"one", [](const ClusterInfo&) { return 1.0; }},
      {"volume", [](const ClusterInfo& c) { return double(c.volume); }},
      {"radius>=2", [](const ClusterInfo& c) { return c.radius >= 2 ? 1.0 : 0.0; }}};
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::uint32_t>(testgen::int_in(rng, 2, 8));
    const auto h = testgen::connected_graph(rng, n, static_cast<std::uint32_t>(testgen::int_in(rng, 0, 4)));
    const auto cap = testgen::int_in(rng, 1, h.edges.size());
    for (const auto& [name, f] : fs) {
      const auto poly = enumerate_truncated_expectation(h, f, cap);
      const auto deriv = poly.derivative();
      for (double p : {0.2, 0.5, 0.8}) {
        INFO(name << " graph " << i << " p " << p);
        const double lhs = deriv(p);
        REQUIRE_THAT(u_term(h, f, cap, p) - d_term(h, f, cap, p), WithinAbs(lhs, 1e-10));
        const double hstep = 1e-6;
        REQUIRE_THAT(lhs, WithinAbs((poly(p + hstep) - poly(p - hstep)) / (2 * hstep), 1e-5));
      }
    }
  }
}

TEST_CASE("untruncated U is the plain Russo derivative", "[exact_oracles]") {
  // Single edge, F = volume: E_p F = 1 + p, derivative 1, and D = 0 when n is large.
  const auto h = graph(2, {{0, 1}});
  const ClusterFunctional vol = [](const ClusterInfo& c) { return double(c.volume); };
  REQUIRE_THAT(u_term(h, vol, 10, 0.3), WithinAbs(1.0, 1e-15));
  REQUIRE(d_term(h, vol, 10, 0.3) == 0.0);
  REQUIRE_THROWS_AS(u_term(h, vol, 10, 0.0), DomainError);
}

TEST_CASE("generating function and Br moments on small graphs", "[exact_oracles]") {
  const auto edge = graph(2, {{0, 1}});
  // K = {0} w.p. 1-p, {0,1} w.p. p. With k = 2 the ordered pairs (0,1), (1,0), (1,1) each carry one bridge.
  const double p = 0.3;
  REQUIRE_THAT(enumerate_br_moment(edge, 1, 10, p), WithinAbs(p, 1e-15));
  REQUIRE_THAT(enumerate_br_moment(edge, 2, 10, p), WithinAbs(p * 3, 1e-15));
  REQUIRE_THAT(enumerate_gen_function(edge, 1, 10, 0.0, 0.0, p), WithinAbs(1 + p, 1e-15));
  REQUIRE_THAT(enumerate_gen_function(edge, 1, 10, 0.5, 1.0, p),
               WithinAbs(std::exp(0.5) * ((1 - p) + p * (1 + std::exp(1.0))), 1e-12));
  REQUIRE(enumerate_gen_function(edge, 1, 0, 0.0, 0.0, p) == 0.0);
  // Triangle: never a bridge.
  const auto tri = graph(3, {{0, 1}, {1, 2}, {2, 0}});
  REQUIRE(enumerate_br_moment(tri, 3, 10, 1.0) == 0.0);
  Xoshiro256 rng(503);
  for (int i = 0; i < 50; ++i) {
    const auto n = static_cast<std::uint32_t>(testgen::int_in(rng, 1, 7));
    const auto h = testgen::connected_graph(rng, n, static_cast<std::uint32_t>(testgen::int_in(rng, 0, 3)));
    for (unsigned k : {1u, 2u}) {
      const double g = enumerate_gen_function(h, k, 100, 0.0, 0.0, 0.4);
      const double ref = oracle::direct_expectation(h, [k](auto& c) { return std::pow(double(c.volume), k); }, 100, 0.4);
      REQUIRE_THAT(g, WithinAbs(ref, 1e-10));
    }
  }
  REQUIRE_THROWS_AS(enumerate_gen_function(edge, 4, 10, 0, 0, p), DomainError);
}

TEST_CASE("enumeration size limits", "[exact_oracles]") {
  FiniteSubgraph h;
  h.vertex_count = 22;
  for (std::uint32_t i = 1; i < 22; ++i) h.edges.emplace_back(i - 1, i);
  REQUIRE_THROWS_AS(enumerate_truncated_expectation(h, [](const ClusterInfo&) { return 1.0; }, 5), SizeError);
}

TEST_CASE("rate examples on the 3-regular tree", "[exact_oracles]") {
  for (double e : {0.05, 0.1}) REQUIRE_THAT(zeta_exact(3, 0.5 + e), WithinRel(zeta_exact(3, 0.5 - e), 1e-9));
  double prev = 0.0;
  for (double e : {0.08, 0.04, 0.02}) {
    const double ratio = zeta_exact(3, 0.5 + e) / (e * e);
    REQUIRE(ratio > 0.0);
    if (prev > 0.0) REQUIRE(std::fabs(ratio / prev - 1) < 0.25);
    prev = ratio;
  }
}

TEST_CASE("enumeration examples", "[exact_oracles]") {
  const ClusterFunctional one = [](const ClusterInfo&) { return 1.0; };
  const ClusterFunctional vol = [](const ClusterInfo& c) { return double(c.volume); };
  const auto c4 = graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  REQUIRE(enumerate_truncated_expectation(c4, one, 4) == PolynomialInP({Rational(1)}));
  REQUIRE(enumerate_truncated_expectation(graph(2, {{0, 1}}), vol, 1) == PolynomialInP({Rational(1), Rational(1)}));
  const auto poly = enumerate_truncated_expectation(c4, vol, 4);
  for (double p : {0.1, 0.3, 0.5, 0.9})
    REQUIRE_THAT(poly(p), WithinAbs(oracle::direct_expectation(c4, [](auto& c) { return double(c.volume); }, 4, p), 1e-14));
  // Without truncation E|K| on the 4-cycle: 1 + 2 P(0<->1) + P(0<->2).
  const double p = 0.35;
  REQUIRE_THAT(poly(p), WithinAbs(1 + 2 * (p + (1 - p) * p * p * p) + 1 - std::pow(1 - p * p, 2), 1e-14));
  for (double q : {0.2, 0.5, 0.8}) {
    REQUIRE(u_term(c4, one, 2, q) == 0.0);
    REQUIRE(d_term(c4, vol, 4, q) == 0.0);
  }
  const auto trunc = enumerate_truncated_expectation(c4, vol, 2);
  REQUIRE_THAT(trunc.derivative()(0.3) - (u_term(c4, vol, 2, 0.3) - d_term(c4, vol, 2, 0.3)), WithinAbs(0.0, 1e-9));
}

TEST_CASE("U and D signs", "[exact_oracles][property]") {
  Xoshiro256 rng(504);
  const ClusterFunctional vol = [](const ClusterInfo& c) { return double(c.volume); };
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::uint32_t>(testgen::int_in(rng, 2, 8));
    const auto h = testgen::connected_graph(rng, n, static_cast<std::uint32_t>(testgen::int_in(rng, 0, 4)));
    const auto cap = testgen::int_in(rng, 1, h.edges.size());
    for (double p : {0.2, 0.5, 0.8}) {
      REQUIRE(u_term(h, vol, cap, p) >= 0.0);
      REQUIRE(d_term(h, vol, cap, p) >= 0.0);
    }
  }
}

TEST_CASE("pmf mass and conditional duality to stated tolerances", "[exact_oracles]") {
  for (double p : {0.3, 0.45, 0.55, 0.7}) {
    // Tail bound far below 1e-9 by n_max = 100000 at these p.
    const auto pmf = cluster_size_pmf(3, p, 100000);
    CompensatedSum s;
    for (double x : pmf) s.add(x);
    REQUIRE_THAT(s.value(), WithinAbs(1 - survival_probability(3, p), 1e-8));
  }
  for (unsigned k : {3u, 4u, 5u})
    for (double p : {0.6, 0.75, 0.9}) {
      const double q = dual_parameter(k, p);
      REQUIRE_THAT(duality_weight(k, q), WithinAbs(duality_weight(k, p), 1e-12));
      const auto a = cluster_size_pmf(k, p, 100), b = cluster_size_pmf(k, q, 100);
      const double fa = 1 - survival_probability(k, p), fb = 1 - survival_probability(k, q);
      for (std::size_t n = 0; n < 100; ++n) REQUIRE_THAT(a[n] / fa, WithinAbs(b[n] / fb, 1e-8));
    }
}
