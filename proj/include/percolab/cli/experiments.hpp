#pragma once

// Experiment dispatch. Each kind validates its keys, computes its tables and
// returns them together with verdicts; run_experiment writes the files and
// the manifest.

#include <algorithm>
#include <chrono>
#include <deque>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "percolab/bridge_tree.hpp"
#include "percolab/cli/config.hpp"
#include "percolab/cli/output.hpp"
#include "percolab/diagnostics.hpp"
#include "percolab/engine.hpp"
#include "percolab/errors.hpp"
#include "percolab/estimators.hpp"
#include "percolab/exact_oracles.hpp"
#include "percolab/graph_models.hpp"

namespace percolab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEstimator = 3;
inline constexpr int kExitOracle = 4;

struct Outcome {
  int exit_code = kExitOk;
  nlohmann::json verdicts = nlohmann::json::object();
  std::deque<std::pair<std::string, CsvTable>> tables;  // deque keeps table references stable
  bool control = false;

  CsvTable& table(const std::string& file, std::vector<std::string> header) {
    tables.emplace_back(file, CsvTable(std::move(header)));
    return tables.back().second;
  }
};

// ---------------------------------------------------------------------------
// Key helpers

inline const std::set<std::string> kCommonKeys = {"kind", "seed", "workers", "out"};

// Keys each experiment accepts beyond the common ones.
inline const std::set<std::string>& experiment_keys(const std::string& kind) {
  static const std::set<std::string> tail = {"model",      "p",           "epsilon",       "side",
                                             "p_c",        "statistic",   "thresholds",    "radius_thresholds",
                                             "replicates", "edge_budget", "radius_budget", "source"};
  static const std::map<std::string, std::set<std::string>> table = [] {
    std::map<std::string, std::set<std::string>> t;
    t["tail"] = tail;
    t["zeta"] = tail;
    t["zeta"].insert({"window_min", "window_max", "min_threshold", "max_threshold", "prefactor"});
    t["collapse"] = tail;
    t["collapse"].insert({"normalize", "x_min", "x_max"});
    t["moments"] = {"model",       "p",     "epsilon",       "side",     "p_c", "replicates",
                    "edge_budget", "k_max", "normalization", "resamples"};
    t["exponents"] = {"model", "epsilon", "side",          "p_c",      "source",       "replicates",
                      "budget_factor", "k_max", "normalization", "resamples"};
    t["skinny"] = {"model", "p", "radii", "alphas", "s_values", "replicates", "edge_budget", "radius_budget"};
    t["genfn"] = {"model", "p", "n", "k", "s_values", "t_values", "replicates"};
    t["russo-check"] = {"edges", "trials", "p"};
    t["oracle-compare"] = {"model",       "p",           "replicates",   "thresholds",
                           "radius_thresholds", "edge_budget", "radius_budget"};
    t["diagnostics"] = {"model", "p", "radii", "mc_replicates", "edge_budget"};
    t["pc-scan"] = {"model", "p", "replicates", "edge_budget", "radius_budget"};
    return t;
  }();
  const auto it = table.find(kind);
  if (it == table.end()) throw ConfigError("unknown experiment kind '" + kind + "'");
  return it->second;
}

inline void allow_keys(const Config& cfg, const std::string& kind) {
  auto allowed = experiment_keys(kind);
  allowed.insert(kCommonKeys.begin(), kCommonKeys.end());
  cfg.require_only(allowed);
}

// An integer budget, or "inf".
inline std::uint64_t budget_key(const Config& cfg, const std::string& key, std::uint64_t fallback) {
  if (!cfg.has(key)) return fallback;
  if (cfg.str(key) == "inf") return kUnbounded;
  const auto v = cfg.u64(key);
  if (v == 0) cfg.fail(key, "budget must be positive");
  return v;
}

inline std::uint64_t positive(const Config& cfg, const std::string& key, std::uint64_t fallback) {
  const auto v = cfg.u64(key, fallback);
  if (v == 0) cfg.fail(key, "must be at least 1");
  return v;
}

inline void check_probability_key(const Config& cfg, const std::string& key, double p) {
  if (!(p >= 0.0 && p <= 1.0)) cfg.fail(key, "probability " + format_real(p) + " outside [0, 1]");
}

inline const RegularTree* tree_of(const AnyModel& m) { return std::get_if<RegularTree>(&m); }

inline AnyModel model_of(const Config& cfg) {
  try {
    return parse_model(cfg.str("model"));
  } catch (const AddressError& e) {
    cfg.fail("model", e.what());
  }
}

// Trees: 1/(k-1). Other models: the p_c key, which is required.
inline double resolve_pc(const Config& cfg, const AnyModel& m) {
  if (const auto* t = tree_of(m)) {
    if (cfg.has("p_c")) cfg.fail("p_c", "p_c is analytic on trees and may not be set");
    return t->critical_point();
  }
  if (!cfg.has("p_c")) cfg.fail("model", "this model needs an explicit p_c key");
  const double pc = cfg.real("p_c");
  check_probability_key(cfg, "p_c", pc);
  return pc;
}

inline Side side_of(const Config& cfg) {
  const auto s = cfg.str("side", "super");
  if (s == "sub") return Side::Sub;
  if (s == "super") return Side::Super;
  cfg.fail("side", "expected sub or super");
}

struct ParameterPoint {
  double p = 0.0;
  std::optional<double> epsilon;
};

// Either a p list, or an epsilon list mapped to p_c -+ epsilon by side.
inline std::vector<ParameterPoint> parameter_points(const Config& cfg, const AnyModel& m) {
  std::vector<ParameterPoint> out;
  if (cfg.has("p") == cfg.has("epsilon")) throw ConfigError(cfg.source() + ": give exactly one of p or epsilon");
  if (cfg.has("p")) {
    if (cfg.has("side")) cfg.fail("side", "side applies to epsilon lists only");
    if (cfg.has("p_c") && !tree_of(m)) resolve_pc(cfg, m);
    for (double p : cfg.reals("p")) {
      check_probability_key(cfg, "p", p);
      out.push_back({p, std::nullopt});
    }
    return out;
  }
  const double pc = resolve_pc(cfg, m);
  const double sign = side_of(cfg) == Side::Sub ? -1.0 : 1.0;
  for (double e : cfg.reals("epsilon")) {
    if (!(e > 0.0)) cfg.fail("epsilon", "epsilon must be positive");
    const double p = pc + sign * e;
    check_probability_key(cfg, "epsilon", p);
    out.push_back({p, e});
  }
  return out;
}

inline std::string optional_real(const std::optional<double>& x) { return x ? format_real(*x) : std::string(); }

inline TailStatistic statistic_of(const Config& cfg, const std::string& name) {
  try {
    return parse_tail_statistic(name);
  } catch (const ConfigurationError& e) {
    cfg.fail("statistic", e.what());
  }
}

inline std::vector<TailStatistic> statistics_of(const Config& cfg) {
  std::vector<TailStatistic> out;
  if (!cfg.has("statistic")) return {TailStatistic::Volume};
  for (const auto& w : cfg.words("statistic")) out.push_back(statistic_of(cfg, w));
  return out;
}

inline const std::vector<std::uint64_t>& thresholds_for(TailStatistic s, const std::vector<std::uint64_t>& volume,
                                                        const std::vector<std::uint64_t>& radius) {
  return is_radius(s) ? radius : volume;
}

struct TailPlan {
  std::vector<TailStatistic> statistics;
  std::vector<std::uint64_t> thresholds;         // volume and edges
  std::vector<std::uint64_t> radius_thresholds;  // radii
  ExplorationBudget budget;
  std::uint64_t replicates = 0;
};

inline TailPlan tail_plan(const Config& cfg) {
  TailPlan plan;
  plan.statistics = statistics_of(cfg);
  bool any_volume = false, any_radius = false;
  for (auto s : plan.statistics) (is_radius(s) ? any_radius : any_volume) = true;
  if (any_volume) plan.thresholds = cfg.thresholds("thresholds");
  if (any_radius) plan.radius_thresholds = cfg.thresholds(cfg.has("radius_thresholds") ? "radius_thresholds" : "thresholds");
  const std::uint64_t default_edges = any_volume ? 50 * plan.thresholds.back() : 1000000;
  plan.budget = {budget_key(cfg, "edge_budget", default_edges), budget_key(cfg, "radius_budget", kUnbounded)};
  plan.replicates = positive(cfg, "replicates", 100000);
  return plan;
}

inline bool oracle_source(const Config& cfg, const AnyModel& m) {
  const auto src = cfg.str("source", "mc");
  if (src != "mc" && src != "oracle") cfg.fail("source", "expected mc or oracle");
  if (src == "oracle" && !tree_of(m)) cfg.fail("source", "oracle curves exist for tree models only");
  return src == "oracle";
}

// Curves for every (point, statistic), from Monte Carlo or the tree oracle.
inline std::vector<std::vector<TailCurve>> tail_curves(const Config& cfg, const AnyModel& m,
                                                       const std::vector<ParameterPoint>& points,
                                                       const TailPlan& plan, std::uint64_t seed, unsigned workers) {
  const bool oracle = oracle_source(cfg, m);
  std::vector<std::vector<TailCurve>> out;
  for (const auto& pt : points) {
    std::vector<TailCurve> row;
    if (oracle) {
      for (auto s : plan.statistics)
        row.push_back(tree_exact_tail_curve(tree_of(m)->k(), pt.p,
                                            s, thresholds_for(s, plan.thresholds, plan.radius_thresholds)));
    } else {
      const auto summary = std::visit(
          [&](const auto& g) { return sample_batch(g, pt.p, plan.budget, plan.replicates, seed, workers); }, m);
      for (auto s : plan.statistics)
        row.push_back(tail_curve(summary, s, thresholds_for(s, plan.thresholds, plan.radius_thresholds)));
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::string budget_text(std::uint64_t b) { return b == kUnbounded ? "inf" : std::to_string(b); }

inline void write_tail_rows(CsvTable& t, const TailCurve& c, bool oracle) {
  for (const auto& pt : c.points)
    t.add_row() << to_string(c.statistic) << c.p << pt.threshold << pt.estimate << pt.ci_low << pt.ci_high
                << (oracle ? std::string("exact") : std::to_string(c.replicates))
                << budget_text(c.budget.max_touched_edges);
}

inline const std::vector<std::string> kTailHeader = {"statistic", "p",       "threshold",  "estimate",
                                                     "ci_low",    "ci_high", "replicates", "budget"};

// ---------------------------------------------------------------------------
// Experiments

inline Outcome run_tail(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "tail");
  const auto m = model_of(cfg);
  const auto points = parameter_points(cfg, m);
  const auto plan = tail_plan(cfg);
  Outcome o;
  o.control = is_control(m);
  const auto curves = tail_curves(cfg, m, points, plan, seed, workers);
  const bool oracle = oracle_source(cfg, m);
  auto& t = o.table("tail.csv", kTailHeader);
  for (const auto& row : curves)
    for (const auto& c : row) write_tail_rows(t, c, oracle);
  if (const auto* tree = tree_of(m); tree && !oracle) {
    nlohmann::json bias = nlohmann::json::object();
    for (const auto& pt : points)
      bias[format_real(pt.p)] = tree_censoring_bias(tree->k(), pt.p, plan.budget.max_touched_edges);
    o.verdicts["censoring_bias"] = bias;
  }
  return o;
}

inline Prefactor prefactor_of(const Config& cfg) {
  const auto v = cfg.str("prefactor", "theorem");
  if (v == "theorem") return Prefactor::Theorem;
  if (v == "free") return Prefactor::FreePower;
  cfg.fail("prefactor", "expected theorem or free");
}

inline std::optional<double> exact_rate(const AnyModel& m, TailStatistic s, double p) {
  const auto* tree = tree_of(m);
  if (!tree || p == tree->critical_point() || p <= 0.0 || p >= 1.0) return std::nullopt;
  switch (s) {
    case TailStatistic::Volume:
      return zeta_exact(tree->k(), p, RateNormalization::Volume);
    case TailStatistic::TouchedEdges:
      return zeta_exact(tree->k(), p, RateNormalization::TouchedEdges);
    default:
      return radius_rate_exact(tree->k(), p);
  }
}

inline Outcome run_zeta(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "zeta");
  const auto m = model_of(cfg);
  const auto points = parameter_points(cfg, m);
  const auto plan = tail_plan(cfg);
  FitWindow window;
  window.p_c = resolve_pc(cfg, m);
  window.scaled_min = cfg.real("window_min", window.scaled_min);
  if (cfg.has("window_max")) window.scaled_max = cfg.real("window_max");
  if (cfg.has("min_threshold")) window.min_threshold = cfg.u64("min_threshold");
  if (cfg.has("max_threshold")) window.max_threshold = cfg.u64("max_threshold");
  window.prefactor = prefactor_of(cfg);

  Outcome o;
  o.control = is_control(m);
  const bool oracle = oracle_source(cfg, m);
  const auto curves = tail_curves(cfg, m, points, plan, seed, workers);
  auto& tail = o.table("tail.csv", kTailHeader);
  for (const auto& row : curves)
    for (const auto& c : row) write_tail_rows(tail, c, oracle);
  auto& z = o.table("zeta.csv", {"statistic", "p", "epsilon", "zeta", "standard_error", "window_low", "window_high",
                                 "points", "r_squared", "max_deviation", "prefactor_power", "zeta_exact"});
  for (const auto& row : curves)
    for (const auto& c : row) {
      const auto f = zeta_fit(c, window);
      const double power = f.power ? *f.power : (is_radius(c.statistic) ? -1.0 : -0.5);
      z.add_row() << to_string(c.statistic) << c.p << std::fabs(c.p - window.p_c) << f.value << f.standard_error
                  << f.window_low << f.window_high << static_cast<std::uint64_t>(f.points) << f.r_squared
                  << f.max_deviation << power << optional_real(exact_rate(m, c.statistic, c.p));
    }
  return o;
}

inline MomentNormalization normalization_of(const Config& cfg) {
  const auto v = cfg.str("normalization", "replicates");
  if (v == "replicates") return MomentNormalization::Replicates;
  if (v == "finite") return MomentNormalization::FiniteMass;
  cfg.fail("normalization", "expected replicates or finite");
}

inline unsigned moment_order(const Config& cfg, unsigned fallback) {
  const auto k = cfg.u64("k_max", fallback);
  if (k < 1 || k > kMaxMomentPower) cfg.fail("k_max", "moment order must be 1, 2 or 3");
  return static_cast<unsigned>(k);
}

// Exact E[|K|^j 1(finite)] (or conditional on finiteness) on trees, j = 1..k_max.
inline std::optional<std::vector<double>> exact_moments(const AnyModel& m, double p, unsigned k_max,
                                                        MomentNormalization norm) {
  const auto* tree = tree_of(m);
  if (!tree || p == tree->critical_point() || p >= 1.0) return std::nullopt;
  auto v = tree_truncated_moments(tree->k(), p, k_max);
  if (norm == MomentNormalization::FiniteMass) {
    const double finite = 1.0 - survival_probability(tree->k(), p);
    for (auto& x : v) x /= finite;
  }
  return v;
}

inline const char* to_string(MomentNormalization n) {
  return n == MomentNormalization::Replicates ? "replicates" : "finite";
}

inline const std::vector<std::string> kMomentHeader = {"p",      "epsilon", "k",       "estimate",      "ci_low",
                                                       "ci_high", "standard_error", "normalization", "exact"};

inline Outcome run_moments(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "moments");
  const auto m = model_of(cfg);
  const auto points = parameter_points(cfg, m);
  const auto replicates = positive(cfg, "replicates", 100000);
  const ExplorationBudget budget{budget_key(cfg, "edge_budget", 1000000), kUnbounded};
  const unsigned k_max = moment_order(cfg, 2);
  const auto norm = normalization_of(cfg);
  const auto resamples = static_cast<unsigned>(positive(cfg, "resamples", kBootstrapResamples));
  Outcome o;
  o.control = is_control(m);
  auto& t = o.table("moments.csv", kMomentHeader);
  for (const auto& pt : points) {
    const auto s = std::visit([&](const auto& g) { return sample_batch(g, pt.p, budget, replicates, seed, workers); }, m);
    const auto est = truncated_moments(s, k_max, seed, norm, resamples);
    const auto exact = exact_moments(m, pt.p, k_max, norm);
    for (const auto& e : est)
      t.add_row() << pt.p << optional_real(pt.epsilon) << e.k << e.value << e.ci_low << e.ci_high << e.standard_error
                  << to_string(norm) << (exact ? format_real((*exact)[e.k - 1]) : std::string());
  }
  return o;
}

inline Outcome run_exponents(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "exponents");
  const auto m = model_of(cfg);
  if (cfg.has("p")) cfg.fail("p", "exponent fits take an epsilon list");
  const auto points = parameter_points(cfg, m);
  const auto side = side_of(cfg);
  const bool oracle = oracle_source(cfg, m);
  const unsigned k_max = moment_order(cfg, oracle ? 3 : 2);
  const auto norm = normalization_of(cfg);
  const auto replicates = positive(cfg, "replicates", 100000);
  const double factor = cfg.real("budget_factor", 100.0);
  if (!(factor > 0.0)) cfg.fail("budget_factor", "must be positive");
  const auto resamples = static_cast<unsigned>(positive(cfg, "resamples", kBootstrapResamples));

  Outcome o;
  o.control = is_control(m);
  auto& t = o.table("moments.csv", kMomentHeader);
  std::vector<MomentRow> table;
  for (const auto& pt : points) {
    MomentRow row;
    row.epsilon = *pt.epsilon;
    const auto exact = exact_moments(m, pt.p, k_max, norm);
    if (oracle) {
      row.moments = *exact;
      for (unsigned j = 0; j < k_max; ++j)
        t.add_row() << pt.p << row.epsilon << j + 1 << row.moments[j] << row.moments[j] << row.moments[j] << 0.0
                    << to_string(norm) << format_real((*exact)[j]);
    } else {
      const auto budget_edges = static_cast<std::uint64_t>(std::ceil(factor / (row.epsilon * row.epsilon)));
      const ExplorationBudget budget{budget_edges, kUnbounded};
      const auto s = std::visit([&](const auto& g) { return sample_batch(g, pt.p, budget, replicates, seed, workers); }, m);
      for (const auto& e : truncated_moments(s, k_max, seed, norm, resamples)) {
        row.moments.push_back(e.value);
        row.intervals.push_back({e.ci_low, e.ci_high});
        t.add_row() << pt.p << row.epsilon << e.k << e.value << e.ci_low << e.ci_high << e.standard_error
                    << to_string(norm) << (exact ? format_real((*exact)[e.k - 1]) : std::string());
      }
    }
    table.push_back(std::move(row));
  }
  const auto [gamma, delta] = exponent_fit_gamma_delta(table, side, seed, resamples);
  auto& x = o.table("exponents.csv", {"name", "value", "standard_error", "window_low", "window_high", "points",
                                      "r_squared", "max_deviation"});
  for (const auto* f : {&gamma, &delta})
    x.add_row() << f->name << f->value << f->standard_error << f->window_low << f->window_high
                << static_cast<std::uint64_t>(f->points) << f->r_squared << f->max_deviation;
  o.verdicts["gamma"] = gamma.value;
  o.verdicts["delta"] = delta.value;
  return o;
}

inline Outcome run_skinny(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "skinny");
  const auto m = model_of(cfg);
  const auto ps = cfg.reals("p");
  BatchOptions opt;
  opt.skinny.radii = cfg.thresholds("radii");
  opt.skinny.alphas = cfg.has("alphas") ? cfg.reals("alphas") : std::vector<double>{4.0};
  if (cfg.has("s_values")) opt.skinny.s_values = cfg.reals("s_values");
  try {
    check_skinny_grid(opt.skinny);
  } catch (const ConfigurationError& e) {
    cfg.fail("radii", e.what());
  }
  const auto replicates = positive(cfg, "replicates", 100000);
  const ExplorationBudget budget{budget_key(cfg, "edge_budget", 1000000), budget_key(cfg, "radius_budget", kUnbounded)};
  Outcome o;
  o.control = is_control(m);
  auto& t = o.table("skinny.csv", {"p", "r", "alpha", "estimate", "ci_low", "ci_high", "count", "replicates"});
  auto& c = o.table("skinny_conditional.csv",
                    {"p", "r", "s", "estimate", "ci_low", "ci_high", "numerator", "denominator", "unknown"});
  for (double p : ps) {
    check_probability_key(cfg, "p", p);
    const auto s = std::visit([&](const auto& g) { return sample_batch(g, p, budget, replicates, seed, workers, opt); }, m);
    for (const auto& e : skinny_estimates(s)) {
      t.add_row() << e.p << e.r << e.alpha << e.estimate << e.ci_low << e.ci_high << e.count << e.replicates;
      if (e.alpha != opt.skinny.alphas.front()) continue;  // conditional rows repeat per alpha
      for (const auto& k : e.conditional)
        c.add_row() << e.p << e.r << k.s << k.estimate << k.ci_low << k.ci_high << k.numerator << k.denominator
                    << k.unknown;
    }
  }
  return o;
}

inline Outcome run_genfn(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "genfn");
  const auto m = model_of(cfg);
  const auto ps = cfg.reals("p");
  const auto n = positive(cfg, "n", 100);
  std::vector<unsigned> ks;
  for (double k : cfg.has("k") ? cfg.reals("k") : std::vector<double>{1.0}) {
    if (k != 1.0 && k != 2.0 && k != 3.0) cfg.fail("k", "tuple size must be 1, 2 or 3");
    ks.push_back(static_cast<unsigned>(k));
  }
  const auto s_grid = cfg.has("s_values") ? cfg.reals("s_values") : std::vector<double>{0.0};
  const auto t_grid = cfg.has("t_values") ? cfg.reals("t_values") : std::vector<double>{0.0};
  for (double s : s_grid)
    if (s > 0.0) cfg.fail("s_values", "s must be <= 0");
  const auto replicates = positive(cfg, "replicates", 100000);
  const auto* finite = std::get_if<FiniteGraph>(&m);
  const bool enumerable = finite && finite->edge_list().edges.size() <= kMaxEnumerationEdges;

  Outcome o;
  o.control = is_control(m);
  auto& t = o.table("genfn.csv", {"p", "k", "n", "s", "t", "estimate", "ci_low", "ci_high", "replicates", "exact"});
  BatchOptions opt;
  opt.witnesses = true;
  for (double p : ps) {
    check_probability_key(cfg, "p", p);
    const auto summary = std::visit(
        [&](const auto& g) {
          const ExplorationBudget budget{std::max<std::uint64_t>(n, g.degree()), kUnbounded};
          return sample_batch(g, p, budget, replicates, seed, workers, opt);
        },
        m);
    for (unsigned k : ks) {
      const auto est = gen_function_from_summary(summary, n, k, s_grid, t_grid);
      for (const auto& pt : est.grid) {
        std::string exact;
        if (enumerable) exact = format_real(enumerate_gen_function(finite->edge_list(), k, n, pt.s, pt.t, p));
        t.add_row() << p << k << n << pt.s << pt.t << pt.estimate << pt.ci_low << pt.ci_high << est.replicates << exact;
      }
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// Russo identity on random small graphs

struct RussoInstance {
  FiniteSubgraph graph;
  std::string functional;  // one | volume | volume2 | radius_ge:r
  std::uint64_t n = 0;
};

inline ClusterFunctional functional_of(const std::string& name) {
  if (name == "one") return [](const ClusterInfo&) { return 1.0; };
  if (name == "volume") return [](const ClusterInfo& c) { return static_cast<double>(c.volume); };
  if (name == "volume2")
    return [](const ClusterInfo& c) { return static_cast<double>(c.volume) * static_cast<double>(c.volume); };
  if (name.rfind("radius_ge:", 0) == 0) {
    const auto r = static_cast<std::uint32_t>(std::stoul(name.substr(10)));
    return [r](const ClusterInfo& c) { return c.radius >= r ? 1.0 : 0.0; };
  }
  throw ConfigurationError("unknown functional '" + name + "'");
}

// A connected simple graph with 1..max_edges edges (random spanning tree plus
// random extra edges), a random functional and a random truncation n.
inline RussoInstance random_russo_instance(std::uint64_t seed, std::uint64_t trial, std::uint32_t max_edges) {
  Xoshiro256 rng(derive_seed(seed, trial, Stream::Instances));
  const auto m = static_cast<std::uint32_t>(1 + rng.below(max_edges));
  auto v = static_cast<std::uint32_t>(2 + rng.below(m));
  while (static_cast<std::uint64_t>(v) * (v - 1) / 2 < m) ++v;
  RussoInstance inst;
  inst.graph.vertex_count = v;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::uint32_t i = 1; i < v; ++i) {
    const auto j = static_cast<std::uint32_t>(rng.below(i));
    inst.graph.edges.emplace_back(j, i);
    seen.emplace(j, i);
  }
  while (inst.graph.edges.size() < m) {
    auto a = static_cast<std::uint32_t>(rng.below(v)), b = static_cast<std::uint32_t>(rng.below(v));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.emplace(a, b).second) inst.graph.edges.emplace_back(a, b);
  }
  static const char* kinds[] = {"one", "volume", "volume2", "radius_ge:"};
  const auto kind = rng.below(4);
  inst.functional = kinds[kind];
  if (kind == 3) inst.functional += std::to_string(1 + rng.below(3));
  inst.n = 1 + rng.below(m);
  return inst;
}

struct RussoRow {
  std::uint64_t trial = 0;
  RussoInstance instance;
  double p = 0.0;
  double derivative = 0.0;
  double u = 0.0;
  double d = 0.0;
  double residual = 0.0;
};

inline std::vector<RussoRow> russo_check(std::uint64_t trials, std::uint32_t max_edges, const std::vector<double>& ps,
                                         std::uint64_t seed) {
  std::vector<RussoRow> out;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const auto inst = random_russo_instance(seed, i, max_edges);
    const auto f = functional_of(inst.functional);
    const auto poly = enumerate_truncated_expectation(inst.graph, f, inst.n).derivative();
    for (double p : ps) {
      RussoRow r{i, inst, p, poly(p), u_term(inst.graph, f, inst.n, p), d_term(inst.graph, f, inst.n, p), 0.0};
      r.residual = std::fabs(r.derivative - (r.u - r.d));
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline constexpr double kRussoTolerance = 1e-9;

inline Outcome run_russo(const Config& cfg, std::uint64_t seed, unsigned) {
  allow_keys(cfg, "russo-check");
  const auto max_edges = cfg.u64("edges", 12);
  if (max_edges < 1 || max_edges > kMaxEnumerationEdges) cfg.fail("edges", "must be 1..20");
  const auto trials = positive(cfg, "trials", 50);
  const auto ps = cfg.has("p") ? cfg.reals("p") : std::vector<double>{0.2, 0.5, 0.8};
  for (double p : ps)
    if (!(p > 0.0 && p < 1.0)) cfg.fail("p", "Russo checks need 0 < p < 1");
  Outcome o;
  auto& t = o.table("russo.csv", {"trial", "vertices", "edges", "functional", "n", "p", "derivative", "u", "d",
                                  "residual"});
  double worst = 0.0;
  for (const auto& r : russo_check(trials, static_cast<std::uint32_t>(max_edges), ps, seed)) {
    t.add_row() << r.trial << r.instance.graph.vertex_count
                << static_cast<std::uint64_t>(r.instance.graph.edges.size()) << r.instance.functional << r.instance.n
                << r.p << r.derivative << r.u << r.d << r.residual;
    worst = std::max(worst, r.residual);
  }
  o.verdicts["max_residual"] = worst;
  o.verdicts["tolerance"] = kRussoTolerance;
  o.verdicts["pass"] = worst < kRussoTolerance;
  if (!(worst < kRussoTolerance)) o.exit_code = kExitOracle;
  return o;
}

// ---------------------------------------------------------------------------
// Engine against the tree oracle

inline constexpr double kCoverageTarget = 0.9;

inline std::vector<std::uint64_t> integer_range(std::uint64_t a, std::uint64_t b) {
  std::vector<std::uint64_t> out;
  for (auto t = a; t <= b; ++t) out.push_back(t);
  return out;
}

inline Outcome run_oracle_compare(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "oracle-compare");
  const auto m = model_of(cfg);
  const auto* tree = tree_of(m);
  if (!tree) cfg.fail("model", "oracle-compare needs a tree model");
  const auto ps = cfg.reals("p");
  const auto volume_t = cfg.has("thresholds") ? cfg.thresholds("thresholds") : integer_range(1, 1000);
  const auto radius_t = cfg.has("radius_thresholds") ? cfg.thresholds("radius_thresholds") : integer_range(1, 100);
  const ExplorationBudget budget{budget_key(cfg, "edge_budget", 50 * volume_t.back()),
                                 budget_key(cfg, "radius_budget", kUnbounded)};
  const auto replicates = positive(cfg, "replicates", 100000);

  Outcome o;
  auto& t = o.table("compare.csv", {"statistic", "p", "threshold", "estimate", "ci_low", "ci_high", "exact", "covered"});
  nlohmann::json coverage = nlohmann::json::object();
  bool pass = true;
  for (double p : ps) {
    check_probability_key(cfg, "p", p);
    const auto s = sample_batch(*tree, p, budget, replicates, seed, workers);
    for (auto stat : {TailStatistic::Volume, TailStatistic::IntrinsicRadius}) {
      const auto& th = is_radius(stat) ? radius_t : volume_t;
      const auto mc = tail_curve(s, stat, th);
      const auto exact = tree_exact_tail_curve(tree->k(), p, stat, th);
      std::size_t covered = 0;
      for (std::size_t i = 0; i < th.size(); ++i) {
        const auto& a = mc.points[i];
        const double x = exact.points[i].estimate;
        const bool in = a.ci_low <= x && x <= a.ci_high;
        covered += in;
        t.add_row() << to_string(stat) << p << a.threshold << a.estimate << a.ci_low << a.ci_high << x << in;
      }
      const double frac = static_cast<double>(covered) / static_cast<double>(th.size());
      coverage[format_real(p)][to_string(stat)] = frac;
      if (frac < kCoverageTarget) pass = false;
    }
  }
  o.verdicts["coverage"] = coverage;
  o.verdicts["target"] = kCoverageTarget;
  o.verdicts["pass"] = pass;
  if (!pass) o.exit_code = kExitOracle;
  return o;
}

// ---------------------------------------------------------------------------
// Diagnostics

inline Outcome run_diagnostics(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "diagnostics");
  const auto m = model_of(cfg);
  const auto ps = cfg.reals("p");
  const auto radii = cfg.has("radii") ? cfg.thresholds("radii") : integer_range(0, 12);
  McOptions mc;
  mc.replicates = positive(cfg, "mc_replicates", mc.replicates);
  mc.edge_budget = budget_key(cfg, "edge_budget", mc.edge_budget);
  mc.seed = seed;
  mc.workers = workers;
  Outcome o;
  o.control = is_control(m);
  auto& t = o.table("diagnostics.csv", {"p", "radius", "norm", "triangle"});
  for (double p : ps) {
    check_probability_key(cfg, "p", p);
    std::visit(
        [&](const auto& g) {
          const auto max_r = static_cast<std::uint32_t>(radii.back());
          const auto tri = triangle_diagram(g, p, max_r, mc);
          for (auto r : radii) {
            const double norm = ball_operator_norm(g, p, static_cast<std::uint32_t>(r), mc);
            t.add_row() << p << r << norm << tri[r];
          }
        },
        m);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Scaling collapse

inline Outcome run_collapse(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "collapse");
  const auto m = model_of(cfg);
  if (cfg.has("p")) cfg.fail("p", "collapse takes an epsilon list");
  const auto points = parameter_points(cfg, m);
  const auto plan = tail_plan(cfg);
  if (plan.statistics.size() != 1) cfg.fail("statistic", "collapse takes one statistic");
  const double pc = resolve_pc(cfg, m);
  const bool normalize = cfg.flag("normalize", true);
  std::optional<std::pair<double, double>> range;
  if (cfg.has("x_min") || cfg.has("x_max"))
    range = std::make_pair(cfg.real("x_min", 0.0), cfg.real("x_max", std::numeric_limits<double>::infinity()));

  const auto curves = tail_curves(cfg, m, points, plan, seed, workers);
  std::vector<TailCurve> flat;
  for (const auto& row : curves) flat.push_back(row.front());
  auto rep = scaling_collapse(flat, pc, normalize, range);
  rep.control = is_control(m);

  Outcome o;
  o.control = rep.control;
  const auto stat = plan.statistics.front();
  auto& t = o.table("collapse.csv", {"statistic", "epsilon", "p", "x", "y"});
  for (const auto& c : flat) {
    const double eps = std::fabs(c.p - pc);
    for (const auto& pt : c.points) {
      const double th = static_cast<double>(pt.threshold);
      const double x = is_radius(stat) ? eps * th : eps * eps * th;
      const double y = is_radius(stat) ? th * pt.estimate : std::sqrt(th) * pt.estimate;
      t.add_row() << to_string(stat) << eps << c.p << x << y;
    }
  }
  auto& s = o.table("collapse_summary.csv", {"statistic", "distance", "x_low", "x_high", "normalized", "control"});
  s.add_row() << to_string(stat) << rep.distance << rep.x_low << rep.x_high << rep.normalized << rep.control;
  o.verdicts["distance"] = rep.distance;
  return o;
}

// ---------------------------------------------------------------------------
// theta(p) scan

inline Outcome run_pc_scan(const Config& cfg, std::uint64_t seed, unsigned workers) {
  allow_keys(cfg, "pc-scan");
  const auto m = model_of(cfg);
  const auto ps = cfg.reals("p");
  const auto replicates = positive(cfg, "replicates", 10000);
  const ExplorationBudget budget{budget_key(cfg, "edge_budget", 10000), budget_key(cfg, "radius_budget", kUnbounded)};
  Outcome o;
  o.control = is_control(m);
  auto& t = o.table("pc_scan.csv", {"p", "theta_hat", "ci_low", "ci_high", "replicates", "budget"});
  for (double p : ps) {
    check_probability_key(cfg, "p", p);
    const auto s = std::visit([&](const auto& g) { return sample_batch(g, p, budget, replicates, seed, workers); }, m);
    const auto finite = s.volume.count_at_least({0}, Status::Finite).front();
    const auto censored = s.replicates - finite;
    const auto ci = wilson_interval(censored, s.replicates);
    t.add_row() << p << static_cast<double>(censored) / static_cast<double>(s.replicates) << ci.low << ci.high
                << s.replicates << budget_text(budget.max_touched_edges);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Runner

using ExperimentFn = std::function<Outcome(const Config&, std::uint64_t, unsigned)>;

inline const std::map<std::string, ExperimentFn>& experiment_table() {
  static const std::map<std::string, ExperimentFn> table = {
      {"tail", run_tail},         {"zeta", run_zeta},
      {"moments", run_moments},   {"exponents", run_exponents},
      {"skinny", run_skinny},     {"genfn", run_genfn},
      {"russo-check", run_russo}, {"oracle-compare", run_oracle_compare},
      {"diagnostics", run_diagnostics}, {"collapse", run_collapse},
      {"pc-scan", run_pc_scan}};
  return table;
}

struct RunReport {
  int exit_code = kExitOk;
  std::filesystem::path manifest;
  nlohmann::json body;
};

// Runs one experiment and writes its CSVs and manifest.json into `out`.
// Configuration errors propagate; estimator budget and window errors are
// recorded in the manifest and give exit code 3.
inline RunReport run_experiment(const Config& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto kind = cfg.str("kind");
  const auto& table = experiment_table();
  const auto it = table.find(kind);
  if (it == table.end()) cfg.fail("kind", "unknown experiment kind '" + kind + "'");
  const auto seed = cfg.u64("seed");
  const auto workers = positive(cfg, "workers", 1);
  if (workers > 256) cfg.fail("workers", "at most 256 workers");
  const std::filesystem::path out = cfg.str("out", "results");

  Outcome o;
  nlohmann::json errors = nlohmann::json::array();
  auto record = [&](const char* type, const std::exception& e) {
    errors.push_back({{"type", type}, {"message", e.what()}});
    o.tables.clear();
    o.exit_code = kExitEstimator;
  };
  try {
    o = it->second(cfg, seed, static_cast<unsigned>(workers));
  } catch (const BudgetError& e) {
    record("budget", e);
  } catch (const WindowError& e) {
    record("window", e);
  } catch (const RangeError& e) {
    record("range", e);
  } catch (const DataError& e) {
    record("data", e);
  } catch (const SizeError& e) {
    record("size", e);
  }

  Manifest man;
  man.body["artifact_version"] = kArtifactVersion;
  man.body["kind"] = kind;
  man.body["config"] = cfg.values();
  man.body["outputs"] = nlohmann::json::array();
  for (const auto& [file, t] : o.tables) {
    write_atomic(out / file, t.text());
    man.add_output(file, t);
  }
  man.body["verdicts"] = o.verdicts;
  man.body["errors"] = errors;
  man.body["control"] = o.control;
  man.body["exit_code"] = o.exit_code;
  man.body["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomic(out / "manifest.json", man.dump());
  return {o.exit_code, out / "manifest.json", man.body};
}

}  // namespace percolab::cli
