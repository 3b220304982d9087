#pragma once

// Estimators over SampleSummary data: tail curves with Wilson intervals,
// rate and exponent fits, truncated moments, skinny-cluster and
// generating-function estimates, and scaling-collapse distances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "percolab/engine.hpp"
#include "percolab/errors.hpp"
#include "percolab/exact_oracles.hpp"
#include "percolab/rng.hpp"

namespace percolab {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for x successes in n trials.
inline Interval wilson_interval(std::uint64_t x, std::uint64_t n, double z = kZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(x) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (ph + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {x == 0 ? 0.0 : std::max(0.0, center - half), x == n ? 1.0 : std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Tail curves

enum class TailStatistic { Volume, TouchedEdges, IntrinsicRadius, ExtrinsicRadius };

inline const char* to_string(TailStatistic s) {
  switch (s) {
    case TailStatistic::Volume: return "volume";
    case TailStatistic::TouchedEdges: return "touched_edges";
    case TailStatistic::IntrinsicRadius: return "intrinsic_radius";
    case TailStatistic::ExtrinsicRadius: return "extrinsic_radius";
  }
  return "?";
}

inline TailStatistic parse_tail_statistic(const std::string& s) {
  if (s == "volume") return TailStatistic::Volume;
  if (s == "touched_edges") return TailStatistic::TouchedEdges;
  if (s == "intrinsic_radius") return TailStatistic::IntrinsicRadius;
  if (s == "extrinsic_radius") return TailStatistic::ExtrinsicRadius;
  throw ConfigurationError("unknown statistic '" + s + "'");
}

inline bool is_radius(TailStatistic s) {
  return s == TailStatistic::IntrinsicRadius || s == TailStatistic::ExtrinsicRadius;
}

struct TailPoint {
  std::uint64_t threshold = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t count = 0;
};

struct TailCurve {
  TailStatistic statistic = TailStatistic::Volume;
  double p = 0.0;
  std::uint64_t replicates = 0;  // 0 for exact curves
  ExplorationBudget budget;      // finiteness rule: Finite means E_v <= budget
  std::vector<TailPoint> points;
  // Oracle-quantified downward bias from censoring finite clusters, when known.
  std::optional<double> censoring_bias;
};

inline const StatusHistogram& histogram_for(const SampleSummary& s, TailStatistic stat) {
  switch (stat) {
    case TailStatistic::Volume: return s.volume;
    case TailStatistic::TouchedEdges: return s.touched;
    case TailStatistic::IntrinsicRadius: return s.intrinsic;
    case TailStatistic::ExtrinsicRadius: return s.extrinsic;
  }
  return s.volume;
}

inline void check_thresholds(const std::vector<std::uint64_t>& t) {
  if (t.empty()) throw ConfigurationError("no thresholds");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1]) throw ConfigurationError("thresholds must be strictly increasing");
}

// Refuses thresholds close enough to the budget for censoring to bias the
// "< infinity" classification: volume/edges need t <= B/50, radii t <= R_B/10.
inline void check_budget(TailStatistic stat, const ExplorationBudget& b, std::uint64_t max_threshold) {
  if (is_radius(stat)) {
    if (b.max_intrinsic_radius != kUnbounded && max_threshold * 10 > b.max_intrinsic_radius)
      throw BudgetError("radius threshold " + std::to_string(max_threshold) + " exceeds radius budget / 10");
  } else if (b.max_touched_edges != kUnbounded && max_threshold * 50 > b.max_touched_edges) {
    throw BudgetError("threshold " + std::to_string(max_threshold) + " exceeds edge budget / 50");
  }
}

// point(t) = #{samples with statistic >= t and status Finite} / replicates.
inline TailCurve tail_curve(const SampleSummary& s, TailStatistic stat, const std::vector<std::uint64_t>& thresholds) {
  check_thresholds(thresholds);
  check_budget(stat, s.budget, thresholds.back());
  if (s.replicates == 0) throw DataError("empty summary");
  TailCurve c;
  c.statistic = stat;
  c.p = s.p;
  c.replicates = s.replicates;
  c.budget = s.budget;
  const auto counts = histogram_for(s, stat).count_at_least(thresholds, Status::Finite);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const auto ci = wilson_interval(counts[i], s.replicates);
    c.points.push_back({thresholds[i], static_cast<double>(counts[i]) / s.replicates, ci.low, ci.high, counts[i]});
  }
  return c;
}

// A curve of known probabilities (zero-width intervals).
inline TailCurve exact_tail_curve(TailStatistic stat, double p, const std::vector<std::uint64_t>& thresholds,
                                  const std::vector<double>& values) {
  check_thresholds(thresholds);
  if (thresholds.size() != values.size()) throw ConfigurationError("thresholds and values differ in length");
  TailCurve c;
  c.statistic = stat;
  c.p = p;
  for (std::size_t i = 0; i < thresholds.size(); ++i) c.points.push_back({thresholds[i], values[i], values[i], values[i], 0});
  return c;
}

// P_p(E_v > B, |K| < inf) on RegularTree(k): the mass the finiteness rule
// misclassifies. Beyond the tabulated range the tail is continued with its
// n^{-1/2} exp(-zeta n) form.
inline double tree_censoring_bias(unsigned k, double p, std::uint64_t edge_budget) {
  if (edge_budget == kUnbounded) return 0.0;
  // E_v = (k-1)(|K|-1) + k > B  <=>  |K| >= n_B.
  const std::uint64_t n_b = edge_budget < k ? 1 : (edge_budget - k) / (k - 1) + 2;
  if (n_b <= kMaxPmfLength) return finite_volume_tail(k, p, n_b).back();
  const auto tail = finite_volume_tail(k, p, kMaxPmfLength).back();
  const double zeta = p == critical_point(k) ? 0.0 : zeta_exact(k, p);
  const double n0 = static_cast<double>(kMaxPmfLength), n = static_cast<double>(n_b);
  return tail * std::sqrt(n0 / n) * std::exp(-zeta * (n - n0));
}

// Exact finite-cluster tail curve on RegularTree(k). Touched edges map to
// volume through E_v = (k-1)(|K|-1) + k.
inline TailCurve tree_exact_tail_curve(unsigned k, double p, TailStatistic stat,
                                       const std::vector<std::uint64_t>& thresholds) {
  check_thresholds(thresholds);
  std::vector<double> values;
  if (is_radius(stat)) {
    const auto tail = finite_radius_tail(k, p, thresholds.back());
    for (auto t : thresholds) values.push_back(tail[t]);
  } else {
    auto volume_of = [&](std::uint64_t t) -> std::uint64_t {
      if (stat == TailStatistic::Volume) return std::max<std::uint64_t>(t, 1);
      if (t <= k) return 1;
      return (t - k + (k - 1) - 1) / (k - 1) + 1;  // smallest n with (k-1)(n-1)+k >= t
    };
    const auto tail = finite_volume_tail(k, p, volume_of(thresholds.back()));
    for (auto t : thresholds) values.push_back(tail[volume_of(t) - 1]);
  }
  return exact_tail_curve(stat, p, thresholds, values);
}

// ---------------------------------------------------------------------------
// Fits

struct ExponentFit {
  std::string name;
  double value = 0.0;
  double standard_error = 0.0;
  double window_low = 0.0;   // fit window in threshold (or epsilon) units
  double window_high = 0.0;
  std::size_t points = 0;
  double r_squared = 0.0;
  double max_deviation = 0.0;  // largest absolute residual in log space
  double intercept = 0.0;
  std::optional<double> power;  // fitted prefactor power when it is free
};

namespace detail {

struct WlsResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  double r_squared = 0.0;
  double max_deviation = 0.0;
};

// Weighted least squares with the covariance scaled by the residual variance.
inline WlsResult weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::Index n = x.rows(), k = x.cols();
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * x;
  const Eigen::VectorXd yw = sw.cwiseProduct(y);
  WlsResult r;
  r.beta = xw.colPivHouseholderQr().solve(yw);
  const Eigen::VectorXd res = y - x * r.beta;
  const double rss = (sw.cwiseProduct(res)).squaredNorm();
  const double wsum = w.sum();
  const double ybar = w.dot(y) / wsum;
  const double tss = (sw.cwiseProduct((y.array() - ybar).matrix())).squaredNorm();
  r.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  r.max_deviation = res.cwiseAbs().maxCoeff();
  const double sigma2 = n > k ? rss / static_cast<double>(n - k) : 0.0;
  r.covariance = sigma2 * (xw.transpose() * xw).inverse();
  return r;
}

}  // namespace detail

// Prefactor in log(P) = a + log(prefactor) - zeta * t:
//   Theorem:   t^{-1/2} for volume and edges, t^{-1} for radii (fixed);
//   FreePower: t^{c} with c fitted alongside the rate.
enum class Prefactor { Theorem, FreePower };

struct FitWindow {
  double p_c = 0.5;
  // Window in scaled units: t * |p - p_c|^2 (volume, edges) or t * |p - p_c| (radii).
  double scaled_min = 4.0;
  double scaled_max = std::numeric_limits<double>::infinity();
  std::optional<std::uint64_t> min_threshold;
  std::optional<std::uint64_t> max_threshold;
  Prefactor prefactor = Prefactor::Theorem;
};

inline double scaled_threshold(TailStatistic stat, double t, double eps) {
  return is_radius(stat) ? t * eps : t * eps * eps;
}

inline constexpr std::size_t kMinFitPoints = 8;

// WLS fit of the exponential rate: slope of log(P t^beta) against t is -zeta.
// Weights are inverse squared relative CI widths (uniform for exact curves).
inline ExponentFit zeta_fit(const TailCurve& curve, const FitWindow& window = {}) {
  const double eps = std::fabs(curve.p - window.p_c);
  const bool critical = eps < 1e-12;
  if (critical && !window.min_threshold && !window.max_threshold)
    throw WindowError("at p_c the scaled window is empty; give explicit threshold bounds");
  const double beta = is_radius(curve.statistic) ? 1.0 : 0.5;

  std::vector<const TailPoint*> use;
  for (const auto& pt : curve.points) {
    if (!critical) {
      const double x = scaled_threshold(curve.statistic, static_cast<double>(pt.threshold), eps);
      if (x < window.scaled_min || x > window.scaled_max) continue;
    }
    if (window.min_threshold && pt.threshold < *window.min_threshold) continue;
    if (window.max_threshold && pt.threshold > *window.max_threshold) continue;
    if (!(pt.estimate > 0.0)) continue;
    use.push_back(&pt);
  }
  if (use.size() < kMinFitPoints)
    throw WindowError("only " + std::to_string(use.size()) + " usable thresholds in the fit window (need 8)");

  const bool free_power = window.prefactor == Prefactor::FreePower;
  const Eigen::Index n = static_cast<Eigen::Index>(use.size());
  Eigen::MatrixXd x(n, free_power ? 3 : 2);
  Eigen::VectorXd y(n), w(n);
  bool any_width = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = *use[static_cast<std::size_t>(i)];
    const double t = static_cast<double>(pt.threshold);
    x(i, 0) = 1.0;
    x(i, 1) = -t;
    if (free_power) x(i, 2) = std::log(t);
    y(i) = std::log(pt.estimate) + (free_power ? 0.0 : beta * std::log(t));
    const double rel = (pt.ci_high - pt.ci_low) / pt.estimate;
    w(i) = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
    any_width = any_width || rel > 0.0;
  }
  if (!any_width) w.setOnes();
  const auto r = detail::weighted_least_squares(x, y, w);

  ExponentFit f;
  f.name = "zeta";
  f.value = r.beta(1);
  f.standard_error = std::sqrt(std::max(0.0, r.covariance(1, 1)));
  f.window_low = static_cast<double>(use.front()->threshold);
  f.window_high = static_cast<double>(use.back()->threshold);
  f.points = use.size();
  f.r_squared = r.r_squared;
  f.max_deviation = r.max_deviation;
  f.intercept = r.beta(0);
  if (free_power) f.power = r.beta(2);
  return f;
}

// Log-log slope of r P(R >= r) style data at p_c: P ~ t^{-value}.
inline ExponentFit one_arm_fit(const TailCurve& curve, std::uint64_t min_threshold, std::uint64_t max_threshold) {
  std::vector<const TailPoint*> use;
  for (const auto& pt : curve.points)
    if (pt.threshold >= min_threshold && pt.threshold <= max_threshold && pt.estimate > 0.0) use.push_back(&pt);
  if (use.size() < 3) throw WindowError("one-arm fit needs at least 3 positive points");
  const Eigen::Index n = static_cast<Eigen::Index>(use.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = *use[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = -std::log(static_cast<double>(pt.threshold));
    y(i) = std::log(pt.estimate);
    const double rel = (pt.ci_high - pt.ci_low) / pt.estimate;
    w(i) = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
  }
  const auto r = detail::weighted_least_squares(x, y, w);
  ExponentFit f;
  f.name = "one_arm_exponent";
  f.value = r.beta(1);
  f.standard_error = std::sqrt(std::max(0.0, r.covariance(1, 1)));
  f.window_low = static_cast<double>(use.front()->threshold);
  f.window_high = static_cast<double>(use.back()->threshold);
  f.points = use.size();
  f.r_squared = r.r_squared;
  f.max_deviation = r.max_deviation;
  f.intercept = r.beta(0);
  return f;
}

// ---------------------------------------------------------------------------
// Truncated moments

struct MomentEstimate {
  unsigned k = 0;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double standard_error = 0.0;
};

inline constexpr unsigned kMaxMomentPower = 3;
inline constexpr unsigned kBootstrapResamples = 1000;

enum class MomentNormalization {
  Replicates,  // E_p[|K|^k 1(|K| < inf)]
  FiniteMass,  // E_p[|K|^k | |K| < inf]
};

namespace detail {

struct MomentBins {
  std::vector<double> values;
  std::vector<std::uint64_t> counts;
  std::uint64_t other = 0;  // non-Finite samples
};

inline MomentBins moment_bins(const SampleSummary& s) {
  MomentBins b;
  std::uint64_t finite = 0;
  for (const auto& [v, row] : s.volume.rows()) {
    const auto c = row[static_cast<std::size_t>(Status::Finite)];
    if (c == 0) continue;
    b.values.push_back(static_cast<double>(v));
    b.counts.push_back(c);
    finite += c;
  }
  b.other = s.replicates - finite;
  return b;
}

inline std::vector<double> moments_of(const MomentBins& b, const std::vector<std::uint64_t>& counts,
                                      std::uint64_t other, unsigned k_max, MomentNormalization norm) {
  std::vector<long double> sums(k_max + 1, 0.0L);
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    long double x = counts[i];
    for (unsigned j = 0; j <= k_max; ++j) {
      sums[j] += x;
      x *= b.values[i];
    }
  }
  const long double total = sums[0] + other;
  const long double denom = norm == MomentNormalization::Replicates ? total : sums[0];
  std::vector<double> out;
  for (unsigned j = 1; j <= k_max; ++j) out.push_back(denom > 0 ? static_cast<double>(sums[j] / denom) : 0.0);
  return out;
}

// One multinomial resample of the histogram, drawn bin by bin as
// conditional binomials.
inline std::pair<std::vector<std::uint64_t>, std::uint64_t> multinomial_resample(const MomentBins& b,
                                                                                   std::uint64_t n, Xoshiro256& rng) {
  std::vector<std::uint64_t> out(b.counts.size());
  std::uint64_t remaining_n = n;
  std::uint64_t remaining_mass = n;
  for (std::size_t i = 0; i < b.counts.size(); ++i) {
    if (remaining_n == 0) break;
    const double q = static_cast<double>(b.counts[i]) / static_cast<double>(remaining_mass);
    std::binomial_distribution<std::uint64_t> d(remaining_n, std::min(1.0, q));
    out[i] = d(rng);
    remaining_n -= out[i];
    remaining_mass -= b.counts[i];
  }
  return {out, remaining_n};
}

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

}  // namespace detail

// Empirical E[|K|^k 1(Finite)] for k = 1..k_max with multinomial-bootstrap
// percentile intervals. Resample b uses the stream derive_seed(seed, b, Bootstrap).
inline std::vector<MomentEstimate> truncated_moments(const SampleSummary& s, unsigned k_max, std::uint64_t seed,
                                                     MomentNormalization norm = MomentNormalization::Replicates,
                                                     unsigned resamples = kBootstrapResamples) {
  if (k_max < 1 || k_max > kMaxMomentPower) throw ConfigurationError("moment order must be 1..3");
  if (s.replicates == 0) throw DataError("empty summary");
  const auto bins = detail::moment_bins(s);
  const auto point = detail::moments_of(bins, bins.counts, bins.other, k_max, norm);
  std::vector<std::vector<double>> boot(k_max);
  for (unsigned b = 0; b < resamples; ++b) {
    Xoshiro256 rng(derive_seed(seed, b, Stream::Bootstrap));
    const auto [counts, other] = detail::multinomial_resample(bins, s.replicates, rng);
    const auto m = detail::moments_of(bins, counts, other, k_max, norm);
    for (unsigned j = 0; j < k_max; ++j) boot[j].push_back(m[j]);
  }
  std::vector<MomentEstimate> out;
  for (unsigned j = 0; j < k_max; ++j) {
    MomentEstimate e;
    e.k = j + 1;
    e.value = point[j];
    if (resamples > 1) {
      e.ci_low = detail::quantile(boot[j], 0.025);
      e.ci_high = detail::quantile(boot[j], 0.975);
      const double mean = std::accumulate(boot[j].begin(), boot[j].end(), 0.0) / resamples;
      double ss = 0.0;
      for (double v : boot[j]) ss += (v - mean) * (v - mean);
      e.standard_error = std::sqrt(ss / (resamples - 1));
    } else {
      e.ci_low = e.ci_high = e.value;
    }
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gamma' and Delta'

enum class Side { Sub, Super };

inline const char* to_string(Side s) { return s == Side::Sub ? "sub" : "super"; }

struct MomentRow {
  double epsilon = 0.0;
  std::vector<double> moments;                  // k = 1..K
  std::vector<Interval> intervals;              // optional, same length
};

// Joint regression log M_k(eps) = a_k - (gamma' + (k-1) Delta') log eps.
inline std::pair<ExponentFit, ExponentFit> exponent_fit_gamma_delta(std::vector<MomentRow> table, Side side,
                                                                    std::uint64_t seed = 0,
                                                                    unsigned resamples = kBootstrapResamples) {
  if (table.size() < 4) throw ConfigurationError("need at least 4 epsilon values");
  const std::size_t kk = table.front().moments.size();
  if (kk < 2 || kk > kMaxMomentPower) throw ConfigurationError("need moments k = 1..K with K in {2, 3}");
  std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  for (const auto& row : table) {
    if (!(row.epsilon > 0.0)) throw DataError("epsilon must be positive");
    if (row.moments.size() != kk) throw DataError("ragged moment table");
    for (double m : row.moments)
      if (!(m > 0.0) || !std::isfinite(m)) throw DataError("moments must be positive and finite");
  }
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].epsilon == table[i - 1].epsilon) throw DataError("repeated epsilon");
    for (std::size_t j = 0; j < kk; ++j)
      if (table[i].moments[j] >= table[i - 1].moments[j])
        throw DataError("moment table is not monotone in epsilon");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(table.size() * kk);
  const Eigen::Index cols = static_cast<Eigen::Index>(kk + 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, cols);
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < kk; ++j) {
      const auto row = static_cast<Eigen::Index>(i * kk + j);
      const double le = std::log(table[i].epsilon);
      x(row, static_cast<Eigen::Index>(j)) = 1.0;
      x(row, cols - 2) = -le;
      x(row, cols - 1) = -static_cast<double>(j) * le;
    }
  auto response = [&](auto&& moment) {
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < table.size(); ++i)
      for (std::size_t j = 0; j < kk; ++j) y(static_cast<Eigen::Index>(i * kk + j)) = std::log(moment(i, j));
    return y;
  };
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  const auto fit = detail::weighted_least_squares(
      x, response([&](std::size_t i, std::size_t j) { return table[i].moments[j]; }), w);

  double se_gamma = std::sqrt(std::max(0.0, fit.covariance(cols - 2, cols - 2)));
  double se_delta = std::sqrt(std::max(0.0, fit.covariance(cols - 1, cols - 1)));
  const bool have_ci = std::all_of(table.begin(), table.end(), [&](const auto& r) { return r.intervals.size() == kk; });
  if (have_ci && resamples > 1) {
    // Parametric bootstrap: each moment log-normal with sd from its CI width.
    std::vector<double> g, d;
    for (unsigned b = 0; b < resamples; ++b) {
      Xoshiro256 rng(derive_seed(seed, b, Stream::Bootstrap));
      std::normal_distribution<double> z;
      const auto y = response([&](std::size_t i, std::size_t j) {
        const auto& ci = table[i].intervals[j];
        const double sd = ci.low > 0.0 ? (std::log(ci.high) - std::log(ci.low)) / (2.0 * kZ95) : 0.0;
        return table[i].moments[j] * std::exp(sd * z(rng));
      });
      const auto bf = detail::weighted_least_squares(x, y, w);
      g.push_back(bf.beta(cols - 2));
      d.push_back(bf.beta(cols - 1));
    }
    auto sd = [](const std::vector<double>& v) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double e : v) ss += (e - m) * (e - m);
      return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    se_gamma = std::max(se_gamma, sd(g));
    se_delta = std::max(se_delta, sd(d));
  }

  auto make = [&](const char* name, Eigen::Index col, double se) {
    ExponentFit f;
    f.name = std::string(name) + (side == Side::Sub ? "" : "_super");
    f.value = fit.beta(col);
    f.standard_error = se;
    f.window_low = table.front().epsilon;
    f.window_high = table.back().epsilon;
    f.points = static_cast<std::size_t>(n);
    f.r_squared = fit.r_squared;
    f.max_deviation = fit.max_deviation;
    return f;
  };
  return {make("gamma_prime", cols - 2, se_gamma), make("delta_prime", cols - 1, se_delta)};
}

// ---------------------------------------------------------------------------
// Skinny clusters

struct ConditionalSkinny {
  double s = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
  std::uint64_t unknown = 0;  // censored before reaching radius r
};

struct SkinnyEstimate {
  double p = 0.0;
  std::uint64_t r = 0;
  double alpha = 0.0;
  double estimate = 0.0;  // P(r <= R < inf, E_v <= alpha R)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t count = 0;
  std::uint64_t replicates = 0;
  std::vector<ConditionalSkinny> conditional;  // P(E_v <= r^2/s | R >= r)
};

inline void check_skinny_grid(const SkinnyGrid& g) {
  for (auto r : g.radii)
    if (r < 1) throw ConfigurationError("skinny radius must be >= 1");
  for (auto a : g.alphas)
    if (!(a >= 1.0)) throw ConfigurationError("skinny alpha must be >= 1");
  for (auto s : g.s_values)
    if (!(s > 0.0)) throw ConfigurationError("skinny s must be positive");
}

// One estimate per (r, alpha) in the summary's grid, r-major.
inline std::vector<SkinnyEstimate> skinny_estimates(const SampleSummary& s) {
  std::vector<SkinnyEstimate> out;
  for (std::size_t i = 0; i < s.skinny.radii.size(); ++i) {
    std::vector<ConditionalSkinny> cond;
    for (std::size_t j = 0; j < s.skinny.s_values.size(); ++j) {
      const auto& cc = s.conditional_counts[i][j];
      ConditionalSkinny c;
      c.s = s.skinny.s_values[j];
      c.numerator = cc.numerator;
      c.denominator = cc.denominator;
      c.unknown = cc.unknown;
      c.estimate = cc.denominator ? static_cast<double>(cc.numerator) / cc.denominator : 0.0;
      const auto ci = wilson_interval(cc.numerator, cc.denominator);
      c.ci_low = ci.low;
      c.ci_high = ci.high;
      cond.push_back(c);
    }
    for (std::size_t j = 0; j < s.skinny.alphas.size(); ++j) {
      SkinnyEstimate e;
      e.p = s.p;
      e.r = s.skinny.radii[i];
      e.alpha = s.skinny.alphas[j];
      e.count = s.skinny_counts[i][j];
      e.replicates = s.replicates;
      e.estimate = static_cast<double>(e.count) / s.replicates;
      const auto ci = wilson_interval(e.count, s.replicates);
      e.ci_low = ci.low;
      e.ci_high = ci.high;
      e.conditional = cond;
      out.push_back(e);
    }
  }
  return out;
}

template <GraphModel G>
SkinnyEstimate skinny_probability(const G& g, double p, std::uint64_t r, double alpha, std::uint64_t replicates,
                                  std::uint64_t seed, const ExplorationBudget& budget,
                                  const std::vector<double>& s_grid = {}, unsigned workers = 1) {
  BatchOptions opt;
  opt.skinny = {{r}, {alpha}, s_grid};
  check_skinny_grid(opt.skinny);
  const auto s = sample_batch(g, p, budget, replicates, seed, workers, opt);
  return skinny_estimates(s).front();
}

// ---------------------------------------------------------------------------
// Generating function G_{k,n}(s,t)

struct GenFunctionPoint {
  double s = 0.0;
  double t = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct GenFunctionEstimate {
  unsigned k = 0;
  std::uint64_t n = 0;
  std::uint64_t replicates = 0;
  std::vector<GenFunctionPoint> grid;  // s-major
};

// Per Finite replicate with E_v <= n the summand is
//   |K|^k exp(s E_v) * mean over witness k-subsets of exp(t Br),
// and every other replicate contributes 0. Witnesses are iid uniform, so the
// k-subsets of distinct slots are uniform k-tuples and the mean is unbiased.
inline GenFunctionEstimate gen_function_from_summary(const SampleSummary& s, std::uint64_t n, unsigned k,
                                                     const std::vector<double>& s_grid,
                                                     const std::vector<double>& t_grid) {
  if (k > kMaxWitnesses - 1 || k < 1) throw ConfigurationError("gen function tuple size must be 1, 2 or 3");
  for (double sv : s_grid)
    if (sv > 0.0) throw ConfigurationError("gen function needs s <= 0");
  if (s.budget.max_touched_edges != kUnbounded && n > s.budget.max_touched_edges)
    throw ConfigurationError("truncation n exceeds the edge budget");
  const auto finite = s.volume.count_at_least({0}, Status::Finite).front();
  if (finite > 0 && s.witness_records.empty()) throw ConfigurationError("summary has no witness records");
  const auto [first, count] = witness_subset_range(k);
  GenFunctionEstimate out;
  out.k = k;
  out.n = n;
  out.replicates = s.replicates;
  const double nn = static_cast<double>(s.replicates);
  for (double sv : s_grid)
    for (double tv : t_grid) {
      CompensatedSum sum, sum2;
      for (const auto& w : s.witness_records) {
        if (w.touched_edges > n) continue;
        double avg = 0.0;
        for (std::size_t i = first; i < first + count; ++i) avg += std::exp(tv * w.br[i]);
        avg /= static_cast<double>(count);
        const double x = std::pow(static_cast<double>(w.volume), static_cast<double>(k)) *
                         std::exp(sv * static_cast<double>(w.touched_edges)) * avg;
        sum.add(x);
        sum2.add(x * x);
      }
      const double mean = sum.value() / nn;
      const double var = nn > 1 ? std::max(0.0, (sum2.value() - nn * mean * mean) / (nn - 1.0)) : 0.0;
      const double half = kZ95 * std::sqrt(var / nn);
      out.grid.push_back({sv, tv, mean, std::max(0.0, mean - half), mean + half});
    }
  return out;
}

template <GraphModel G>
GenFunctionEstimate gen_function_estimate(const G& g, double p, std::uint64_t n, unsigned k,
                                          const std::vector<double>& s_grid, const std::vector<double>& t_grid,
                                          std::uint64_t replicates, std::uint64_t seed, unsigned workers = 1) {
  if (k < 1 || k > 3) throw ConfigurationError("gen function tuple size must be 1, 2 or 3");
  ExplorationBudget budget{std::max<std::uint64_t>(n, g.degree()), kUnbounded};
  BatchOptions opt;
  opt.witnesses = true;
  const auto s = sample_batch(g, p, budget, replicates, seed, workers, opt);
  return gen_function_from_summary(s, n, k, s_grid, t_grid);
}

// ---------------------------------------------------------------------------
// Scaling collapse

struct CollapseReport {
  double distance = 0.0;  // max over pairs of the sup distance on the overlap
  double x_low = 0.0;
  double x_high = 0.0;
  std::vector<double> epsilons;
  std::vector<std::vector<double>> pairwise;
  bool normalized = false;
  bool control = false;
};

namespace detail {

struct Rescaled {
  std::vector<double> x, y;

  double at(double v) const {
    auto it = std::lower_bound(x.begin(), x.end(), v);
    if (it == x.end()) return y.back();
    const auto i = static_cast<std::size_t>(it - x.begin());
    if (i == 0 || x[i] == v) return y[i];
    const double f = (v - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] * (1.0 - f) + y[i] * f;
  }
};

}  // namespace detail

// Volume and edge curves map to (eps^2 n, n^{1/2} P), radius curves to
// (eps r, r P). With `normalize`, each rescaled curve is divided by its value
// at x = 1. Distances are sup |y_i - y_j| over the grid of all sample x in
// the common range, with linear interpolation between samples.
inline CollapseReport scaling_collapse(const std::vector<TailCurve>& curves, double p_c, bool normalize,
                                       std::optional<std::pair<double, double>> x_range = std::nullopt) {
  if (curves.size() < 2) throw ConfigurationError("collapse needs at least 2 curves");
  const bool radius = is_radius(curves.front().statistic);
  for (const auto& c : curves)
    if (is_radius(c.statistic) != radius) throw ConfigurationError("cannot collapse volume and radius curves together");

  CollapseReport rep;
  rep.normalized = normalize;
  std::vector<detail::Rescaled> rs;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    const double eps = std::fabs(c.p - p_c);
    if (!(eps > 0.0)) throw RangeError("collapse needs p != p_c");
    rep.epsilons.push_back(eps);
    detail::Rescaled r;
    for (const auto& pt : c.points) {
      const double t = static_cast<double>(pt.threshold);
      r.x.push_back(radius ? eps * t : eps * eps * t);
      r.y.push_back(radius ? t * pt.estimate : std::sqrt(t) * pt.estimate);
    }
    if (r.x.empty()) throw RangeError("empty curve");
    lo = std::max(lo, r.x.front());
    hi = std::min(hi, r.x.back());
    rs.push_back(std::move(r));
  }
  if (x_range) {
    lo = std::max(lo, x_range->first);
    hi = std::min(hi, x_range->second);
  }
  if (!(lo < hi)) throw RangeError("rescaled curves do not overlap");
  if (normalize) {
    for (auto& r : rs) {
      if (r.x.front() > 1.0 || r.x.back() < 1.0) throw RangeError("x = 1 outside a curve's range");
      const double y1 = r.at(1.0);
      if (!(y1 > 0.0)) throw RangeError("curve vanishes at x = 1");
      for (auto& y : r.y) y /= y1;
    }
  }
  std::vector<double> grid;
  for (const auto& r : rs)
    for (double v : r.x)
      if (v >= lo && v <= hi) grid.push_back(v);
  grid.push_back(lo);
  grid.push_back(hi);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  rep.x_low = lo;
  rep.x_high = hi;
  rep.pairwise.assign(rs.size(), std::vector<double>(rs.size(), 0.0));
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      double d = 0.0;
      for (double v : grid) d = std::max(d, std::fabs(rs[i].at(v) - rs[j].at(v)));
      rep.pairwise[i][j] = rep.pairwise[j][i] = d;
      rep.distance = std::max(rep.distance, d);
    }
  return rep;
}

}  // namespace percolab
