#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ascma/errors.hpp"
#include "ascma/landscapes.hpp"
#include "ascma/trace.hpp"

namespace ascma {

inline constexpr double coarse_threshold = 0.20;
inline constexpr double fine_threshold = 0.05;
inline constexpr double fine_reliability_cutoff_pct = 90.0;

namespace detail {

inline double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

inline double sample_std_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace detail

// --- rank correlation -------------------------------------------------------

// 1-based ranks with ties replaced by their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Spearman's rank correlation (tie-aware: Pearson on average ranks). Returns
// nothing when either input is constant, where the correlation is undefined.
inline std::optional<double> spearman_rho(const std::vector<double>& a,
                                          const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidConfigError("spearman_rho: length mismatch");
  if (a.size() < 2) throw InsufficientDataError("spearman_rho: need at least 2 observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = detail::mean_of(ra);
  const double mb = detail::mean_of(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

// --- convergence ------------------------------------------------------------

struct ConvergenceResult {
  bool converged = false;
  double time_minutes = 0.0;          // end of optimization when not converged
  std::size_t trajectory_index = 0;   // index of the convergence point when converged
};

// Earliest generation from which the mean trajectory reaches and stays at or
// below the given cost limit for the remainder of the run. Runs that never
// do are assigned the end time of optimization.
inline ConvergenceResult detect_convergence_below(const RunTrace& trace, double cost_limit,
                                                  double budget_end_minutes) {
  if (trace.mean_trajectory.empty())
    throw InsufficientDataError("detect_convergence: empty trajectory");
  const auto& traj = trace.mean_trajectory;
  std::size_t start = traj.size();
  for (std::size_t i = traj.size(); i-- > 0;) {
    if (traj[i].true_cost <= cost_limit)
      start = i;
    else
      break;
  }
  if (start == traj.size()) return {false, budget_end_minutes, traj.size()};
  return {true, traj[start].elapsed_minutes, start};
}

// Stay-within convergence against a limit of (1 + threshold) * y_star.
inline ConvergenceResult detect_convergence(const RunTrace& trace, double y_star,
                                            double threshold, double budget_end_minutes) {
  return detect_convergence_below(trace, (1.0 + threshold) * y_star, budget_end_minutes);
}

// How the convergence bands are anchored. The threshold fraction either
// multiplies the true minimum directly, or the run's initialization cost
// (the scale the benchmark figures are normalized to): limit = y* + thr * ref.
enum class ThresholdReference { optimum, initialization };

// Total true cost incurred up to and including the convergence generation
// (every condition when the run never converged), weighted by how long each
// condition was held: the energy spent on a condition is its cost times its
// duration.
inline double cumulative_cost_to(const RunTrace& trace, const ConvergenceResult& conv) {
  const int generation_limit =
      conv.converged ? static_cast<int>(conv.trajectory_index) + 1
                     : std::numeric_limits<int>::max();
  double sum = 0.0;
  for (const auto& rec : trace.records)
    if (rec.generation <= generation_limit) sum += rec.y_true * rec.t_minutes;
  return sum;
}

// --- per-strategy aggregates --------------------------------------------------

struct ThresholdAggregate {
  std::vector<double> times;  // per run; budget end for unconverged runs
  std::vector<double> costs;
  int n_converged = 0;
  double mean_time = 0.0;
  double std_time = 0.0;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double reliability_pct = 0.0;

  int n_runs() const { return static_cast<int>(times.size()); }
};

struct StrategyAggregate {
  ThresholdAggregate coarse;
  ThresholdAggregate fine;
};

inline ThresholdAggregate aggregate_threshold(
    const std::vector<RunTrace>& runs, const Landscape& landscape, double threshold,
    ThresholdReference reference = ThresholdReference::initialization) {
  ThresholdAggregate agg;
  for (const auto& trace : runs) {
    const double scale = reference == ThresholdReference::optimum
                             ? landscape.y_star
                             : trace.mean_trajectory.front().true_cost;
    const auto conv = detect_convergence_below(trace, landscape.y_star + threshold * scale,
                                               trace.budget_minutes);
    agg.times.push_back(conv.time_minutes);
    agg.costs.push_back(cumulative_cost_to(trace, conv));
    if (conv.converged) ++agg.n_converged;
  }
  agg.mean_time = detail::mean_of(agg.times);
  agg.std_time = detail::sample_std_of(agg.times);
  agg.mean_cost = detail::mean_of(agg.costs);
  agg.std_cost = detail::sample_std_of(agg.costs);
  agg.reliability_pct = 100.0 * agg.n_converged / static_cast<double>(runs.size());
  return agg;
}

inline StrategyAggregate summarize_runs(
    const std::vector<RunTrace>& runs, const Landscape& landscape,
    ThresholdReference reference = ThresholdReference::initialization) {
  if (runs.empty()) throw InsufficientDataError("summarize_runs: no runs");
  return {aggregate_threshold(runs, landscape, coarse_threshold, reference),
          aggregate_threshold(runs, landscape, fine_threshold, reference)};
}

// --- strategy scoring ---------------------------------------------------------

struct StrategyScore {
  double time_coarse = 0.0;
  double time_fine = 0.0;
  double cost_coarse = 0.0;
  double cost_fine = 0.0;
  double reliability_coarse = 0.0;
  double reliability_fine = 0.0;
  double total = 0.0;
};

namespace detail {

inline double score_ratio(double value, double reference) {
  if (reference > 0.0) return value / reference;
  return value <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Six metrics normalized against the reference strategy so that lower is
// uniformly better: times and costs divide by the reference, reliabilities
// invert (reference / strategy). The reference scores exactly 6.
inline StrategyScore score_strategy(const StrategyAggregate& strategy,
                                    const StrategyAggregate& reference) {
  StrategyScore s;
  s.time_coarse = detail::score_ratio(strategy.coarse.mean_time, reference.coarse.mean_time);
  s.time_fine = detail::score_ratio(strategy.fine.mean_time, reference.fine.mean_time);
  s.cost_coarse = detail::score_ratio(strategy.coarse.mean_cost, reference.coarse.mean_cost);
  s.cost_fine = detail::score_ratio(strategy.fine.mean_cost, reference.fine.mean_cost);
  s.reliability_coarse =
      detail::score_ratio(reference.coarse.reliability_pct, strategy.coarse.reliability_pct);
  s.reliability_fine =
      detail::score_ratio(reference.fine.reliability_pct, strategy.fine.reliability_pct);
  s.total = s.time_coarse + s.time_fine + s.cost_coarse + s.cost_fine + s.reliability_coarse +
            s.reliability_fine;
  return s;
}

// Best static strategy: drop anything below 90% fine reliability (the filter
// itself is dropped when nothing qualifies), then take the lowest total of
// the six reference-normalized scores.
inline std::string select_best_static(const std::map<std::string, StrategyAggregate>& strategies,
                                      const StrategyAggregate& reference) {
  if (strategies.empty()) throw InvalidConfigError("select_best_static: no strategies");
  std::vector<const std::pair<const std::string, StrategyAggregate>*> eligible;
  for (const auto& entry : strategies)
    if (entry.second.fine.reliability_pct >= fine_reliability_cutoff_pct)
      eligible.push_back(&entry);
  if (eligible.empty())
    for (const auto& entry : strategies) eligible.push_back(&entry);

  const std::string* best = nullptr;
  double best_total = std::numeric_limits<double>::infinity();
  for (const auto* entry : eligible) {
    const double total = score_strategy(entry->second, reference).total;
    if (total < best_total) {
      best_total = total;
      best = &entry->first;
    }
  }
  if (!best) return eligible.front()->first;  // all scores infinite
  return *best;
}

// --- hypothesis testing ---------------------------------------------------------

namespace detail {

// Continued-fraction kernel of the regularized incomplete beta function.
inline double betacf(double a, double b, double x) {
  constexpr int max_iter = 300;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Two-sample pooled-variance Student t-test, two-tailed. Returns nothing when
// the pooled variance is zero (the statistic is undefined).
inline std::optional<TTestResult> t_test_two_tailed(const std::vector<double>& a,
                                                    const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw InsufficientDataError("t_test_two_tailed: need >= 2 samples per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = detail::mean_of(a);
  const double mb = detail::mean_of(b);
  double ssa = 0.0, ssb = 0.0;
  for (double v : a) ssa += (v - ma) * (v - ma);
  for (double v : b) ssb += (v - mb) * (v - mb);
  const double df = na + nb - 2.0;
  const double pooled = (ssa + ssb) / df;
  if (!(pooled > 0.0)) return std::nullopt;
  const double t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  const double p = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return TTestResult{t, df, std::min(1.0, p)};
}

// --- normal quantile and power analysis --------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation refined with one Halley step.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidConfigError("normal_quantile: p must be in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double z;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = normal_cdf(z) - p;
  const double u = err * std::sqrt(2.0 * M_PI) * std::exp(0.5 * z * z);
  return z - u / (1.0 + 0.5 * z * u);
}

struct SampleSizeResult {
  double n_per_group_raw = 0.0;
  int n_per_group = 0;  // ceil per group
  int n_total = 0;      // ceil of the combined total across both groups
};

// Two-sample normal-approximation power analysis. Returns nothing for a zero
// effect, where no finite sample suffices.
inline std::optional<SampleSizeResult> required_sample_size(double mean1, double sd1,
                                                            double mean2, double sd2,
                                                            double alpha, double power) {
  if (!(sd1 > 0.0) || !(sd2 > 0.0))
    throw InvalidConfigError("required_sample_size: sds must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0))
    throw InvalidConfigError("required_sample_size: alpha and power must be in (0, 1)");
  const double effect = mean1 - mean2;
  if (effect == 0.0) return std::nullopt;
  const double z = normal_quantile(1.0 - 0.5 * alpha) + normal_quantile(power);
  const double n_raw = z * z * (sd1 * sd1 + sd2 * sd2) / (effect * effect);
  SampleSizeResult result;
  result.n_per_group_raw = n_raw;
  result.n_per_group = static_cast<int>(std::ceil(n_raw - 1e-12));
  result.n_total = static_cast<int>(std::ceil(2.0 * n_raw - 1e-12));
  return result;
}

// --- trace-derived series ----------------------------------------------------

// Spearman rho between noisy and true costs of each generation's candidates.
// Resampling traces are collapsed to one (mean noisy, true) pair per distinct
// candidate before correlating.
inline std::vector<std::optional<double>> per_generation_sorting_accuracy(const RunTrace& trace) {
  std::vector<std::optional<double>> out;
  const std::size_t block = static_cast<std::size_t>(trace.records_per_generation);
  if (block == 0 || trace.records.size() % block != 0)
    throw InvalidConfigError("per_generation_sorting_accuracy: malformed trace");
  for (std::size_t start = 0; start < trace.records.size(); start += block) {
    std::vector<double> noisy;
    std::vector<double> truth;
    if (static_cast<int>(block) == trace.lambda) {
      for (std::size_t k = 0; k < block; ++k) {
        noisy.push_back(trace.records[start + k].y_noisy);
        truth.push_back(trace.records[start + k].y_true);
      }
    } else {
      std::vector<std::pair<Eigen::VectorXd, std::pair<double, int>>> groups;  // sum, count
      std::vector<double> group_truth;
      for (std::size_t k = 0; k < block; ++k) {
        const auto& rec = trace.records[start + k];
        bool found = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          if (groups[g].first == rec.x_unit) {
            groups[g].second.first += rec.y_noisy;
            groups[g].second.second += 1;
            found = true;
            break;
          }
        }
        if (!found) {
          groups.push_back({rec.x_unit, {rec.y_noisy, 1}});
          group_truth.push_back(rec.y_true);
        }
      }
      for (std::size_t g = 0; g < groups.size(); ++g) {
        noisy.push_back(groups[g].second.first / groups[g].second.second);
        truth.push_back(group_truth[g]);
      }
    }
    out.push_back(noisy.size() >= 2 ? spearman_rho(noisy, truth) : std::nullopt);
  }
  return out;
}

// Mean of the defined per-generation accuracies of one run.
inline std::optional<double> run_mean_sorting_accuracy(const RunTrace& trace) {
  double sum = 0.0;
  int n = 0;
  for (const auto& rho : per_generation_sorting_accuracy(trace)) {
    if (rho) {
      sum += *rho;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// Mean allocated sample time of each generation.
inline std::vector<double> per_generation_mean_time(const RunTrace& trace) {
  std::vector<double> out;
  const std::size_t block = static_cast<std::size_t>(trace.records_per_generation);
  if (block == 0 || trace.records.size() % block != 0)
    throw InvalidConfigError("per_generation_mean_time: malformed trace");
  for (std::size_t start = 0; start < trace.records.size(); start += block) {
    double sum = 0.0;
    for (std::size_t k = 0; k < block; ++k) sum += trace.records[start + k].t_minutes;
    out.push_back(sum / static_cast<double>(block));
  }
  return out;
}

}  // namespace ascma
