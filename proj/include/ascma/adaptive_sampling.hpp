#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ascma/cma.hpp"
#include "ascma/errors.hpp"
#include "ascma/noise_model.hpp"

namespace ascma {

// Floors that keep the sample-time formula finite when a generation lands on
// a flat plateau.
inline constexpr double k_avg_floor = 1e-9;
inline constexpr double y_avg_floor = 1e-9;

struct AsCmaConfig {
  double beta = 1.3;       // target signal-to-noise ratio when sorting neighbors
  double y_hat_max = 0.0;  // rough prior estimate of the largest measurable cost
  double y_hat_min = 0.0;  // and of the smallest
};

// Landscape-local estimate that drives sample-time allocation. d_max is
// fixed at initialization; k_avg and y_avg track the current search region.
struct AsCmaState {
  double d_max = 0.0;  // largest possible candidate separation
  double k_avg = 0.0;  // cost difference per unit normalized distance
  double y_avg = 0.0;  // mean cost of the local region
};

// Seeds the landscape estimate from the search box and the user's rough cost
// range. The slope assumes the full cost range spans half the maximum
// possible distance; measured generations replace these after one update.
inline AsCmaState init_ascma(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const AsCmaConfig& config) {
  if (!(config.beta > 0.0)) throw InvalidConfigError("init_ascma: beta must be > 0");
  if (!(config.y_hat_max > config.y_hat_min))
    throw InvalidConfigError("init_ascma: y_hat_max must exceed y_hat_min");
  if (lower.size() == 0 || lower.size() != upper.size())
    throw InvalidConfigError("init_ascma: malformed bounds");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(upper[i] > lower[i]))
      throw InvalidConfigError("init_ascma: degenerate bounds in dimension " + std::to_string(i));

  AsCmaState state;
  state.d_max = (upper - lower).norm();
  state.y_avg = std::max(y_avg_floor, 0.5 * (config.y_hat_max + config.y_hat_min));
  state.k_avg = std::max(k_avg_floor, (config.y_hat_max - config.y_hat_min) / (0.5 * state.d_max));
  return state;
}

// Distance from each candidate to its closest generation-mate, normalized by
// d_max. The injected mean is a member of the generation and participates.
inline std::vector<double> nearest_distances(const CandidateSet& candidates, double d_max) {
  const int lambda = candidates.lambda();
  if (lambda < 2)
    throw InsufficientPopulationError("nearest_distances: need at least 2 candidates");
  if (!(d_max > 0.0)) throw InvalidConfigError("nearest_distances: d_max must be > 0");
  std::vector<double> nearest(static_cast<std::size_t>(lambda),
                              std::numeric_limits<double>::infinity());
  for (int i = 0; i < lambda; ++i) {
    for (int j = i + 1; j < lambda; ++j) {
      const double d = (candidates.x.col(i) - candidates.x.col(j)).norm();
      nearest[i] = std::min(nearest[i], d);
      nearest[j] = std::min(nearest[j], d);
    }
  }
  for (double& d : nearest) d /= d_max;
  return nearest;
}

struct TimeAllocation {
  std::vector<double> minutes;         // chosen sample time per candidate
  std::vector<double> target_epsilon;  // noise level each time was chosen to meet
};

// Core allocation rule: a candidate whose nearest neighbor sits a normalized
// distance d away can tolerate measurement noise
// eps = k_avg * d / (sqrt(2) * beta * y_avg) and still sort against that
// neighbor at signal-to-noise ratio beta; invert the noise curve at eps and
// clamp to its time bounds.
inline TimeAllocation allocate_sample_times(const CandidateSet& candidates,
                                            const AsCmaState& state, const AsCmaConfig& config,
                                            const NoiseCurve& curve) {
  if (!(config.beta > 0.0)) throw InvalidConfigError("allocate_sample_times: beta must be > 0");
  const auto distances = nearest_distances(candidates, state.d_max);
  TimeAllocation alloc;
  alloc.minutes.reserve(distances.size());
  alloc.target_epsilon.reserve(distances.size());
  const double denom = std::sqrt(2.0) * config.beta * state.y_avg;
  for (double d : distances) {
    const double eps = state.k_avg * d / denom;
    alloc.target_epsilon.push_back(eps);
    alloc.minutes.push_back(curve.time_for_epsilon(eps));
  }
  return alloc;
}

// Post-generation refresh of the landscape estimate: y_avg becomes the mean
// measured cost, and k_avg is a least-squares slope through the origin of
// |cost difference| against normalized distance over all unordered candidate
// pairs. Coincident generations keep the previous slope.
inline AsCmaState update_stats(const CandidateSet& candidates, const std::vector<double>& fitness,
                               const AsCmaState& state) {
  const int lambda = candidates.lambda();
  if (lambda < 2) throw InsufficientPopulationError("update_stats: need at least 2 candidates");
  if (static_cast<int>(fitness.size()) != lambda)
    throw InvalidFitnessError("update_stats: candidate/fitness count mismatch");
  for (double f : fitness)
    if (!std::isfinite(f)) throw InvalidFitnessError("update_stats: non-finite fitness value");

  AsCmaState next = state;
  double mean = 0.0;
  for (double f : fitness) mean += f;
  next.y_avg = std::max(y_avg_floor, mean / static_cast<double>(lambda));

  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < lambda; ++i) {
    for (int j = i + 1; j < lambda; ++j) {
      const double d = (candidates.x.col(i) - candidates.x.col(j)).norm() / state.d_max;
      num += std::abs(fitness[i] - fitness[j]) * d;
      den += d * d;
    }
  }
  if (den > 0.0) next.k_avg = std::max(k_avg_floor, num / den);
  return next;
}

}  // namespace ascma
