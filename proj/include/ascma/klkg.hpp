#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "ascma/cma.hpp"
#include "ascma/errors.hpp"
#include "ascma/noise_model.hpp"

namespace ascma {

// Dynamic-resampling baseline: each generation starts with n0 samples per
// candidate at a fixed sample time, then spends the remaining budget one
// sample at a time on whichever candidate has the highest expected
// information gain (elite-flip probability times the KL divergence of the
// hypothetical distribution update).
struct KlkgConfig {
  int n0 = 1;             // initial samples per candidate
  int n_total = 20;       // total samples per generation
  double t_static = 3.0;  // minutes per sample
};

struct FitnessEstimate {
  double mean = 0.0;  // running mean of noisy samples
  int count = 0;
};

// Closed-form KL divergence between two full-covariance Gaussians, in nats.
inline double kl_divergence(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                            const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2) {
  const Eigen::Index n = mean1.size();
  if (mean2.size() != n || cov1.rows() != n || cov1.cols() != n || cov2.rows() != n ||
      cov2.cols() != n)
    throw InvalidConfigError("kl_divergence: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt2(Eigen::MatrixXd(0.5 * (cov2 + cov2.transpose())));
  if (llt2.info() != Eigen::Success)
    throw NumericalStateError("kl_divergence: second covariance not positive definite");
  const Eigen::LLT<Eigen::MatrixXd> llt1(Eigen::MatrixXd(0.5 * (cov1 + cov1.transpose())));
  if (llt1.info() != Eigen::Success)
    throw NumericalStateError("kl_divergence: first covariance not positive definite");

  const double trace = llt2.solve(cov1).trace();
  const Eigen::VectorXd diff = mean2 - mean1;
  const double quad = diff.dot(llt2.solve(diff));
  double log_det_ratio = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    log_det_ratio += 2.0 * (std::log(llt2.matrixL()(i, i)) - std::log(llt1.matrixL()(i, i)));
  return 0.5 * (trace + quad - static_cast<double>(n) + log_det_ratio);
}

namespace detail {

inline std::vector<int> ranked_by_mean(const std::vector<FitnessEstimate>& estimates) {
  std::vector<int> order(estimates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&estimates](int a, int b) { return estimates[a].mean < estimates[b].mean; });
  return order;
}

}  // namespace detail

// Probability that one more sample of candidate `index` moves its running
// mean across the elite boundary (the midpoint between the mu-th and
// (mu+1)-th ranked estimates). The post-sample mean is modeled as
// N(S_i, eps * |S_i| / (count + 1)) with eps the single-sample error std.
inline double elite_flip_probability(const std::vector<FitnessEstimate>& estimates, int index,
                                     int mu, double eps) {
  const int lambda = static_cast<int>(estimates.size());
  if (mu < 1 || mu >= lambda)
    throw DegenerateEliteError("elite_flip_probability: need 1 <= mu < lambda");
  if (index < 0 || index >= lambda)
    throw InvalidConfigError("elite_flip_probability: index out of range");
  for (const auto& est : estimates)
    if (est.count < 1) throw InvalidConfigError("elite_flip_probability: unsampled candidate");

  const auto order = detail::ranked_by_mean(estimates);
  const double boundary = 0.5 * (estimates[order[mu - 1]].mean + estimates[order[mu]].mean);
  const auto& est = estimates[index];
  const double post_sd = eps * std::abs(est.mean) / static_cast<double>(est.count + 1);
  const double gap = std::abs(est.mean - boundary);
  if (!(post_sd > 0.0)) return gap == 0.0 ? 0.5 : 0.0;
  return 0.5 * std::erfc(gap / (post_sd * std::sqrt(2.0)));
}

// Expected value of sampling candidate `index` once more: the flip
// probability times the KL divergence between the hypothetical update (elite
// membership swapped with the boundary candidate) and the update under the
// current ranking. Both sides are recombination-only re-runs of the mean and
// covariance updates sharing the current covariance path, so the divergence
// isolates the effect of the membership flip.
inline double sampling_value(int index, const CmaState& state, const CmaParams& params,
                             const std::vector<FitnessEstimate>& estimates, double eps,
                             const CandidateSet& candidates) {
  if (candidates.lambda() != static_cast<int>(estimates.size()))
    throw InvalidConfigError("sampling_value: candidate/estimate count mismatch");
  const double p_flip = elite_flip_probability(estimates, index, params.mu, eps);
  if (p_flip <= 0.0) return 0.0;

  const auto order = detail::ranked_by_mean(estimates);
  int pos = 0;
  while (order[pos] != index) ++pos;
  const int partner_pos = pos < params.mu ? params.mu : params.mu - 1;
  std::vector<int> flipped = order;
  std::swap(flipped[pos], flipped[partner_pos]);

  const auto recombine = [&](const std::vector<int>& ranking) {
    Eigen::VectorXd mean = state.mean;
    Eigen::MatrixXd cov = (1.0 - params.c_1 - params.c_mu) * state.cov +
                          params.c_1 * (state.path_c * state.path_c.transpose());
    for (int k = 0; k < params.mu; ++k) {
      const Eigen::VectorXd diff = candidates.x.col(ranking[k]) - state.mean;
      mean += params.weights[k] * diff;
      const Eigen::VectorXd y = diff / state.sigma;
      cov.noalias() += params.c_mu * params.weights[k] * (y * y.transpose());
    }
    const double s2 = state.sigma * state.sigma;
    return std::make_pair(std::move(mean), Eigen::MatrixXd(s2 * 0.5 * (cov + cov.transpose())));
  };

  const auto [mean_current, cov_current] = recombine(order);
  const auto [mean_flipped, cov_flipped] = recombine(flipped);
  const double kl = std::max(0.0, kl_divergence(mean_flipped, cov_flipped,
                                                mean_current, cov_current));
  return p_flip * kl;
}

using MeasureFn = std::function<MeasurementOutcome(int candidate_index, double t_minutes)>;

struct KlkgSampleRecord {
  int candidate_index = 0;
  MeasurementOutcome outcome;
};

struct KlkgGenerationResult {
  CmaState next_state;
  std::vector<KlkgSampleRecord> samples;  // in sampling order
  std::vector<double> estimated_fitness;  // final running means
  int extra_samples = 0;                  // allocations past the initial pass
};

// One full generation: the initial pass, the greedy value-driven allocation
// loop until exactly n_total samples are spent, then the standard
// distribution update on the final estimated fitnesses.
inline KlkgGenerationResult run_klkg_generation(const CmaState& state, const CmaParams& params,
                                                const KlkgConfig& config,
                                                const CandidateSet& candidates,
                                                const MeasureFn& measure_one) {
  if (config.n0 < 1) throw InvalidConfigError("run_klkg_generation: n0 must be >= 1");
  if (candidates.lambda() != params.lambda)
    throw InvalidConfigError("run_klkg_generation: candidate count mismatch");
  if (config.n_total < params.lambda * config.n0)
    throw InvalidBudgetError("run_klkg_generation: budget below lambda * n0");

  KlkgGenerationResult result;
  std::vector<FitnessEstimate> estimates(static_cast<std::size_t>(params.lambda));
  double eps_static = 0.0;
  for (int i = 0; i < params.lambda; ++i) {
    double sum = 0.0;
    for (int k = 0; k < config.n0; ++k) {
      const auto outcome = measure_one(i, config.t_static);
      eps_static = outcome.epsilon;
      sum += outcome.y_noisy;
      result.samples.push_back({i, outcome});
    }
    estimates[static_cast<std::size_t>(i)] = {sum / config.n0, config.n0};
  }

  int spent = params.lambda * config.n0;
  while (spent < config.n_total) {
    int best = 0;
    double best_value = -1.0;
    for (int i = 0; i < params.lambda; ++i) {
      const double value = sampling_value(i, state, params, estimates, eps_static, candidates);
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    const auto outcome = measure_one(best, config.t_static);
    auto& est = estimates[static_cast<std::size_t>(best)];
    est.mean = (est.mean * est.count + outcome.y_noisy) / (est.count + 1);
    est.count += 1;
    result.samples.push_back({best, outcome});
    ++spent;
    ++result.extra_samples;
  }

  result.estimated_fitness.reserve(estimates.size());
  for (const auto& est : estimates) result.estimated_fitness.push_back(est.mean);
  result.next_state = update(state, params, candidates, result.estimated_fitness);
  return result;
}

}  // namespace ascma
