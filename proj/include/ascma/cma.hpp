#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ascma/errors.hpp"
#include "ascma/random.hpp"

namespace ascma {

// Strategy parameters for one problem dimensionality: population sizing,
// log-rank recombination weights, and the standard learning rates. The mean
// update recombines the top mu candidates with the positive weights; the
// covariance update additionally exploits the bottom ranks through the
// negative tail of cov_weights (Hansen's 2016 tutorial defaults).
struct CmaParams {
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;      // mu entries, non-increasing, sum to 1
  Eigen::VectorXd cov_weights;  // lambda entries; negative tail past mu
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;  // E||N(0, I)||
};

inline CmaParams default_params(int dim) {
  if (dim < 1) throw InvalidDimensionError("default_params: dim must be >= 1");
  CmaParams p;
  p.dim = dim;
  const double n = static_cast<double>(dim);
  p.lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
  p.mu = p.lambda / 2;

  Eigen::VectorXd raw(p.lambda);
  for (int i = 0; i < p.lambda; ++i)
    raw[i] = std::log((p.lambda + 1) / 2.0) - std::log(static_cast<double>(i + 1));
  const double positive_sum = raw.head(p.mu).sum();
  const double negative_sum = raw.tail(p.lambda - p.mu).sum();  // < 0

  p.weights = raw.head(p.mu) / positive_sum;
  p.mu_eff = 1.0 / p.weights.squaredNorm();
  const double mu_eff_neg = negative_sum * negative_sum / raw.tail(p.lambda - p.mu).squaredNorm();

  p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
  p.c_mu = std::min(1.0 - p.c_1,
                    2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) / ((n + 2.0) * (n + 2.0) + p.mu_eff));
  p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  // negative-weight scaling keeps the covariance update stable
  const double alpha_mu = 1.0 + p.c_1 / p.c_mu;
  const double alpha_mu_eff = 1.0 + 2.0 * mu_eff_neg / (p.mu_eff + 2.0);
  const double alpha_pos = (1.0 - p.c_1 - p.c_mu) / (n * p.c_mu);
  const double neg_scale = std::min({alpha_mu, alpha_mu_eff, alpha_pos}) / -negative_sum;

  p.cov_weights.resize(p.lambda);
  p.cov_weights.head(p.mu) = p.weights;
  p.cov_weights.tail(p.lambda - p.mu) = neg_scale * raw.tail(p.lambda - p.mu);
  return p;
}

enum class CandidateOrigin { sampled, injected_mean };

// One generation of unit-cube candidates. The final column is always the
// current distribution mean, injected verbatim in place of the last sample.
struct CandidateSet {
  Eigen::MatrixXd x;  // dim x lambda, every coordinate in [0, 1]
  std::vector<CandidateOrigin> origin;

  int lambda() const { return static_cast<int>(x.cols()); }
  int dim() const { return static_cast<int>(x.rows()); }
};

// Search-distribution state. A plain value; copy it to snapshot a run.
struct CmaState {
  Eigen::VectorXd mean;  // unit coordinates
  double sigma = 0.3;
  Eigen::MatrixXd cov;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  long generation = 0;

  static CmaState initial(const Eigen::VectorXd& mean0, double sigma0) {
    if (!(sigma0 > 0.0)) throw InvalidConfigError("CmaState: sigma0 must be > 0");
    if (mean0.size() == 0) throw InvalidDimensionError("CmaState: empty mean");
    CmaState s;
    s.mean = mean0;
    s.sigma = sigma0;
    s.cov = Eigen::MatrixXd::Identity(mean0.size(), mean0.size());
    s.path_sigma = Eigen::VectorXd::Zero(mean0.size());
    s.path_c = Eigen::VectorXd::Zero(mean0.size());
    return s;
  }
};

namespace detail {

struct CovEigen {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};

inline CovEigen cov_eigen(const Eigen::MatrixXd& cov) {
  if (!cov.allFinite()) throw NumericalStateError("covariance has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (cov + cov.transpose()));
  if (solver.info() != Eigen::Success)
    throw NumericalStateError("covariance eigendecomposition failed");
  if (!(solver.eigenvalues().minCoeff() > 0.0))
    throw NumericalStateError("covariance is not positive definite");
  return {solver.eigenvectors(), solver.eigenvalues()};
}

// Floors collapsed eigenvalues so long runs at the noise floor keep a
// full-rank sampling distribution.
inline Eigen::MatrixXd repair_covariance(const Eigen::MatrixXd& cov) {
  if (!cov.allFinite()) throw NumericalStateError("covariance has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericalStateError("covariance eigendecomposition failed");
  const double max_ev = solver.eigenvalues().maxCoeff();
  if (!(max_ev > 0.0)) throw NumericalStateError("covariance collapsed");
  if (solver.eigenvalues().minCoeff() > 1e-14) return cov;
  const Eigen::VectorXd floored = solver.eigenvalues().cwiseMax(1e-14 * max_ev);
  const Eigen::MatrixXd repaired =
      solver.eigenvectors() * floored.asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (repaired + repaired.transpose());
}

}  // namespace detail

// Draws lambda - 1 candidates from N(mean, sigma^2 C), clamps them
// coordinatewise into the unit cube, and injects the current mean as the
// final candidate.
inline CandidateSet ask(const CmaState& state, const CmaParams& params, RandomStream& rng) {
  if (!(state.sigma > 0.0) || !std::isfinite(state.sigma))
    throw NumericalStateError("ask: step size must be positive and finite");
  const int n = params.dim;
  const auto eig = detail::cov_eigen(state.cov);
  const Eigen::VectorXd scale = eig.values.cwiseSqrt();

  CandidateSet cs;
  cs.x.resize(n, params.lambda);
  cs.origin.assign(static_cast<std::size_t>(params.lambda), CandidateOrigin::sampled);
  Eigen::VectorXd z(n);
  for (int i = 0; i < params.lambda - 1; ++i) {
    for (int d = 0; d < n; ++d) z[d] = rng.gaussian();
    cs.x.col(i) = state.mean + state.sigma * (eig.vectors * scale.cwiseProduct(z));
  }
  cs.x.col(params.lambda - 1) = state.mean;
  cs.origin.back() = CandidateOrigin::injected_mean;
  cs.x = cs.x.cwiseMax(0.0).cwiseMin(1.0);
  return cs;
}

// One full distribution update: rank candidates by fitness (ascending, ties
// keep candidate order), then apply the mean shift, step-size path, step
// size, covariance path, and covariance recombination in that order.
inline CmaState update(const CmaState& state, const CmaParams& params,
                       const CandidateSet& candidates, const std::vector<double>& fitness) {
  const int n = params.dim;
  if (candidates.lambda() != params.lambda ||
      static_cast<int>(fitness.size()) != params.lambda)
    throw InvalidFitnessError("update: candidate/fitness count mismatch");
  for (double f : fitness)
    if (!std::isfinite(f)) throw InvalidFitnessError("update: non-finite fitness value");

  std::vector<int> order(static_cast<std::size_t>(params.lambda));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&fitness](int a, int b) { return fitness[a] < fitness[b]; });

  CmaState next = state;
  const Eigen::VectorXd& old_mean = state.mean;

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < params.mu; ++i)
    delta += params.weights[i] * (candidates.x.col(order[i]) - old_mean);
  next.mean = old_mean + delta;

  const auto eig = detail::cov_eigen(state.cov);
  const Eigen::VectorXd inv_scale = eig.values.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd step = delta / state.sigma;
  const Eigen::VectorXd whitened =
      eig.vectors * inv_scale.cwiseProduct(eig.vectors.transpose() * step);

  next.path_sigma = (1.0 - params.c_sigma) * state.path_sigma +
                    std::sqrt(params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff) * whitened;

  next.sigma = state.sigma *
               std::exp((params.c_sigma / params.d_sigma) *
                        (next.path_sigma.norm() / params.chi_n - 1.0));
  if (!std::isfinite(next.sigma) || !(next.sigma > 0.0))
    throw NumericalStateError("update: step size became non-finite");

  // Stall the covariance path while the step-size path is still too long;
  // threshold 1.5 sqrt(n) on the usual bias-corrected norm.
  const double path_gen = static_cast<double>(state.generation + 1);
  const double correction = std::sqrt(1.0 - std::pow(1.0 - params.c_sigma, 2.0 * path_gen));
  const bool h_sigma =
      next.path_sigma.norm() / correction < 1.5 * std::sqrt(static_cast<double>(n));

  next.path_c = (1.0 - params.c_c) * state.path_c;
  if (h_sigma)
    next.path_c += std::sqrt(params.c_c * (2.0 - params.c_c) * params.mu_eff) * step;

  // hand-built parameter sets may carry recombination weights only
  Eigen::VectorXd cov_weights = params.cov_weights;
  if (cov_weights.size() != params.lambda) {
    cov_weights = Eigen::VectorXd::Zero(params.lambda);
    cov_weights.head(params.mu) = params.weights;
  }

  const double delta_h = h_sigma ? 0.0 : params.c_c * (2.0 - params.c_c);
  Eigen::MatrixXd cov =
      (1.0 + params.c_1 * delta_h - params.c_1 - params.c_mu * cov_weights.sum()) * state.cov;
  cov.noalias() += params.c_1 * (next.path_c * next.path_c.transpose());
  for (int i = 0; i < params.lambda; ++i) {
    double w = cov_weights[i];
    if (w == 0.0) continue;
    const Eigen::VectorXd y = (candidates.x.col(order[i]) - old_mean) / state.sigma;
    if (w < 0.0) {
      // scale a negative update by the whitened length so it cannot blow up
      const Eigen::VectorXd whitened_y =
          eig.vectors * inv_scale.cwiseProduct(eig.vectors.transpose() * y);
      const double len = whitened_y.squaredNorm();
      if (len == 0.0) continue;
      w *= static_cast<double>(n) / len;
    }
    cov.noalias() += params.c_mu * w * (y * y.transpose());
  }
  cov = 0.5 * (cov + cov.transpose());
  next.cov = detail::repair_covariance(cov);
  next.generation = state.generation + 1;
  return next;
}

}  // namespace ascma
