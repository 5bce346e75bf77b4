#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ascma/cma.hpp"
#include "ascma/random.hpp"

using namespace ascma;

namespace {

CandidateSet make_set(const std::vector<Eigen::VectorXd>& columns) {
  CandidateSet cs;
  cs.x.resize(columns.front().size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i)
    cs.x.col(static_cast<Eigen::Index>(i)) = columns[i];
  cs.origin.assign(columns.size(), CandidateOrigin::sampled);
  cs.origin.back() = CandidateOrigin::injected_mean;
  return cs;
}

// Direct evaluation of the weighted mean-shift recombination, used as an
// independent oracle for the update's mean step.
Eigen::VectorXd oracle_mean(const Eigen::VectorXd& m, const std::vector<Eigen::VectorXd>& top,
                            const std::vector<double>& w) {
  Eigen::VectorXd out = m;
  for (std::size_t i = 0; i < top.size(); ++i) out += w[i] * (top[i] - m);
  return out;
}

}  // namespace

TEST_CASE("default parameter sizing") {
  const auto p4 = default_params(4);
  REQUIRE(p4.lambda == 8);
  REQUIRE(p4.mu == 4);

  const auto p20 = default_params(20);
  REQUIRE(p20.lambda == 12);
  REQUIRE(p20.mu == 6);

  const auto p1 = default_params(1);
  REQUIRE(p1.lambda == 4);
  REQUIRE(p1.mu == 2);

  REQUIRE_THROWS_AS(default_params(0), InvalidDimensionError);
}

TEST_CASE("weights are non-increasing, nonnegative, normalized") {
  for (int dim : {1, 2, 4, 10, 20}) {
    const auto p = default_params(dim);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < p.mu; ++i) {
      REQUIRE(p.weights[i] >= 0.0);
      if (i > 0) REQUIRE(p.weights[i] <= p.weights[i - 1]);
      sum += p.weights[i];
      sum_sq += p.weights[i] * p.weights[i];
    }
    REQUIRE(sum == Approx(1.0).margin(1e-12));
    REQUIRE(p.mu_eff == Approx(1.0 / sum_sq).margin(1e-12));
  }
}

TEST_CASE("ask returns lambda in-cube candidates with the mean injected last") {
  const auto params = default_params(4);
  auto state = CmaState::initial(Eigen::VectorXd::Constant(4, 0.4), 0.3);
  RandomStream rng(5);
  const auto cs = ask(state, params, rng);

  REQUIRE(cs.lambda() == params.lambda);
  REQUIRE((cs.x.array() >= 0.0).all());
  REQUIRE((cs.x.array() <= 1.0).all());
  REQUIRE(cs.x.col(params.lambda - 1) == state.mean);
  int injected = 0;
  for (std::size_t i = 0; i < cs.origin.size(); ++i)
    if (cs.origin[i] == CandidateOrigin::injected_mean) {
      ++injected;
      REQUIRE(i == cs.origin.size() - 1);
    }
  REQUIRE(injected == 1);
}

TEST_CASE("degenerate step size collapses every candidate onto the mean") {
  const auto params = default_params(3);
  auto state = CmaState::initial(Eigen::VectorXd::Constant(3, 0.5), 1.0);
  state.sigma = 1e-300;
  RandomStream rng(9);
  const auto cs = ask(state, params, rng);
  for (int i = 0; i < cs.lambda(); ++i) REQUIRE(cs.x.col(i) == state.mean);
}

TEST_CASE("ask is deterministic under a fixed seed") {
  const auto params = default_params(4);
  const auto state = CmaState::initial(Eigen::VectorXd::Constant(4, 0.5), 0.3);
  RandomStream rng1(77), rng2(77);
  const auto a = ask(state, params, rng1);
  const auto b = ask(state, params, rng2);
  REQUIRE(a.x == b.x);
}

TEST_CASE("update leaves the mean unchanged when every candidate equals it") {
  const auto params = default_params(4);
  const auto state = CmaState::initial(Eigen::VectorXd::Constant(4, 0.5), 0.3);
  std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(params.lambda), state.mean);
  const auto cs = make_set(cols);
  std::vector<double> fitness(static_cast<std::size_t>(params.lambda), 1.0);
  const auto next = update(state, params, cs, fitness);
  REQUIRE(next.mean == state.mean);
  REQUIRE(next.generation == 1);
}

TEST_CASE("mean recombination matches the direct weighted-sum oracle") {
  // 2D, mu = 2, w = (0.7, 0.3), top two candidates (1,0) and (0,1) from m = 0
  CmaParams params = default_params(2);
  params.lambda = 3;
  params.mu = 2;
  params.weights = (Eigen::VectorXd(2) << 0.7, 0.3).finished();
  params.mu_eff = 1.0 / params.weights.squaredNorm();

  auto state = CmaState::initial(Eigen::VectorXd::Zero(2), 0.3);
  const Eigen::VectorXd c0 = (Eigen::VectorXd(2) << 1.0, 0.0).finished();
  const Eigen::VectorXd c1 = (Eigen::VectorXd(2) << 0.0, 1.0).finished();
  const auto cs = make_set({c0, c1, state.mean});
  const auto next = update(state, params, cs, {1.0, 2.0, 3.0});

  REQUIRE(next.mean[0] == Approx(0.7).margin(1e-15));
  REQUIRE(next.mean[1] == Approx(0.3).margin(1e-15));
  const auto expected = oracle_mean(state.mean, {c0, c1}, {0.7, 0.3});
  REQUIRE((next.mean - expected).norm() < 1e-15);
}

TEST_CASE("step size grows under co-directed shifts and shrinks under reversals") {
  const auto params = default_params(2);
  const auto run = [&params](bool alternate) {
    auto state = CmaState::initial(Eigen::VectorXd::Constant(2, 0.5), 0.05);
    for (int g = 0; g < 6; ++g) {
      const double direction = alternate && (g % 2 == 1) ? -1.0 : 1.0;
      std::vector<Eigen::VectorXd> cols;
      for (int i = 0; i < params.lambda - 1; ++i) {
        Eigen::VectorXd c = state.mean;
        c[0] += direction * 0.04 * (1.0 + 0.01 * i);
        c[1] += 0.001 * i;
        cols.push_back(c);
      }
      cols.push_back(state.mean);
      const auto cs = make_set(cols);
      std::vector<double> fitness;
      for (int i = 0; i < params.lambda; ++i) fitness.push_back(static_cast<double>(i));
      state = update(state, params, cs, fitness);
    }
    return state.sigma;
  };
  const double sigma_forward = run(false);
  const double sigma_alternating = run(true);
  REQUIRE(sigma_forward > 0.05);
  REQUIRE(sigma_alternating < 0.05);
  REQUIRE(sigma_forward > sigma_alternating);
}

TEST_CASE("update is invariant to permuting the candidate/fitness pairing") {
  const auto params = default_params(3);
  const auto state = CmaState::initial(Eigen::VectorXd::Constant(3, 0.5), 0.2);
  RandomStream rng(13);

  std::vector<Eigen::VectorXd> cols;
  std::vector<double> fitness;
  for (int i = 0; i < params.lambda; ++i) {
    Eigen::VectorXd c(3);
    for (int d = 0; d < 3; ++d) c[d] = rng.uniform();
    cols.push_back(c);
    fitness.push_back(rng.uniform());  // distinct with probability 1
  }
  const auto cs = make_set(cols);

  // rotate the pairing; keep an injected flag in the last slot
  std::vector<Eigen::VectorXd> cols_rot;
  std::vector<double> fitness_rot;
  for (int i = 0; i < params.lambda; ++i) {
    const int j = (i + 3) % params.lambda;
    cols_rot.push_back(cols[static_cast<std::size_t>(j)]);
    fitness_rot.push_back(fitness[static_cast<std::size_t>(j)]);
  }
  const auto cs_rot = make_set(cols_rot);

  const auto a = update(state, params, cs, fitness);
  const auto b = update(state, params, cs_rot, fitness_rot);
  REQUIRE(a.mean == b.mean);
  REQUIRE(a.sigma == b.sigma);
  REQUIRE(a.cov == b.cov);
  REQUIRE(a.path_sigma == b.path_sigma);
  REQUIRE(a.path_c == b.path_c);
}

TEST_CASE("adding a constant to all fitnesses changes nothing") {
  const auto params = default_params(4);
  const auto state = CmaState::initial(Eigen::VectorXd::Constant(4, 0.5), 0.3);
  RandomStream rng(21);
  const auto cs = ask(state, params, rng);
  std::vector<double> fitness;
  for (int i = 0; i < params.lambda; ++i) fitness.push_back(std::sin(3.0 * i) + 2.0);
  std::vector<double> shifted = fitness;
  for (double& f : shifted) f += 42.0;

  const auto a = update(state, params, cs, fitness);
  const auto b = update(state, params, cs, shifted);
  REQUIRE(a.mean == b.mean);
  REQUIRE(a.sigma == b.sigma);
  REQUIRE(a.cov == b.cov);
}

TEST_CASE("covariance stays symmetric positive definite across updates") {
  const auto params = default_params(4);
  auto state = CmaState::initial(Eigen::VectorXd::Constant(4, 0.5), 0.3);
  RandomStream rng(31);
  for (int g = 0; g < 60; ++g) {
    const auto cs = ask(state, params, rng);
    std::vector<double> fitness;
    for (int i = 0; i < params.lambda; ++i)
      fitness.push_back((cs.x.col(i) - Eigen::VectorXd::Constant(4, 0.6)).squaredNorm());
    state = update(state, params, cs, fitness);

    REQUIRE((state.cov - state.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state.cov);
    REQUIRE(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("non-finite fitness is rejected") {
  const auto params = default_params(2);
  const auto state = CmaState::initial(Eigen::VectorXd::Constant(2, 0.5), 0.3);
  RandomStream rng(3);
  const auto cs = ask(state, params, rng);
  std::vector<double> fitness(static_cast<std::size_t>(params.lambda), 1.0);
  fitness[2] = std::nan("");
  REQUIRE_THROWS_AS(update(state, params, cs, fitness), InvalidFitnessError);
  std::vector<double> wrong_size(3, 1.0);
  REQUIRE_THROWS_AS(update(state, params, cs, wrong_size), InvalidFitnessError);
}

TEST_CASE("noiseless quadratic sanity at reduced scale") {
  // fuller version (100 seeds) lives in the acceptance suite
  const auto params = default_params(4);
  const Eigen::VectorXd target = (Eigen::VectorXd(4) << 0.6, 0.4, 0.55, 0.45).finished();
  int successes = 0;
  for (int seed = 0; seed < 20; ++seed) {
    RandomStream init_rng(derive_seed(seed, stream_tag::init));
    Eigen::VectorXd mean0(4);
    for (int d = 0; d < 4; ++d) mean0[d] = init_rng.uniform();
    auto state = CmaState::initial(mean0, 0.3);
    RandomStream rng(derive_seed(seed, stream_tag::ask));
    for (int g = 0; g < 300; ++g) {
      const auto cs = ask(state, params, rng);
      std::vector<double> fitness;
      for (int i = 0; i < params.lambda; ++i)
        fitness.push_back((cs.x.col(i) - target).squaredNorm());
      state = update(state, params, cs, fitness);
      if ((state.mean - target).norm() < 1e-6) {
        ++successes;
        break;
      }
    }
  }
  REQUIRE(successes >= 19);
}
