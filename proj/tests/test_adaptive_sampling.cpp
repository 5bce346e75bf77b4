#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ascma/adaptive_sampling.hpp"
#include "ascma/random.hpp"

using namespace ascma;

namespace {

CandidateSet set_from_columns(const std::vector<Eigen::VectorXd>& columns) {
  CandidateSet cs;
  cs.x.resize(columns.front().size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i)
    cs.x.col(static_cast<Eigen::Index>(i)) = columns[i];
  cs.origin.assign(columns.size(), CandidateOrigin::sampled);
  cs.origin.back() = CandidateOrigin::injected_mean;
  return cs;
}

}  // namespace

TEST_CASE("initialization from bounds and the prior cost range") {
  AsCmaConfig config;
  config.y_hat_max = 1.3;
  config.y_hat_min = 0.6;
  const auto state =
      init_ascma(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4), config);
  REQUIRE(state.d_max == Approx(2.0).margin(1e-15));
  REQUIRE(state.y_avg == Approx(0.95).margin(1e-15));
  REQUIRE(state.k_avg == Approx(0.7).margin(1e-15));

  AsCmaConfig bad = config;
  bad.y_hat_min = 1.3;
  REQUIRE_THROWS_AS(init_ascma(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4), bad),
                    InvalidConfigError);
  REQUIRE_THROWS_AS(init_ascma(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), config),
                    InvalidConfigError);
}

TEST_CASE("nearest distances normalize by d_max") {
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 0.4, 0.0;
  const auto two = nearest_distances(set_from_columns({a, b}), 2.0);
  REQUIRE(two[0] == Approx(0.2).margin(1e-15));
  REQUIRE(two[1] == Approx(0.2).margin(1e-15));

  // collinear points at 0, 0.5, 2.0 with d_max = 2 -> 0.25, 0.25, 0.75
  Eigen::VectorXd p(2), q(2), r(2);
  p << 0.0, 0.0;
  q << 0.5, 0.0;
  r << 2.0, 0.0;
  const auto three = nearest_distances(set_from_columns({p, q, r}), 2.0);
  REQUIRE(three[0] == Approx(0.25).margin(1e-15));
  REQUIRE(three[1] == Approx(0.25).margin(1e-15));
  REQUIRE(three[2] == Approx(0.75).margin(1e-15));

  const auto dup = nearest_distances(set_from_columns({a, a, r}), 2.0);
  REQUIRE(dup[0] == 0.0);
  REQUIRE(dup[1] == 0.0);

  REQUIRE_THROWS_AS(nearest_distances(set_from_columns({a}), 2.0),
                    InsufficientPopulationError);
}

TEST_CASE("allocation follows the target-noise formula and clamps") {
  AsCmaConfig config;
  config.beta = 1.3;
  config.y_hat_max = 1.3;
  config.y_hat_min = 0.6;
  AsCmaState state;
  state.d_max = 2.0;
  state.k_avg = 0.7;
  state.y_avg = 0.95;
  const auto curve = default_noise_curve();

  // duplicate pair: zero distance -> zero tolerable noise -> maximal clamp
  Eigen::VectorXd a(4), b(4);
  a.setConstant(0.3);
  b.setConstant(0.3);
  const auto clamped = allocate_sample_times(set_from_columns({a, b}), state, config, curve);
  REQUIRE(clamped.target_epsilon[0] == 0.0);
  REQUIRE(clamped.minutes[0] == curve.t_max());

  // normalized distance 0.1: eps = 0.7*0.1 / (sqrt(2)*1.3*0.95)
  Eigen::VectorXd c(4), d(4);
  c.setConstant(0.2);
  d = c;
  d[0] += 0.2;  // euclidean 0.2, normalized 0.1
  const auto alloc = allocate_sample_times(set_from_columns({c, d}), state, config, curve);
  const double expected_eps = 0.7 * 0.1 / (std::sqrt(2.0) * 1.3 * 0.95);
  REQUIRE(alloc.target_epsilon[0] == Approx(expected_eps).margin(1e-15));
  REQUIRE(expected_eps == Approx(0.04008).margin(5e-6));
  REQUIRE(alloc.minutes[0] == Approx(curve.time_for_epsilon(expected_eps)).margin(1e-12));

  // a target noisier than the curve's worst point clamps to t_min
  AsCmaState steep = state;
  steep.k_avg = 100.0;
  const auto fast = allocate_sample_times(set_from_columns({c, d}), steep, config, curve);
  REQUIRE(fast.minutes[0] == curve.t_min());
}

TEST_CASE("allocation epsilon matches the direct formula on random inputs") {
  const auto curve = default_noise_curve();
  RandomStream rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    AsCmaConfig config;
    config.beta = rng.uniform(0.5, 3.0);
    config.y_hat_max = 2.0;
    config.y_hat_min = 0.5;
    AsCmaState state;
    state.d_max = rng.uniform(0.5, 4.0);
    state.k_avg = rng.uniform(1e-3, 10.0);
    state.y_avg = rng.uniform(0.1, 100.0);

    Eigen::VectorXd a(3), b(3);
    for (int k = 0; k < 3; ++k) a[k] = rng.uniform(0.2, 0.8);
    b = a;
    b[0] += rng.uniform(0.0, 0.2);
    const auto cs = set_from_columns({a, b});

    const double dist = (a - b).norm() / state.d_max;  // direct re-computation
    const double expected = state.k_avg * dist / (std::sqrt(2.0) * config.beta * state.y_avg);
    const auto alloc = allocate_sample_times(cs, state, config, curve);
    REQUIRE(alloc.target_epsilon[0] == Approx(expected).margin(1e-12));
    REQUIRE(alloc.target_epsilon[1] == Approx(expected).margin(1e-12));
  }
}

TEST_CASE("monotonicity: farther neighbors tolerate more noise, get shorter times") {
  AsCmaConfig config;
  config.y_hat_max = 1.3;
  config.y_hat_min = 0.6;
  AsCmaState state;
  state.d_max = 2.0;
  state.k_avg = 0.7;
  state.y_avg = 0.95;
  const auto curve = default_noise_curve();

  Eigen::VectorXd a(2), b(2), c(2);
  a << 0.05, 0.5;   // tight pair a-b, c far away
  b << 0.10, 0.5;
  c << 0.95, 0.5;
  const auto alloc = allocate_sample_times(set_from_columns({a, b, c}), state, config, curve);
  REQUIRE(alloc.target_epsilon[2] > alloc.target_epsilon[0]);
  REQUIRE(alloc.minutes[2] <= alloc.minutes[0]);
  // proportionality in the nearest distance
  const auto dist = nearest_distances(set_from_columns({a, b, c}), state.d_max);
  REQUIRE(alloc.target_epsilon[2] / alloc.target_epsilon[0] ==
          Approx(dist[2] / dist[0]).margin(1e-12));
}

TEST_CASE("statistic updates") {
  AsCmaState state;
  state.d_max = 1.0;
  state.k_avg = 0.7;
  state.y_avg = 0.95;

  Eigen::VectorXd a(1), b(1), c(1);
  a << 0.0;
  b << 1.0 / 3.0;
  c << 1.0;

  SECTION("flat generation floors the slope and keeps the mean") {
    const auto next = update_stats(set_from_columns({a, b, c}), {2.0, 2.0, 2.0}, state);
    REQUIRE(next.y_avg == Approx(2.0).margin(1e-15));
    REQUIRE(next.k_avg == k_avg_floor);
  }

  SECTION("exact linear cost-distance pattern recovers the slope") {
    // pairwise normalized distances (1, 2, 3) with |dy| = 0.5 * d -> k = 0.5
    AsCmaState narrow = state;
    narrow.d_max = 1.0 / 3.0;
    Eigen::VectorXd p(1), q(1), r(1);
    p << 0.0;
    q << 1.0 / 3.0;
    r << 1.0;
    const std::vector<double> fitness = {0.0, 0.5, 1.5};
    const auto next = update_stats(set_from_columns({p, q, r}), fitness, narrow);
    REQUIRE(next.k_avg == Approx(0.5).epsilon(1e-12));
    REQUIRE(next.y_avg == Approx(2.0 / 3.0).margin(1e-12));
  }

  SECTION("arithmetic mean of fitnesses") {
    const auto next = update_stats(set_from_columns({a, b, c}), {1.0, 2.0, 3.0}, state);
    REQUIRE(next.y_avg == Approx(2.0).margin(1e-15));
  }

  SECTION("coincident generation keeps the previous slope") {
    const auto next = update_stats(set_from_columns({a, a, a}), {1.0, 2.0, 3.0}, state);
    REQUIRE(next.k_avg == state.k_avg);
    REQUIRE(next.y_avg == Approx(2.0).margin(1e-15));
  }

  SECTION("d_max is never touched") {
    const auto next = update_stats(set_from_columns({a, b, c}), {1.0, 2.0, 3.0}, state);
    REQUIRE(next.d_max == state.d_max);
  }
}

TEST_CASE("scale invariance of the allocation") {
  const auto curve = default_noise_curve();
  RandomStream rng(606);
  AsCmaConfig config;
  config.y_hat_max = 1.3;
  config.y_hat_min = 0.6;

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::VectorXd> cols;
    std::vector<double> fitness;
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd x(4);
      for (int d = 0; d < 4; ++d) x[d] = rng.uniform();
      cols.push_back(x);
      fitness.push_back(rng.uniform(0.5, 3.0));
    }
    const auto cs = set_from_columns(cols);

    AsCmaState base;
    base.d_max = 2.0;
    base.k_avg = 0.7;
    base.y_avg = 0.95;
    const double scale = 10.0;
    std::vector<double> scaled_fitness = fitness;
    for (double& f : scaled_fitness) f *= scale;

    const auto updated = update_stats(cs, fitness, base);
    AsCmaState scaled_base = base;
    scaled_base.k_avg *= scale;
    scaled_base.y_avg *= scale;
    const auto scaled_updated = update_stats(cs, scaled_fitness, scaled_base);

    REQUIRE(scaled_updated.k_avg == Approx(scale * updated.k_avg).epsilon(1e-12));
    REQUIRE(scaled_updated.y_avg == Approx(scale * updated.y_avg).epsilon(1e-12));

    const auto alloc = allocate_sample_times(cs, updated, config, curve);
    const auto scaled_alloc = allocate_sample_times(cs, scaled_updated, config, curve);
    for (std::size_t i = 0; i < alloc.minutes.size(); ++i) {
      REQUIRE(scaled_alloc.target_epsilon[i] ==
              Approx(alloc.target_epsilon[i]).epsilon(1e-12));
      REQUIRE(scaled_alloc.minutes[i] == Approx(alloc.minutes[i]).margin(1e-9));
    }
  }
}
