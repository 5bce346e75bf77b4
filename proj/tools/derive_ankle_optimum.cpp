// Re-derives the pinned optimum of the ankle landscape numerically: a dense
// grid over the bound box followed by coordinate-descent refinement. The
// resulting point and cost are printed next to the stored constants so drift
// is obvious.

#include <cstdio>
#include <Eigen/Dense>

#include "ascma/landscapes.hpp"

int main() {
  const ascma::Landscape ankle = ascma::make_ankle4();

  // dense grid
  constexpr int steps = 41;
  Eigen::VectorXd best(4);
  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(4);
  for (int a = 0; a < steps; ++a) {
    x[0] = ankle.lower[0] + (ankle.upper[0] - ankle.lower[0]) * a / (steps - 1);
    for (int b = 0; b < steps; ++b) {
      x[1] = ankle.lower[1] + (ankle.upper[1] - ankle.lower[1]) * b / (steps - 1);
      for (int c = 0; c < steps; ++c) {
        x[2] = ankle.lower[2] + (ankle.upper[2] - ankle.lower[2]) * c / (steps - 1);
        for (int d = 0; d < steps; ++d) {
          x[3] = ankle.lower[3] + (ankle.upper[3] - ankle.lower[3]) * d / (steps - 1);
          const double cost = ankle.cost(x);
          if (cost < best_cost) {
            best_cost = cost;
            best = x;
          }
        }
      }
    }
  }

  // coordinate descent with shrinking step
  for (double step = 0.05; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int d = 0; d < 4; ++d) {
        for (const double direction : {-1.0, 1.0}) {
          Eigen::VectorXd candidate = best;
          candidate[d] = std::clamp(candidate[d] + direction * step * (ankle.upper[d] - ankle.lower[d]),
                                    ankle.lower[d], ankle.upper[d]);
          const double cost = ankle.cost(candidate);
          if (cost < best_cost) {
            best_cost = cost;
            best = candidate;
            improved = true;
          }
        }
      }
    }
  }

  std::printf("derived x* = (%.12f, %.12f, %.12f, %.12f)\n", best[0], best[1], best[2], best[3]);
  std::printf("derived y* = %.15f\n", best_cost);
  std::printf("stored  x* = (%.12f, %.12f, %.12f, %.12f)\n", ankle.x_star[0], ankle.x_star[1],
              ankle.x_star[2], ankle.x_star[3]);
  std::printf("stored  y* = %.15f\n", ankle.y_star);
  const double dx = (best - ankle.x_star).norm();
  std::printf("|dx| = %.3e, dy = %.3e\n", dx, best_cost - ankle.y_star);
  return dx < 1e-6 && std::abs(best_cost - ankle.y_star) < 1e-9 ? 0 : 1;
}
