#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ascma/errors.hpp"

namespace ascma {

// Ground-truth test function over a native-unit box, with its known optimum.
struct Landscape {
  std::string name;
  int dim = 0;
  Eigen::VectorXd lower;  // native units
  Eigen::VectorXd upper;
  std::function<double(const Eigen::VectorXd&)> cost;  // native coordinates
  Eigen::VectorXd x_star;                              // native units
  double y_star = 0.0;
};

namespace detail {

inline void check_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper, const std::string& what) {
  if (x.size() != lower.size())
    throw BoundsError(what + ": dimension mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(lower.size()) + ")");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double slack = 1e-12 * std::max(1.0, upper[i] - lower[i]);
    if (!(x[i] >= lower[i] - slack) || !(x[i] <= upper[i] + slack))
      throw BoundsError(what + ": coordinate " + std::to_string(i) + " = " +
                        std::to_string(x[i]) + " outside [" + std::to_string(lower[i]) + ", " +
                        std::to_string(upper[i]) + "]");
  }
}

}  // namespace detail

inline double evaluate(const Landscape& landscape, const Eigen::VectorXd& x_native) {
  detail::check_box(x_native, landscape.lower, landscape.upper, landscape.name + ".evaluate");
  return landscape.cost(x_native);
}

inline std::pair<Eigen::VectorXd, double> true_optimum(const Landscape& landscape) {
  return {landscape.x_star, landscape.y_star};
}

// Affine map between the native box and the unit cube. Round trips are exact
// to within one rounding of the affine arithmetic.
inline Eigen::VectorXd to_unit(const Landscape& landscape, const Eigen::VectorXd& x_native) {
  detail::check_box(x_native, landscape.lower, landscape.upper, landscape.name + ".to_unit");
  return (x_native - landscape.lower).cwiseQuotient(landscape.upper - landscape.lower);
}

inline Eigen::VectorXd from_unit(const Landscape& landscape, const Eigen::VectorXd& x_unit) {
  detail::check_box(x_unit, Eigen::VectorXd::Zero(landscape.dim),
                    Eigen::VectorXd::Ones(landscape.dim), landscape.name + ".from_unit");
  return landscape.lower + x_unit.cwiseProduct(landscape.upper - landscape.lower);
}

inline Landscape make_rosenbrock4() {
  Landscape ls;
  ls.name = "rosenbrock4";
  ls.dim = 4;
  ls.lower = Eigen::VectorXd::Constant(4, -5.12);
  ls.upper = Eigen::VectorXd::Constant(4, 5.12);
  ls.cost = [](const Eigen::VectorXd& x) {
    double sum = 100.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      sum += 100.0 * a * a + b * b;
    }
    return sum;
  };
  ls.x_star = Eigen::VectorXd::Ones(4);
  ls.y_star = ls.cost(ls.x_star);
  return ls;
}

inline Landscape make_levy4() {
  Landscape ls;
  ls.name = "levy4";
  ls.dim = 4;
  ls.lower = Eigen::VectorXd::Constant(4, -10.0);
  ls.upper = Eigen::VectorXd::Constant(4, 10.0);
  ls.cost = [](const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    const auto w = [&x](Eigen::Index i) { return 1.0 + (x[i] - 1.0) / 4.0; };
    const double s1 = std::sin(M_PI * w(0));
    double sum = s1 * s1;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double wi = w(i);
      const double s = std::sin(M_PI * wi + 1.0);
      sum += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * s * s);
    }
    const double wn = w(n - 1);
    const double s2 = std::sin(2.0 * M_PI * wn);
    sum += (wn - 1.0) * (wn - 1.0) * (1.0 + s2 * s2);
    return sum + 10.0;
  };
  ls.x_star = Eigen::VectorXd::Ones(4);
  ls.y_star = ls.cost(ls.x_star);
  return ls;
}

inline Landscape make_sphere20() {
  Landscape ls;
  ls.name = "sphere20";
  ls.dim = 20;
  ls.lower = Eigen::VectorXd::Zero(20);
  ls.upper = Eigen::VectorXd::Ones(20);
  ls.cost = [](const Eigen::VectorXd& x) { return 0.67 + x.squaredNorm(); };
  ls.x_star = Eigen::VectorXd::Zero(20);
  ls.y_star = ls.cost(ls.x_star);
  return ls;
}

// Empirical approximation of the metabolic cost of walking with ankle
// exoskeleton assistance, over (peak torque, peak time, rise time, fall time).
// The optimum sits on the bound box; it was located numerically once
// (tools/derive_ankle_optimum re-derives it) and is pinned here.
inline Landscape make_ankle4() {
  Landscape ls;
  ls.name = "ankle4";
  ls.dim = 4;
  ls.lower = (Eigen::VectorXd(4) << 0.0, 0.1, 0.1, 0.05).finished();
  ls.upper = (Eigen::VectorXd(4) << 1.0, 0.55, 0.4, 0.2).finished();
  ls.cost = [](const Eigen::VectorXd& x) {
    return 1.0 + 0.95 * (std::exp(-x[0]) - 1.0) + (x[1] - 1.0) * (x[1] - 1.0) +
           0.1 * (x[2] - 0.2) * (x[2] - 0.2) + x[3] * x[3];
  };
  ls.x_star = (Eigen::VectorXd(4) << 1.0, 0.55, 0.2, 0.05).finished();
  ls.y_star = ls.cost(ls.x_star);
  return ls;
}

inline const std::map<std::string, Landscape>& landscape_registry() {
  static const std::map<std::string, Landscape> registry = [] {
    std::map<std::string, Landscape> m;
    for (const auto& ls : {make_ankle4(), make_rosenbrock4(), make_levy4(), make_sphere20()})
      m.emplace(ls.name, ls);
    return m;
  }();
  return registry;
}

inline const Landscape& landscape_by_name(const std::string& name) {
  const auto& registry = landscape_registry();
  const auto it = registry.find(name);
  if (it == registry.end()) throw InvalidConfigError("unknown landscape: " + name);
  return it->second;
}

inline std::vector<std::string> landscape_names() {
  std::vector<std::string> names;
  for (const auto& [name, ls] : landscape_registry()) names.push_back(name);
  return names;
}

}  // namespace ascma
