#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ascma/errors.hpp"
#include "ascma/landscapes.hpp"
#include "ascma/random.hpp"

namespace ascma {

struct NoiseAnchor {
  double t_minutes = 0.0;
  double error_sd = 0.0;  // std of multiplicative error, as a fraction of true cost
};

// Maps sample time to the standard deviation of the multiplicative
// measurement error. Between anchors the anchor component decays
// log-linearly; the baseline is an additive floor that never averages away.
// Both directions are analytic, so time_for_epsilon is an exact inverse.
class NoiseCurve {
 public:
  NoiseCurve(std::vector<NoiseAnchor> anchors, double baseline, double t_min, double t_max)
      : anchors_(std::move(anchors)), baseline_(baseline), t_min_(t_min), t_max_(t_max) {
    validate(/*strict=*/true);
  }

  // Curves assembled from measured data may contain flat runs after isotonic
  // flattening (or all-zero anchors for degenerate inputs), so they only get
  // the weak monotonicity check.
  static NoiseCurve fitted(std::vector<NoiseAnchor> anchors, double baseline, double t_min,
                           double t_max) {
    NoiseCurve curve;
    curve.anchors_ = std::move(anchors);
    curve.baseline_ = baseline;
    curve.t_min_ = t_min;
    curve.t_max_ = t_max;
    curve.validate(/*strict=*/false);
    return curve;
  }

  double epsilon_of(double t) const {
    t = std::clamp(t, t_min_, t_max_);
    if (t <= anchors_.front().t_minutes) return anchors_.front().error_sd + baseline_;
    if (t >= anchors_.back().t_minutes) return anchors_.back().error_sd + baseline_;
    std::size_t k = 0;
    while (anchors_[k + 1].t_minutes < t) ++k;
    const double ea = anchors_[k].error_sd;
    const double eb = anchors_[k + 1].error_sd;
    const double w = (t - anchors_[k].t_minutes) / (anchors_[k + 1].t_minutes - anchors_[k].t_minutes);
    const double anchor_part = (ea > 0.0 && eb > 0.0)
                                   ? std::exp((1.0 - w) * std::log(ea) + w * std::log(eb))
                                   : (1.0 - w) * ea + w * eb;
    return anchor_part + baseline_;
  }

  // Inverse of epsilon_of, clamped to [t_min, t_max]: targets cleaner than
  // the longest sample time resolve to t_max, targets worse than the
  // shortest resolve to t_min.
  double time_for_epsilon(double eps) const {
    if (!(eps >= 0.0)) throw InvalidConfigError("time_for_epsilon: eps must be >= 0");
    if (eps <= epsilon_of(t_max_)) return t_max_;
    if (eps >= epsilon_of(t_min_)) return t_min_;
    const double target = eps - baseline_;
    for (std::size_t k = 0; k + 1 < anchors_.size(); ++k) {
      const double ea = anchors_[k].error_sd;
      const double eb = anchors_[k + 1].error_sd;
      if (!(target <= ea && target >= eb)) continue;
      if (ea == eb) return anchors_[k].t_minutes;  // flat run: earliest time attains it
      const double w = (ea > 0.0 && eb > 0.0 && target > 0.0)
                           ? (std::log(target) - std::log(ea)) / (std::log(eb) - std::log(ea))
                           : (target - ea) / (eb - ea);
      return anchors_[k].t_minutes + w * (anchors_[k + 1].t_minutes - anchors_[k].t_minutes);
    }
    return t_max_;
  }

  const std::vector<NoiseAnchor>& anchors() const { return anchors_; }
  double baseline() const { return baseline_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

 private:
  NoiseCurve() = default;

  void validate(bool strict) const {
    if (anchors_.empty()) throw InvalidConfigError("NoiseCurve: needs at least one anchor");
    if (!(baseline_ >= 0.0)) throw InvalidConfigError("NoiseCurve: baseline must be >= 0");
    if (!(t_min_ < t_max_)) throw InvalidConfigError("NoiseCurve: t_min must be < t_max");
    if (!(t_min_ <= anchors_.front().t_minutes) || !(t_max_ >= anchors_.back().t_minutes))
      throw InvalidConfigError("NoiseCurve: clamp bounds must cover the anchor times");
    for (std::size_t k = 0; k < anchors_.size(); ++k) {
      if (!(anchors_[k].error_sd >= 0.0))
        throw InvalidConfigError("NoiseCurve: anchor errors must be >= 0");
      if (k == 0) continue;
      if (!(anchors_[k].t_minutes > anchors_[k - 1].t_minutes))
        throw InvalidConfigError("NoiseCurve: anchor times must be strictly increasing");
      const bool ok = strict ? anchors_[k].error_sd < anchors_[k - 1].error_sd
                             : anchors_[k].error_sd <= anchors_[k - 1].error_sd;
      if (!ok) throw InvalidConfigError("NoiseCurve: anchor errors must decrease with time");
    }
    if (strict && anchors_.size() < 2)
      throw InvalidConfigError("NoiseCurve: needs at least two anchors");
  }

  std::vector<NoiseAnchor> anchors_;
  double baseline_ = 0.0;
  double t_min_ = 0.0;
  double t_max_ = 0.0;
};

// Error model identified from treadmill metabolics trials: 34.2% error at a
// 0.5 minute sample, 0.4% at 5.5 minutes, plus a 3% floor that a finite
// trial can never average away.
inline NoiseCurve default_noise_curve() {
  return NoiseCurve({{0.5, 0.342}, {5.5, 0.004}}, 0.03, 0.5, 5.5);
}

struct MeasurementOutcome {
  double y_true = 0.0;
  double y_noisy = 0.0;
  double t_minutes = 0.0;
  double epsilon = 0.0;  // error std actually applied
};

// One noisy evaluation: y_noisy = y_true * (1 + n), n ~ N(0, epsilon(t)).
inline MeasurementOutcome measure(const Landscape& landscape, const Eigen::VectorXd& x_native,
                                  double t_minutes, const NoiseCurve& curve, RandomStream& rng) {
  const double y_true = evaluate(landscape, x_native);
  if (!std::isfinite(y_true))
    throw LandscapeEvaluationError("measure: non-finite cost from " + landscape.name);
  const double t = std::clamp(t_minutes, curve.t_min(), curve.t_max());
  const double epsilon = curve.epsilon_of(t);
  const double noise = epsilon * rng.gaussian();
  return {y_true, y_true * (1.0 + noise), t, epsilon};
}

// A recorded evaluation trace: instantaneous cost estimates at a fixed
// sampling interval, long enough to cover the largest fitting window.
struct TrialSeries {
  double dt_minutes = 0.0;
  std::vector<double> samples;
};

namespace detail {

inline double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// Pool-adjacent-violators with equal weights, enforcing non-increasing errors.
inline void isotonic_non_increasing(std::vector<NoiseAnchor>& anchors) {
  std::vector<double> value;
  std::vector<int> count;
  for (const auto& anchor : anchors) {
    value.push_back(anchor.error_sd);
    count.push_back(1);
    while (value.size() >= 2 && value[value.size() - 2] < value.back()) {
      const double pooled = (value[value.size() - 2] * count[count.size() - 2] +
                             value.back() * count.back()) /
                            (count[count.size() - 2] + count.back());
      count[count.size() - 2] += count.back();
      value[value.size() - 2] = pooled;
      value.pop_back();
      count.pop_back();
    }
  }
  std::size_t out = 0;
  for (std::size_t block = 0; block < value.size(); ++block)
    for (int k = 0; k < count[block]; ++k) anchors[out++].error_sd = value[block];
}

}  // namespace detail

// Identifies a noise curve from full-length trials: for each window size the
// 0..t estimate of every trial is compared against its full-window estimate,
// and the anchor error is the standard deviation of those relative errors.
inline NoiseCurve fit_noise_curve(const std::vector<TrialSeries>& trials,
                                  std::vector<double> window_grid, double baseline = 0.0) {
  if (trials.size() < 2) throw InsufficientDataError("fit_noise_curve: need at least 2 trials");
  if (window_grid.size() < 2)
    throw InsufficientDataError("fit_noise_curve: need at least 2 window times");
  std::sort(window_grid.begin(), window_grid.end());
  const double t_full = window_grid.back();
  for (const auto& trial : trials) {
    if (!(trial.dt_minutes > 0.0))
      throw InvalidConfigError("fit_noise_curve: trial sample spacing must be > 0");
    if (static_cast<double>(trial.samples.size()) * trial.dt_minutes + 1e-9 < t_full)
      throw InsufficientDataError("fit_noise_curve: trial shorter than the largest window");
  }

  const auto window_mean = [](const TrialSeries& trial, double t_window) {
    const auto limit = static_cast<std::size_t>(std::floor(t_window / trial.dt_minutes + 1e-9));
    const std::size_t n = std::min(trial.samples.size(), limit);
    if (n == 0)
      throw InsufficientDataError("fit_noise_curve: window shorter than one sample spacing");
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += trial.samples[k];
    return sum / static_cast<double>(n);
  };

  std::vector<NoiseAnchor> anchors;
  anchors.reserve(window_grid.size());
  for (double t_window : window_grid) {
    std::vector<double> errors;
    errors.reserve(trials.size());
    for (const auto& trial : trials) {
      const double full = window_mean(trial, t_full);
      if (full == 0.0)
        throw InsufficientDataError("fit_noise_curve: zero full-window estimate");
      errors.push_back((window_mean(trial, t_window) - full) / full);
    }
    anchors.push_back({t_window, detail::sample_std(errors)});
  }
  detail::isotonic_non_increasing(anchors);
  return NoiseCurve::fitted(std::move(anchors), baseline, window_grid.front(), t_full);
}

}  // namespace ascma
