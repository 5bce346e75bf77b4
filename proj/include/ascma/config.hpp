#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ascma/adaptive_sampling.hpp"
#include "ascma/errors.hpp"
#include "ascma/klkg.hpp"
#include "ascma/landscapes.hpp"
#include "ascma/metrics.hpp"
#include "ascma/noise_model.hpp"

namespace ascma {

using json = nlohmann::json;

enum class StrategyKind { static_time, ascma, klkg };

inline const char* to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::static_time: return "static";
    case StrategyKind::ascma: return "ascma";
    case StrategyKind::klkg: return "klkg";
  }
  return "static";
}

struct StrategySpec {
  StrategyKind kind = StrategyKind::ascma;
  double t_static = 2.0;  // static and klkg sampling
  AsCmaConfig ascma;
  KlkgConfig klkg;

  std::string label() const {
    std::ostringstream out;
    switch (kind) {
      case StrategyKind::static_time:
        out << "static_" << t_static;
        break;
      case StrategyKind::ascma:
        out << "ascma";
        break;
      case StrategyKind::klkg:
        out << "klkg_" << klkg.t_static;
        break;
    }
    return out.str();
  }
};

enum class InitMode { uniform_random, fixed_point };

struct ExperimentConfig {
  std::string landscape = "ankle4";
  std::vector<StrategySpec> strategies;
  NoiseCurve noise_curve = default_noise_curve();
  int runs = 1;
  std::uint64_t seed_base = 1;
  double budget_minutes = 0.0;  // 0 resolves from the landscape dimension
  InitMode init_mode = InitMode::uniform_random;
  bool init_mode_explicit = false;
  Eigen::VectorXd init_point;  // unit coordinates, fixed_point mode
  double sigma0 = 0.3;
  // what the convergence-band fraction multiplies: the run's initialization
  // cost (the scale the benchmark figures are normalized to) or y* itself
  ThresholdReference threshold_reference = ThresholdReference::initialization;
  std::string output_dir = "out";
};

// Recommended prior cost ranges for the bundled landscapes: deliberately
// rough, the way an experimenter would guess them before a run.
inline AsCmaConfig default_ascma_config(const std::string& landscape_name) {
  AsCmaConfig config;
  if (landscape_name == "rosenbrock4") {
    config.y_hat_min = 0.0;
    config.y_hat_max = 1000.0;
  } else if (landscape_name == "levy4") {
    config.y_hat_min = 0.0;
    config.y_hat_max = 250.0;
  } else {  // ankle4, sphere20, and anything of similar magnitude
    config.y_hat_min = 0.6;
    config.y_hat_max = 1.3;
  }
  return config;
}

inline double default_budget_minutes(int dim) { return dim >= 10 ? 1500.0 : 600.0; }

// The moderate-cost fixed starting point used for the exoskeleton landscape.
inline Eigen::VectorXd default_fixed_init(int dim) {
  return Eigen::VectorXd::Constant(dim, 0.5);
}

// The 0.5..5.5 minute grid of static sampling strategies in 0.5 steps.
inline std::vector<StrategySpec> default_static_grid() {
  std::vector<StrategySpec> grid;
  for (int k = 0; k <= 10; ++k) {
    StrategySpec spec;
    spec.kind = StrategyKind::static_time;
    spec.t_static = 0.5 + 0.5 * k;
    grid.push_back(spec);
  }
  return grid;
}

// --- json <-> struct ---------------------------------------------------------

inline json noise_curve_to_json(const NoiseCurve& curve) {
  json anchors = json::array();
  for (const auto& anchor : curve.anchors())
    anchors.push_back({anchor.t_minutes, anchor.error_sd});
  return {{"anchors", anchors},
          {"baseline", curve.baseline()},
          {"t_min", curve.t_min()},
          {"t_max", curve.t_max()}};
}

inline NoiseCurve noise_curve_from_json(const json& j) {
  try {
    std::vector<NoiseAnchor> anchors;
    for (const auto& entry : j.at("anchors"))
      anchors.push_back({entry.at(0).get<double>(), entry.at(1).get<double>()});
    return NoiseCurve(std::move(anchors), j.value("baseline", 0.0),
                      j.at("t_min").get<double>(), j.at("t_max").get<double>());
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("noise_curve: ") + e.what());
  }
}

inline json strategy_to_json(const StrategySpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  switch (spec.kind) {
    case StrategyKind::static_time:
      j["t_static"] = spec.t_static;
      break;
    case StrategyKind::ascma:
      j["beta"] = spec.ascma.beta;
      j["y_hat_max"] = spec.ascma.y_hat_max;
      j["y_hat_min"] = spec.ascma.y_hat_min;
      break;
    case StrategyKind::klkg:
      j["n0"] = spec.klkg.n0;
      j["n_total"] = spec.klkg.n_total;
      j["t_static"] = spec.klkg.t_static;
      break;
  }
  return j;
}

inline StrategySpec strategy_from_json(const json& j, const std::string& landscape_name) {
  StrategySpec spec;
  const std::string kind = j.value("kind", "ascma");
  if (kind == "static") {
    spec.kind = StrategyKind::static_time;
    if (!j.contains("t_static"))
      throw InvalidConfigError("strategy: static requires t_static");
    spec.t_static = j.at("t_static").get<double>();
  } else if (kind == "ascma") {
    spec.kind = StrategyKind::ascma;
    spec.ascma = default_ascma_config(landscape_name);
    spec.ascma.beta = j.value("beta", spec.ascma.beta);
    spec.ascma.y_hat_max = j.value("y_hat_max", spec.ascma.y_hat_max);
    spec.ascma.y_hat_min = j.value("y_hat_min", spec.ascma.y_hat_min);
  } else if (kind == "klkg") {
    spec.kind = StrategyKind::klkg;
    spec.klkg.n0 = j.value("n0", 1);
    spec.klkg.n_total = j.value("n_total", 20);
    if (!j.contains("t_static"))
      throw InvalidConfigError("strategy: klkg requires t_static");
    spec.klkg.t_static = j.at("t_static").get<double>();
  } else {
    throw InvalidConfigError("strategy: unknown kind '" + kind + "'");
  }
  return spec;
}

inline json config_to_json(const ExperimentConfig& config) {
  json strategies = json::array();
  for (const auto& spec : config.strategies) strategies.push_back(strategy_to_json(spec));
  json init;
  if (config.init_mode == InitMode::fixed_point) {
    init["mode"] = "fixed";
    init["point"] = std::vector<double>(config.init_point.data(),
                                        config.init_point.data() + config.init_point.size());
  } else {
    init["mode"] = "uniform";
  }
  return {{"landscape", config.landscape},
          {"strategies", strategies},
          {"convergence_reference",
           config.threshold_reference == ThresholdReference::optimum ? "optimum"
                                                                     : "initialization"},
          {"noise_curve", noise_curve_to_json(config.noise_curve)},
          {"runs", config.runs},
          {"seed_base", config.seed_base},
          {"budget_minutes", config.budget_minutes},
          {"initialization", init},
          {"sigma0", config.sigma0},
          {"output", config.output_dir}};
}

inline void validate_config(const ExperimentConfig& config) {
  const Landscape& landscape = landscape_by_name(config.landscape);
  if (config.strategies.empty())
    throw InvalidConfigError("config: at least one strategy is required");
  if (config.runs < 1) throw InvalidConfigError("config: runs must be >= 1");
  if (!(config.budget_minutes > 0.0))
    throw InvalidConfigError("config: budget_minutes must be > 0");
  if (!(config.sigma0 > 0.0)) throw InvalidConfigError("config: sigma0 must be > 0");
  if (config.init_mode == InitMode::fixed_point) {
    if (config.init_point.size() != landscape.dim)
      throw InvalidConfigError("config: initialization point has wrong dimension");
    for (Eigen::Index i = 0; i < config.init_point.size(); ++i)
      if (!(config.init_point[i] >= 0.0 && config.init_point[i] <= 1.0))
        throw InvalidConfigError("config: initialization point must lie in the unit cube");
  }
  const auto check_time = [&config](double t, const char* who) {
    if (!(t >= config.noise_curve.t_min() && t <= config.noise_curve.t_max()))
      throw InvalidConfigError(std::string("config: ") + who +
                               " sample time outside the noise-curve bounds");
  };
  const int lambda = default_params(landscape.dim).lambda;
  for (const auto& spec : config.strategies) {
    switch (spec.kind) {
      case StrategyKind::static_time:
        check_time(spec.t_static, "static");
        break;
      case StrategyKind::ascma:
        if (!(spec.ascma.beta > 0.0)) throw InvalidConfigError("config: beta must be > 0");
        if (!(spec.ascma.y_hat_max > spec.ascma.y_hat_min))
          throw InvalidConfigError("config: y_hat_max must exceed y_hat_min");
        break;
      case StrategyKind::klkg:
        check_time(spec.klkg.t_static, "klkg");
        if (spec.klkg.n0 < 1) throw InvalidConfigError("config: klkg n0 must be >= 1");
        if (spec.klkg.n_total < lambda * spec.klkg.n0)
          throw InvalidConfigError("config: klkg n_total must cover lambda * n0 initial samples");
        break;
    }
  }
}

// Fills landscape-dependent defaults (budget, initialization mode) and
// validates the result.
inline void resolve_defaults(ExperimentConfig& config) {
  const Landscape& landscape = landscape_by_name(config.landscape);
  if (config.budget_minutes <= 0.0)
    config.budget_minutes = default_budget_minutes(landscape.dim);
  if (!config.init_mode_explicit) {
    if (config.landscape == "ankle4") {
      config.init_mode = InitMode::fixed_point;
      config.init_point = default_fixed_init(landscape.dim);
    } else {
      config.init_mode = InitMode::uniform_random;
    }
  }
  validate_config(config);
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig config;
  try {
    config.landscape = j.at("landscape").get<std::string>();
    if (j.contains("strategies"))
      for (const auto& entry : j.at("strategies"))
        config.strategies.push_back(strategy_from_json(entry, config.landscape));
    if (j.contains("strategy"))
      config.strategies.push_back(strategy_from_json(j.at("strategy"), config.landscape));
    if (j.contains("noise_curve")) config.noise_curve = noise_curve_from_json(j.at("noise_curve"));
    config.runs = j.value("runs", 1);
    config.seed_base = j.value("seed_base", std::uint64_t{1});
    config.budget_minutes = j.value("budget_minutes", 0.0);
    if (j.contains("budget_minutes") && !(config.budget_minutes > 0.0))
      throw InvalidConfigError("config: budget_minutes must be > 0");
    if (j.contains("initialization")) {
      const auto& init = j.at("initialization");
      const std::string mode = init.value("mode", "uniform");
      config.init_mode_explicit = true;
      if (mode == "uniform") {
        config.init_mode = InitMode::uniform_random;
      } else if (mode == "fixed") {
        config.init_mode = InitMode::fixed_point;
        const auto point = init.at("point").get<std::vector<double>>();
        config.init_point =
            Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
      } else {
        throw InvalidConfigError("config: unknown initialization mode '" + mode + "'");
      }
    }
    config.sigma0 = j.value("sigma0", 0.3);
    if (j.contains("convergence_reference")) {
      const std::string ref = j.at("convergence_reference").get<std::string>();
      if (ref == "initialization") config.threshold_reference = ThresholdReference::initialization;
      else if (ref == "optimum") config.threshold_reference = ThresholdReference::optimum;
      else throw InvalidConfigError("config: unknown convergence_reference '" + ref + "'");
    }
    config.output_dir = j.value("output", std::string("out"));
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("config: ") + e.what());
  }
  resolve_defaults(config);
  return config;
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// FNV-1a over the canonical serialized config; stored as provenance.
inline std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ascma
