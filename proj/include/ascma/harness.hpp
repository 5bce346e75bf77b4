#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ascma/adaptive_sampling.hpp"
#include "ascma/cma.hpp"
#include "ascma/config.hpp"
#include "ascma/klkg.hpp"
#include "ascma/landscapes.hpp"
#include "ascma/metrics.hpp"
#include "ascma/noise_model.hpp"
#include "ascma/trace.hpp"
#include "ascma/version.hpp"

namespace ascma {

struct StrategyResults {
  StrategySpec spec;
  std::string label;
  std::vector<RunTrace> traces;
  StrategyAggregate aggregate;
};

struct CellFailure {
  std::string strategy_label;
  int run_id = 0;
  std::string message;
};

struct PerturbationInfo {
  std::string target;  // "y_hat" or "noise_curve"
  double error = 0.0;  // multiplicative perturbation applied as (1 + error)
};

struct ResultsStore {
  std::string landscape;
  double budget_minutes = 0.0;
  std::uint64_t seed_base = 0;
  int runs = 0;
  std::string config_digest;
  std::string software_version;
  ThresholdReference threshold_reference = ThresholdReference::initialization;
  std::vector<StrategyResults> strategies;
  std::vector<CellFailure> failures;
  std::map<std::string, PerturbationInfo> perturbations;  // label -> perturbation

  const StrategyResults* find(const std::string& label) const {
    for (const auto& s : strategies)
      if (s.label == label) return &s;
    return nullptr;
  }
};

inline TraceReadSpec trace_read_spec(const StrategySpec& spec, int lambda,
                                     double budget_minutes) {
  TraceReadSpec read;
  read.budget_minutes = budget_minutes;
  read.lambda = lambda;
  if (spec.kind == StrategyKind::klkg) {
    read.records_per_generation = spec.klkg.n_total;
    read.injected_record_index = lambda * spec.klkg.n0 - 1;
  } else {
    read.records_per_generation = lambda;
    read.injected_record_index = lambda - 1;
  }
  return read;
}

// Test and perturbation-study overrides. The allocation curve is what the
// adaptive strategy believes about the noise; the simulator always measures
// with the config's true curve.
struct RunContext {
  const Landscape* landscape = nullptr;
  const NoiseCurve* allocation_curve = nullptr;
  std::optional<AsCmaConfig> ascma_override;
};

// One optimization run: generations execute until the simulated clock
// reaches the budget; a generation that starts inside the budget completes
// fully. Everything is keyed off the given seed, so a (config, seed) pair
// replays byte-identically.
inline RunTrace run_single(const ExperimentConfig& config, const StrategySpec& strategy,
                           std::uint64_t seed, int run_id, const RunContext& ctx = {}) {
  const Landscape& landscape =
      ctx.landscape ? *ctx.landscape : landscape_by_name(config.landscape);
  const CmaParams params = default_params(landscape.dim);
  const NoiseCurve& curve = config.noise_curve;
  const NoiseCurve& allocation_curve =
      ctx.allocation_curve ? *ctx.allocation_curve : config.noise_curve;

  RandomStream init_rng(derive_seed(seed, stream_tag::init));
  Eigen::VectorXd mean0(landscape.dim);
  if (config.init_mode == InitMode::fixed_point) {
    mean0 = config.init_point;
  } else {
    for (int d = 0; d < landscape.dim; ++d) mean0[d] = init_rng.uniform();
  }

  CmaState state = CmaState::initial(mean0, config.sigma0);
  const AsCmaConfig as_config = ctx.ascma_override ? *ctx.ascma_override : strategy.ascma;
  AsCmaState as_state;
  if (strategy.kind == StrategyKind::ascma)
    as_state = init_ascma(Eigen::VectorXd::Zero(landscape.dim),
                          Eigen::VectorXd::Ones(landscape.dim), as_config);
  const double init_d_max = as_state.d_max;

  RandomStream ask_rng(derive_seed(seed, stream_tag::ask));

  RunTrace trace;
  trace.run_id = run_id;
  trace.seed = seed;
  trace.lambda = params.lambda;
  trace.records_per_generation =
      strategy.kind == StrategyKind::klkg ? strategy.klkg.n_total : params.lambda;
  trace.budget_minutes = config.budget_minutes;

  double elapsed = 0.0;
  std::uint64_t eval_index = 0;
  int generation = 0;

  const auto measure_candidate = [&](const CandidateSet& cs, int i, double t) {
    const Eigen::VectorXd x_native = from_unit(landscape, cs.x.col(i));
    RandomStream noise_rng(derive_seed(seed, stream_tag::noise, eval_index));
    const auto outcome = measure(landscape, x_native, t, curve, noise_rng);
    elapsed += outcome.t_minutes;
    ++eval_index;
    EvaluationRecord rec;
    rec.run_id = run_id;
    rec.seed = seed;
    rec.generation = generation;
    rec.x_unit = cs.x.col(i);
    rec.x_native = x_native;
    rec.t_minutes = outcome.t_minutes;
    rec.epsilon = outcome.epsilon;
    rec.y_true = outcome.y_true;
    rec.y_noisy = outcome.y_noisy;
    rec.elapsed_minutes = elapsed;
    trace.records.push_back(std::move(rec));
    return outcome;
  };

  while (elapsed < config.budget_minutes) {
    ++generation;
    const CandidateSet cs = ask(state, params, ask_rng);
    // true cost of the generation's distribution mean (the injected candidate)
    const double mean_true_cost =
        evaluate(landscape, from_unit(landscape, cs.x.col(params.lambda - 1)));

    if (strategy.kind == StrategyKind::klkg) {
      auto result = run_klkg_generation(state, params, strategy.klkg, cs,
                                        [&](int i, double t) { return measure_candidate(cs, i, t); });
      state = std::move(result.next_state);
    } else {
      std::vector<double> times(static_cast<std::size_t>(params.lambda), strategy.t_static);
      if (strategy.kind == StrategyKind::ascma) {
        if (as_state.d_max != init_d_max)
          throw NumericalStateError("run_single: d_max changed during the run");
        times = allocate_sample_times(cs, as_state, as_config, allocation_curve).minutes;
      }
      std::vector<double> fitness(static_cast<std::size_t>(params.lambda), 0.0);
      for (int i = 0; i < params.lambda; ++i)
        fitness[static_cast<std::size_t>(i)] = measure_candidate(cs, i, times[i]).y_noisy;
      state = update(state, params, cs, fitness);
      if (strategy.kind == StrategyKind::ascma)
        as_state = update_stats(cs, fitness, as_state);
    }

    trace.mean_trajectory.push_back({elapsed, mean_true_cost});
  }
  return trace;
}

// Executes strategies x runs; cells are independent and may run in parallel.
// Run r of every strategy shares seed_base + r, so initialization points are
// matched across strategies. Per-cell failures are recorded without aborting
// the sweep.
inline ResultsStore run_sweep(const ExperimentConfig& config, int parallel = 1) {
  validate_config(config);
  const Landscape& landscape = landscape_by_name(config.landscape);

  ResultsStore store;
  store.landscape = config.landscape;
  store.budget_minutes = config.budget_minutes;
  store.seed_base = config.seed_base;
  store.runs = config.runs;
  store.config_digest = config_hash(config);
  store.software_version = version;
  store.threshold_reference = config.threshold_reference;
  for (const auto& spec : config.strategies) {
    StrategyResults results;
    results.spec = spec;
    results.label = spec.label();
    results.traces.resize(static_cast<std::size_t>(config.runs));
    store.strategies.push_back(std::move(results));
  }

  struct Cell {
    std::size_t strategy;
    int run;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < store.strategies.size(); ++s)
    for (int r = 0; r < config.runs; ++r) cells.push_back({s, r});

  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      const auto [s, r] = cells[k];
      try {
        store.strategies[s].traces[static_cast<std::size_t>(r)] =
            run_single(config, store.strategies[s].spec, config.seed_base + r, r);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        store.failures.push_back({store.strategies[s].label, r, e.what()});
      }
    }
  };

  const int n_threads = std::max(1, parallel);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& results : store.strategies) {
    std::vector<RunTrace> completed;
    for (auto& trace : results.traces)
      if (!trace.records.empty()) completed.push_back(std::move(trace));
    results.traces = std::move(completed);
    if (!results.traces.empty())
      results.aggregate = summarize_runs(results.traces, landscape, config.threshold_reference);
  }
  return store;
}

enum class PerturbTarget { y_hat, noise_curve };

inline const char* to_string(PerturbTarget target) {
  return target == PerturbTarget::y_hat ? "y_hat" : "noise_curve";
}

namespace detail {

inline std::string perturb_label(PerturbTarget target, double error) {
  const int pct = static_cast<int>(std::lround(std::abs(error) * 100.0));
  std::ostringstream out;
  out << "ascma_" << (target == PerturbTarget::y_hat ? "yhat" : "curve") << '_'
      << (error < 0 ? 'm' : 'p') << pct;
  return out.str();
}

inline NoiseCurve scale_curve(const NoiseCurve& curve, double factor) {
  std::vector<NoiseAnchor> anchors = curve.anchors();
  for (auto& anchor : anchors) anchor.error_sd *= factor;
  return NoiseCurve(std::move(anchors), curve.baseline() * factor, curve.t_min(),
                    curve.t_max());
}

}  // namespace detail

// Robustness study: feeds the adaptive strategy misestimated inputs (its
// prior cost range, or every value of its noise model) while the simulator
// keeps measuring with the true curve. The zero-error cell is the shared
// unperturbed baseline.
inline ResultsStore perturbation_study(const ExperimentConfig& base,
                                       const std::vector<PerturbTarget>& targets,
                                       const std::vector<double>& errors, int parallel = 1) {
  if (base.strategies.size() != 1 || base.strategies.front().kind != StrategyKind::ascma)
    throw InvalidStudyError("perturbation_study: base strategy must be adaptive sampling");
  validate_config(base);
  const Landscape& landscape = landscape_by_name(base.landscape);
  const StrategySpec base_spec = base.strategies.front();

  struct Variant {
    std::string label;
    std::optional<PerturbationInfo> info;
    AsCmaConfig ascma;
    std::optional<NoiseCurve> allocation_curve;
  };
  std::vector<Variant> variants;
  variants.push_back({base_spec.label(), std::nullopt, base_spec.ascma, std::nullopt});
  for (const auto target : targets) {
    for (const double error : errors) {
      if (error == 0.0) continue;  // covered by the shared baseline
      Variant v;
      v.label = detail::perturb_label(target, error);
      v.info = PerturbationInfo{to_string(target), error};
      v.ascma = base_spec.ascma;
      if (target == PerturbTarget::y_hat) {
        v.ascma.y_hat_max *= 1.0 + error;
        v.ascma.y_hat_min *= 1.0 + error;
      } else {
        v.allocation_curve = detail::scale_curve(base.noise_curve, 1.0 + error);
      }
      variants.push_back(std::move(v));
    }
  }

  ResultsStore store;
  store.landscape = base.landscape;
  store.budget_minutes = base.budget_minutes;
  store.seed_base = base.seed_base;
  store.runs = base.runs;
  store.config_digest = config_hash(base);
  store.software_version = version;
  store.threshold_reference = base.threshold_reference;
  for (const auto& variant : variants) {
    StrategyResults results;
    results.spec = base_spec;
    results.spec.ascma = variant.ascma;
    results.label = variant.label;
    results.traces.resize(static_cast<std::size_t>(base.runs));
    store.strategies.push_back(std::move(results));
    if (variant.info) store.perturbations.emplace(variant.label, *variant.info);
  }

  struct Cell {
    std::size_t variant;
    int run;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (int r = 0; r < base.runs; ++r) cells.push_back({v, r});

  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      const auto [v, r] = cells[k];
      RunContext ctx;
      ctx.ascma_override = variants[v].ascma;
      if (variants[v].allocation_curve) ctx.allocation_curve = &*variants[v].allocation_curve;
      try {
        store.strategies[v].traces[static_cast<std::size_t>(r)] =
            run_single(base, base_spec, base.seed_base + r, r, ctx);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        store.failures.push_back({store.strategies[v].label, r, e.what()});
      }
    }
  };
  const int n_threads = std::max(1, parallel);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& results : store.strategies) {
    std::vector<RunTrace> completed;
    for (auto& trace : results.traces)
      if (!trace.records.empty()) completed.push_back(std::move(trace));
    results.traces = std::move(completed);
    if (!results.traces.empty())
      results.aggregate = summarize_runs(results.traces, landscape, base.threshold_reference);
  }
  return store;
}

// --- persistence ---------------------------------------------------------------

namespace detail {

inline std::string run_file_name(int run_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%04d.csv", run_id);
  return buf;
}

}  // namespace detail

// Lays the store out as out_dir/manifest.json plus one evaluation-records
// CSV per run under out_dir/traces/<label>/.
inline void write_store(const ResultsStore& store, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "traces");
  json manifest;
  manifest["software_version"] = store.software_version;
  manifest["config_digest"] = store.config_digest;
  manifest["landscape"] = store.landscape;
  manifest["budget_minutes"] = store.budget_minutes;
  manifest["convergence_reference"] =
      store.threshold_reference == ThresholdReference::optimum ? "optimum" : "initialization";
  manifest["seed_base"] = store.seed_base;
  manifest["runs"] = store.runs;
  json strategies = json::array();
  for (const auto& results : store.strategies) {
    const auto& first = results.traces.empty() ? RunTrace{} : results.traces.front();
    json entry;
    entry["label"] = results.label;
    entry["spec"] = strategy_to_json(results.spec);
    entry["lambda"] = first.lambda;
    entry["records_per_generation"] = first.records_per_generation;
    strategies.push_back(entry);
    std::filesystem::create_directories(out_dir / "traces" / results.label);
    for (const auto& trace : results.traces)
      write_trace_csv(trace, out_dir / "traces" / results.label /
                                 detail::run_file_name(trace.run_id));
  }
  manifest["strategies"] = strategies;
  if (!store.perturbations.empty()) {
    json perturbations;
    for (const auto& [label, info] : store.perturbations)
      perturbations[label] = {{"target", info.target}, {"error", info.error}};
    manifest["perturbations"] = perturbations;
  }
  if (!store.failures.empty()) {
    json failures = json::array();
    for (const auto& failure : store.failures)
      failures.push_back({{"strategy", failure.strategy_label},
                          {"run", failure.run_id},
                          {"message", failure.message}});
    manifest["failures"] = failures;
  }
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
}

// Rebuilds a store (traces and aggregates) from a directory written by
// write_store; this is the `analyze` path.
inline ResultsStore read_store(const std::filesystem::path& out_dir) {
  const auto manifest_path = out_dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("manifest parse error: " + std::string(e.what()));
  }

  ResultsStore store;
  store.software_version = manifest.value("software_version", "");
  store.config_digest = manifest.value("config_digest", "");
  store.landscape = manifest.at("landscape").get<std::string>();
  store.budget_minutes = manifest.at("budget_minutes").get<double>();
  store.seed_base = manifest.value("seed_base", std::uint64_t{0});
  store.runs = manifest.value("runs", 0);
  store.threshold_reference =
      manifest.value("convergence_reference", std::string("initialization")) == "optimum"
          ? ThresholdReference::optimum
          : ThresholdReference::initialization;
  const Landscape& landscape = landscape_by_name(store.landscape);

  for (const auto& entry : manifest.at("strategies")) {
    StrategyResults results;
    results.label = entry.at("label").get<std::string>();
    results.spec = strategy_from_json(entry.at("spec"), store.landscape);
    TraceReadSpec read;
    read.budget_minutes = store.budget_minutes;
    read.lambda = entry.at("lambda").get<int>();
    read.records_per_generation = entry.at("records_per_generation").get<int>();
    read.injected_record_index =
        results.spec.kind == StrategyKind::klkg
            ? read.lambda * results.spec.klkg.n0 - 1
            : read.lambda - 1;
    const auto dir = out_dir / "traces" / results.label;
    std::vector<std::filesystem::path> files;
    for (const auto& file : std::filesystem::directory_iterator(dir))
      if (file.path().extension() == ".csv") files.push_back(file.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) results.traces.push_back(read_trace_csv(file, read));
    if (!results.traces.empty())
      results.aggregate = summarize_runs(results.traces, landscape, store.threshold_reference);
    store.strategies.push_back(std::move(results));
  }
  if (manifest.contains("perturbations"))
    for (const auto& [label, info] : manifest.at("perturbations").items())
      store.perturbations.emplace(label, PerturbationInfo{info.at("target").get<std::string>(),
                                                          info.at("error").get<double>()});
  return store;
}

// --- reporting -------------------------------------------------------------------

inline constexpr const char* reference_label = "ascma";

namespace detail {

inline json threshold_to_json(const ThresholdAggregate& agg) {
  return {{"mean_time_min", agg.mean_time},        {"std_time_min", agg.std_time},
          {"mean_cost", agg.mean_cost},            {"std_cost", agg.std_cost},
          {"reliability_pct", agg.reliability_pct}, {"n_converged", agg.n_converged},
          {"n_runs", agg.n_runs()}};
}

inline std::optional<double> strategy_mean_rho(const StrategyResults& results) {
  double sum = 0.0;
  int n = 0;
  for (const auto& trace : results.traces) {
    if (const auto rho = run_mean_sorting_accuracy(trace)) {
      sum += *rho;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline double strategy_mean_sample_time(const StrategyResults& results) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& trace : results.traces)
    for (const auto& rec : trace.records) {
      sum += rec.t_minutes;
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace detail

// Aggregate report: per-strategy six-metric table with significance tests
// against the adaptive reference, the best-static selection, perturbation
// deltas when present, and a power analysis for the headline comparison.
inline json build_report(const ResultsStore& store) {
  if (store.strategies.empty()) throw InvalidConfigError("report: empty store");
  bool any_traces = false;
  for (const auto& results : store.strategies) any_traces |= !results.traces.empty();
  if (!any_traces) throw InvalidConfigError("report: store has no traces");

  const StrategyResults* reference = store.find(reference_label);
  if (reference && reference->traces.empty()) reference = nullptr;

  json report;
  report["landscape"] = store.landscape;
  report["budget_minutes"] = store.budget_minutes;
  report["seed_base"] = store.seed_base;
  report["runs"] = store.runs;
  report["config_digest"] = store.config_digest;
  report["software_version"] = store.software_version;
  if (reference) report["reference"] = reference->label;

  json strategies = json::array();
  std::map<std::string, StrategyAggregate> static_aggregates;
  for (const auto& results : store.strategies) {
    if (results.traces.empty()) continue;
    json entry;
    entry["label"] = results.label;
    entry["kind"] = to_string(results.spec.kind);
    entry["n_runs"] = static_cast<int>(results.traces.size());
    entry["coarse"] = detail::threshold_to_json(results.aggregate.coarse);
    entry["fine"] = detail::threshold_to_json(results.aggregate.fine);
    if (const auto rho = detail::strategy_mean_rho(results))
      entry["mean_sorting_accuracy"] = *rho;
    entry["mean_sample_time_min"] = detail::strategy_mean_sample_time(results);
    if (reference) {
      const auto score = score_strategy(results.aggregate, reference->aggregate);
      entry["score"] = {{"time_coarse", score.time_coarse},
                        {"time_fine", score.time_fine},
                        {"cost_coarse", score.cost_coarse},
                        {"cost_fine", score.cost_fine},
                        {"reliability_coarse", score.reliability_coarse},
                        {"reliability_fine", score.reliability_fine},
                        {"total", score.total}};
      if (&results != reference) {
        json tests;
        const auto add_test = [&tests](const char* name, const std::vector<double>& a,
                                       const std::vector<double>& b) {
          if (a.size() < 2 || b.size() < 2) return;
          if (const auto result = t_test_two_tailed(a, b)) {
            tests[name] = {{"t", result->t}, {"df", result->df}, {"p", result->p}};
          }
        };
        add_test("time_coarse", results.aggregate.coarse.times, reference->aggregate.coarse.times);
        add_test("time_fine", results.aggregate.fine.times, reference->aggregate.fine.times);
        add_test("cost_coarse", results.aggregate.coarse.costs, reference->aggregate.coarse.costs);
        add_test("cost_fine", results.aggregate.fine.costs, reference->aggregate.fine.costs);
        if (!tests.empty()) entry["t_tests_vs_reference"] = tests;
      }
    }
    if (results.spec.kind == StrategyKind::static_time && !results.traces.empty())
      static_aggregates.emplace(results.label, results.aggregate);
    strategies.push_back(std::move(entry));
  }
  report["strategies"] = strategies;

  if (reference && !static_aggregates.empty()) {
    const std::string best = select_best_static(static_aggregates, reference->aggregate);
    report["best_static"] = best;
    const auto& best_agg = static_aggregates.at(best);
    if (best_agg.fine.times.size() >= 2 && reference->aggregate.fine.times.size() >= 2 &&
        best_agg.fine.std_time > 0.0 && reference->aggregate.fine.std_time > 0.0 &&
        best_agg.fine.mean_time != reference->aggregate.fine.mean_time) {
      if (const auto size = required_sample_size(
              best_agg.fine.mean_time, best_agg.fine.std_time,
              reference->aggregate.fine.mean_time, reference->aggregate.fine.std_time, 0.05,
              0.8)) {
        report["power_analysis_fine_time"] = {{"alpha", 0.05},
                                              {"power", 0.8},
                                              {"n_per_group", size->n_per_group},
                                              {"n_total", size->n_total}};
      }
    }
  }

  if (!store.perturbations.empty() && reference) {
    json deltas = json::array();
    for (const auto& [label, info] : store.perturbations) {
      const StrategyResults* perturbed = store.find(label);
      if (!perturbed || perturbed->traces.empty()) continue;
      const auto pct = [](double value, double base) {
        return base != 0.0 ? 100.0 * (value - base) / base : 0.0;
      };
      deltas.push_back(
          {{"label", label},
           {"target", info.target},
           {"error", info.error},
           {"delta_time_coarse_pct", pct(perturbed->aggregate.coarse.mean_time,
                                         reference->aggregate.coarse.mean_time)},
           {"delta_time_fine_pct",
            pct(perturbed->aggregate.fine.mean_time, reference->aggregate.fine.mean_time)},
           {"delta_cost_coarse_pct", pct(perturbed->aggregate.coarse.mean_cost,
                                         reference->aggregate.coarse.mean_cost)},
           {"delta_cost_fine_pct",
            pct(perturbed->aggregate.fine.mean_cost, reference->aggregate.fine.mean_cost)}});
    }
    report["perturbation_deltas"] = deltas;
  }

  if (!store.failures.empty()) {
    json failures = json::array();
    for (const auto& failure : store.failures)
      failures.push_back({{"strategy", failure.strategy_label},
                          {"run", failure.run_id},
                          {"message", failure.message}});
    report["failures"] = failures;
  }
  return report;
}

inline void write_report(const ResultsStore& store, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const json report = build_report(store);
  {
    std::ofstream out(out_dir / "report.json", std::ios::binary);
    if (!out) throw IoError("cannot write report in " + out_dir.string());
    out << report.dump(2) << '\n';
  }
  std::ofstream table(out_dir / "summary_table.csv", std::ios::binary);
  if (!table) throw IoError("cannot write summary table in " + out_dir.string());
  table << "strategy,kind,n_runs,coarse_reliability_pct,fine_reliability_pct,"
           "coarse_mean_time_min,fine_mean_time_min,coarse_mean_cost,fine_mean_cost,"
           "mean_sorting_accuracy,mean_sample_time_min,score_total\n";
  for (const auto& entry : report.at("strategies")) {
    table << entry.at("label").get<std::string>() << ',' << entry.at("kind").get<std::string>()
          << ',' << entry.at("n_runs").get<int>() << ','
          << detail::format_double(entry.at("coarse").at("reliability_pct").get<double>()) << ','
          << detail::format_double(entry.at("fine").at("reliability_pct").get<double>()) << ','
          << detail::format_double(entry.at("coarse").at("mean_time_min").get<double>()) << ','
          << detail::format_double(entry.at("fine").at("mean_time_min").get<double>()) << ','
          << detail::format_double(entry.at("coarse").at("mean_cost").get<double>()) << ','
          << detail::format_double(entry.at("fine").at("mean_cost").get<double>()) << ','
          << (entry.contains("mean_sorting_accuracy")
                  ? detail::format_double(entry.at("mean_sorting_accuracy").get<double>())
                  : std::string())
          << ',' << detail::format_double(entry.at("mean_sample_time_min").get<double>()) << ','
          << (entry.contains("score")
                  ? detail::format_double(entry.at("score").at("total").get<double>())
                  : std::string())
          << '\n';
  }
}

// Step-interpolated mean trajectory, per-generation sorting accuracy, and
// per-generation selected-time series: the data behind the paper-style plots.
inline void write_plot_data(const ResultsStore& store, const std::filesystem::path& out_dir) {
  if (store.strategies.empty()) throw InvalidConfigError("plot-data: empty store");
  const auto plot_dir = out_dir / "plot";
  std::filesystem::create_directories(plot_dir);
  const Landscape& landscape = landscape_by_name(store.landscape);

  for (const auto& results : store.strategies) {
    if (results.traces.empty()) continue;

    {
      std::ofstream out(plot_dir / ("trajectory_" + results.label + ".csv"), std::ios::binary);
      out << "time_min,mean_true_cost,mean_cost_over_y_star,mean_cost_norm_init\n";
      const double step = std::max(1.0, store.budget_minutes / 600.0);
      for (double t = 0.0; t <= store.budget_minutes + 1e-9; t += step) {
        double sum = 0.0, sum_norm = 0.0;
        for (const auto& trace : results.traces) {
          // value of the last generation completed by time t; before the
          // first generation this is the initialization cost
          double value = trace.mean_trajectory.front().true_cost;
          for (const auto& point : trace.mean_trajectory) {
            if (point.elapsed_minutes <= t) value = point.true_cost;
            else break;
          }
          sum += value;
          sum_norm += value / trace.mean_trajectory.front().true_cost;
        }
        const double n = static_cast<double>(results.traces.size());
        out << detail::format_double(t) << ',' << detail::format_double(sum / n) << ','
            << detail::format_double(sum / n / landscape.y_star) << ','
            << detail::format_double(sum_norm / n) << '\n';
      }
    }

    {
      std::ofstream out(plot_dir / ("sorting_" + results.label + ".csv"), std::ios::binary);
      out << "generation,mean_rho,n_runs\n";
      std::vector<std::pair<double, int>> acc;  // sum, count per generation index
      for (const auto& trace : results.traces) {
        const auto rhos = per_generation_sorting_accuracy(trace);
        if (rhos.size() > acc.size()) acc.resize(rhos.size(), {0.0, 0});
        for (std::size_t g = 0; g < rhos.size(); ++g)
          if (rhos[g]) {
            acc[g].first += *rhos[g];
            acc[g].second += 1;
          }
      }
      for (std::size_t g = 0; g < acc.size(); ++g)
        if (acc[g].second > 0)
          out << (g + 1) << ',' << detail::format_double(acc[g].first / acc[g].second) << ','
              << acc[g].second << '\n';
    }

    {
      std::ofstream out(plot_dir / ("times_" + results.label + ".csv"), std::ios::binary);
      out << "generation,mean_t_min,std_t_min,n_runs\n";
      std::vector<std::vector<double>> times;  // per generation index, across runs
      for (const auto& trace : results.traces) {
        const auto means = per_generation_mean_time(trace);
        if (means.size() > times.size()) times.resize(means.size());
        for (std::size_t g = 0; g < means.size(); ++g) times[g].push_back(means[g]);
      }
      for (std::size_t g = 0; g < times.size(); ++g) {
        out << (g + 1) << ',' << detail::format_double(detail::mean_of(times[g])) << ','
            << detail::format_double(detail::sample_std_of(times[g])) << ','
            << times[g].size() << '\n';
      }
    }
  }
}

}  // namespace ascma
