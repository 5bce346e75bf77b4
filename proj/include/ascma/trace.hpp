#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ascma/errors.hpp"

namespace ascma {

// One measured condition. Mirrors the evaluation-records file column for
// column, so traces round-trip losslessly through CSV.
struct EvaluationRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  int generation = 0;  // 1-based
  Eigen::VectorXd x_unit;
  Eigen::VectorXd x_native;
  double t_minutes = 0.0;
  double epsilon = 0.0;  // error std applied at this sample time
  double y_true = 0.0;
  double y_noisy = 0.0;
  double elapsed_minutes = 0.0;  // cumulative, including this evaluation
};

struct MeanTrajectoryPoint {
  double elapsed_minutes = 0.0;
  double true_cost = 0.0;  // ground-truth cost of the generation's distribution mean
};

struct RunTrace {
  int run_id = 0;
  std::uint64_t seed = 0;
  int lambda = 0;                   // candidates per generation
  int records_per_generation = 0;  // evaluations per generation (> lambda when resampling)
  double budget_minutes = 0.0;
  std::vector<EvaluationRecord> records;
  std::vector<MeanTrajectoryPoint> mean_trajectory;  // one entry per generation
};

namespace detail {

// Shortest exact decimal form; strtod parses it back to the same bits.
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace detail

inline void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const int dim = trace.records.empty() ? 0 : static_cast<int>(trace.records.front().x_unit.size());
  out << "run_id,seed,generation";
  for (int d = 0; d < dim; ++d) out << ",x_unit_" << d;
  for (int d = 0; d < dim; ++d) out << ",x_native_" << d;
  out << ",t_i,epsilon,y_true,y_noisy,elapsed_min\n";
  for (const auto& rec : trace.records) {
    out << rec.run_id << ',' << rec.seed << ',' << rec.generation;
    for (int d = 0; d < dim; ++d) out << ',' << detail::format_double(rec.x_unit[d]);
    for (int d = 0; d < dim; ++d) out << ',' << detail::format_double(rec.x_native[d]);
    out << ',' << detail::format_double(rec.t_minutes) << ','
        << detail::format_double(rec.epsilon) << ',' << detail::format_double(rec.y_true) << ','
        << detail::format_double(rec.y_noisy) << ','
        << detail::format_double(rec.elapsed_minutes) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

// How to regroup a records file into generations: block size and the offset
// of the injected-mean record inside each block. Static and adaptive
// strategies evaluate lambda conditions per generation with the mean last;
// the resampling baseline spends n_total samples with the mean's last
// initial-pass sample at lambda * n0 - 1.
struct TraceReadSpec {
  double budget_minutes = 0.0;
  int lambda = 0;
  int records_per_generation = 0;
  int injected_record_index = 0;
};

inline RunTrace read_trace_csv(const std::filesystem::path& path, const TraceReadSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trace file: " + path.string());
  const auto header = detail::split_csv_line(line);
  int dim = 0;
  for (const auto& name : header)
    if (name.rfind("x_unit_", 0) == 0) ++dim;
  if (header.size() != static_cast<std::size_t>(8 + 2 * dim))
    throw IoError("malformed trace header: " + path.string());

  RunTrace trace;
  trace.budget_minutes = spec.budget_minutes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError("malformed trace row: " + path.string());
    EvaluationRecord rec;
    std::size_t k = 0;
    rec.run_id = std::atoi(fields[k++].c_str());
    rec.seed = std::strtoull(fields[k++].c_str(), nullptr, 10);
    rec.generation = std::atoi(fields[k++].c_str());
    rec.x_unit.resize(dim);
    for (int d = 0; d < dim; ++d) rec.x_unit[d] = std::strtod(fields[k++].c_str(), nullptr);
    rec.x_native.resize(dim);
    for (int d = 0; d < dim; ++d) rec.x_native[d] = std::strtod(fields[k++].c_str(), nullptr);
    rec.t_minutes = std::strtod(fields[k++].c_str(), nullptr);
    rec.epsilon = std::strtod(fields[k++].c_str(), nullptr);
    rec.y_true = std::strtod(fields[k++].c_str(), nullptr);
    rec.y_noisy = std::strtod(fields[k++].c_str(), nullptr);
    rec.elapsed_minutes = std::strtod(fields[k++].c_str(), nullptr);
    trace.records.push_back(std::move(rec));
  }
  if (trace.records.empty()) throw IoError("trace has no records: " + path.string());

  trace.run_id = trace.records.front().run_id;
  trace.seed = trace.records.front().seed;

  // Rebuild the per-generation mean trajectory from the records: each block's
  // injected-mean sample carries f_true(m_g), and the block's final record
  // carries the generation's end time.
  const int block = spec.records_per_generation;
  if (block < 1 || trace.records.size() % static_cast<std::size_t>(block) != 0)
    throw IoError("trace rows do not form whole generations: " + path.string());
  trace.lambda = spec.lambda;
  trace.records_per_generation = block;
  for (std::size_t start = 0; start < trace.records.size();
       start += static_cast<std::size_t>(block)) {
    const auto& injected = trace.records[start + static_cast<std::size_t>(spec.injected_record_index)];
    const auto& last = trace.records[start + static_cast<std::size_t>(block) - 1];
    trace.mean_trajectory.push_back({last.elapsed_minutes, injected.y_true});
  }
  return trace;
}

}  // namespace ascma
