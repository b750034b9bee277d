// Copyright 2026 The prefbed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREFBED_RUNNER_HPP_
#define PREFBED_RUNNER_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefbed/acquisition.hpp"
#include "prefbed/benchmarks.hpp"
#include "prefbed/metrics.hpp"
#include "prefbed/objective_gp.hpp"
#include "prefbed/oracle.hpp"

namespace prefbed {

enum class Method { kHvgpFull, kHvgpMiOnly, kHvgpPrefOnly, kSingleGp, kRandom };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct GpModeConfig {
  GpMode mode = GpMode::kExact;
  int inducing = 32;  // sparse mode only
};

struct ExperimentConfig {
  BenchmarkId benchmark = BenchmarkId::kFireRescue;
  std::vector<Method> methods = {Method::kHvgpFull};
  int budget = 50;  // total oracle queries per run
  int n_init = 10;  // uniform random pairs before any model is fitted
  std::vector<uint64_t> seeds = {0};

  std::string oracle_backend = "synthetic";  // synthetic | llm | interactive
  Vector oracle_weights;  // empty: benchmark default
  double oracle_lambda = 0.0;
  LlmEndpointConfig llm;

  Vector eval_weights;  // empty: benchmark default
  AcquisitionConfig acquisition;
  GpModeConfig gp;
  bool log_timings = false;  // wall_ms in log lines breaks byte reproducibility
  bool snapshots = false;    // emit model JSON per iteration

  void validate() const;
};

// One iteration's provenance. Serialized as a single JSON line.
struct RunRecord {
  int iter = 0;
  uint64_t seed = 0;
  Vector x1, x2, y1, y2;
  int verdict = 1;
  double pref_score_x1 = 0.0, pref_score_x2 = 0.0;
  double best_pref_so_far = 0.0;
  double coverage_so_far = 0.0;
  double wall_ms = 0.0;

  nlohmann::json to_json(bool with_timing) const;
  static RunRecord from_json(const nlohmann::json& doc);
};

struct OracleLogRecord {
  int iter = 0;
  Vector y1, y2;
  int verdict = 1;
  std::string backend;
  std::optional<std::string> raw_response;

  nlohmann::json to_json() const;
};

struct IterationOutput {
  RunRecord record;
  OracleLogRecord oracle_record;
  nlohmann::json model_snapshot;  // null unless cfg.snapshots
};

using RecordSink = std::function<void(const IterationOutput&)>;

struct RunResult {
  std::vector<RunRecord> records;
  bool completed = false;
  std::string abort_reason;
};

// The sequential loop: n_init random pairs, then fit objective + preference
// models on everything seen, propose a pair, evaluate the benchmark twice,
// query the oracle once, append, emit. All randomness is derived from
// (seed, iteration, purpose tag). If `resume` holds records of an earlier
// partial run, their iterations are replayed without oracle queries and
// verified against the regenerated scenarios.
RunResult run_bed(const Benchmark& bench, const ExperimentConfig& cfg,
                  Method method, uint64_t seed, PairOracle& oracle,
                  const RecordSink* sink = nullptr,
                  const std::vector<RunRecord>* resume = nullptr);

// Per-run log: one header line, then record lines.
struct RunLog {
  std::string benchmark;
  std::string method;
  uint64_t seed = 0;
  nlohmann::json header;
  std::vector<RunRecord> records;
};

std::string run_log_filename(const std::string& benchmark,
                             const std::string& method, uint64_t seed);
RunLog read_run_log(const std::string& path);

struct AggregateRow {
  std::string method;
  int iter = 0;
  double best_pref_mean = 0.0, best_pref_std = 0.0;
  double coverage_mean = 0.0, coverage_std = 0.0;
  int runs = 0;
};

// Per method x iteration mean/std across seeds (n-1 divisor; a single run
// reports zero spread). All runs must come from the same benchmark.
std::vector<AggregateRow> aggregate(const std::vector<RunLog>& runs);

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows);

}  // namespace prefbed

#endif  // PREFBED_RUNNER_HPP_
