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

#include "prefbed/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "prefbed/preference_gp.hpp"

namespace prefbed {

namespace {
// Purpose tags for child-seed derivation (see derive_seed).
constexpr uint64_t kTagInitPair = 0x11;
constexpr uint64_t kTagOracle = 0x22;
constexpr uint64_t kTagAcquisition = 0x33;
constexpr uint64_t kTagFitObjective = 0x44;
}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kHvgpFull:
      return "hvgp_full";
    case Method::kHvgpMiOnly:
      return "hvgp_mi_only";
    case Method::kHvgpPrefOnly:
      return "hvgp_pref_only";
    case Method::kSingleGp:
      return "single_gp";
    case Method::kRandom:
      return "random";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "hvgp_full") return Method::kHvgpFull;
  if (name == "hvgp_mi_only") return Method::kHvgpMiOnly;
  if (name == "hvgp_pref_only") return Method::kHvgpPrefOnly;
  if (name == "single_gp") return Method::kSingleGp;
  if (name == "random") return Method::kRandom;
  throw ContractViolation("unknown method: " + name);
}

void ExperimentConfig::validate() const {
  require(n_init >= 1, "ExperimentConfig: n_init must be >= 1");
  require(budget >= n_init, "ExperimentConfig: budget must be >= n_init");
  require(!seeds.empty(), "ExperimentConfig: need at least one seed");
  require(!methods.empty(), "ExperimentConfig: need at least one method");
  acquisition.validate();
  if (gp.mode == GpMode::kSparseVariational)
    require(gp.inducing >= 1, "ExperimentConfig: inducing must be >= 1");
}

// ---------------------------------------------------------------------------
// Record serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vec_from(const nlohmann::json& doc) {
  Vector v(doc.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = doc[i].get<double>();
  return v;
}

}  // namespace

nlohmann::json RunRecord::to_json(bool with_timing) const {
  nlohmann::json doc;
  doc["type"] = "record";
  doc["iter"] = iter;
  doc["seed"] = seed;
  doc["x1"] = vec_json(x1);
  doc["x2"] = vec_json(x2);
  doc["y1"] = vec_json(y1);
  doc["y2"] = vec_json(y2);
  doc["verdict"] = verdict;
  doc["pref_score_x1"] = pref_score_x1;
  doc["pref_score_x2"] = pref_score_x2;
  doc["best_pref_so_far"] = best_pref_so_far;
  doc["coverage_so_far"] = coverage_so_far;
  if (with_timing) doc["wall_ms"] = wall_ms;
  return doc;
}

RunRecord RunRecord::from_json(const nlohmann::json& doc) {
  RunRecord rec;
  rec.iter = doc.at("iter").get<int>();
  rec.seed = doc.at("seed").get<uint64_t>();
  rec.x1 = vec_from(doc.at("x1"));
  rec.x2 = vec_from(doc.at("x2"));
  rec.y1 = vec_from(doc.at("y1"));
  rec.y2 = vec_from(doc.at("y2"));
  rec.verdict = doc.at("verdict").get<int>();
  rec.pref_score_x1 = doc.at("pref_score_x1").get<double>();
  rec.pref_score_x2 = doc.at("pref_score_x2").get<double>();
  rec.best_pref_so_far = doc.at("best_pref_so_far").get<double>();
  rec.coverage_so_far = doc.at("coverage_so_far").get<double>();
  if (doc.contains("wall_ms")) rec.wall_ms = doc["wall_ms"].get<double>();
  return rec;
}

nlohmann::json OracleLogRecord::to_json() const {
  nlohmann::json doc;
  doc["iter"] = iter;
  doc["y1"] = vec_json(y1);
  doc["y2"] = vec_json(y2);
  doc["verdict"] = verdict;
  doc["backend"] = backend;
  if (raw_response.has_value()) doc["raw_response"] = *raw_response;
  return doc;
}

// ---------------------------------------------------------------------------
// The sequential loop
// ---------------------------------------------------------------------------

namespace {

AcquisitionMode mode_for(Method method) {
  switch (method) {
    case Method::kHvgpFull:
      return AcquisitionMode::kFull;
    case Method::kHvgpMiOnly:
      return AcquisitionMode::kMiOnly;
    case Method::kHvgpPrefOnly:
      return AcquisitionMode::kPrefOnly;
    default:
      return AcquisitionMode::kRandom;
  }
}

Matrix stack_rows(const std::vector<Vector>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) m.row(i) = rows[i].transpose();
  return m;
}

KernelSpec default_objective_kernel(int dim) {
  return KernelSpec::isotropic(KernelFamily::kSquaredExponential, dim,
                               /*lengthscale=*/0.3, /*signal=*/1.0,
                               /*noise=*/1e-2);
}

KernelSpec default_preference_kernel(int dim) {
  return KernelSpec::isotropic(KernelFamily::kSquaredExponential, dim,
                               /*lengthscale=*/1.0, /*signal=*/1.0,
                               /*noise=*/0.0);
}

}  // namespace

RunResult run_bed(const Benchmark& bench, const ExperimentConfig& cfg,
                  Method method, uint64_t seed, PairOracle& oracle,
                  const RecordSink* sink,
                  const std::vector<RunRecord>* resume) {
  cfg.validate();
  bench.space.validate();
  const Vector eval_w =
      cfg.eval_weights.size() > 0 ? cfg.eval_weights : bench.default_weights;

  std::vector<Vector> xs;        // every evaluated scenario, two per iteration
  std::vector<Vector> ys;        // matching observables
  PreferenceDataset observable_duels;
  PreferenceDataset scenario_duels;  // single-model baseline state
  std::vector<KernelSpec> warm_objective;
  RunResult result;
  double best_pref = -std::numeric_limits<double>::infinity();

  AcquisitionConfig acq = cfg.acquisition;
  acq.mode = mode_for(method);

  for (int iter = 0; iter < cfg.budget; ++iter) {
    const auto started = std::chrono::steady_clock::now();
    Vector x1, x2;
    nlohmann::json snapshot;
    if (iter < cfg.n_init) {
      Rng rng(derive_seed(seed, kTagInitPair, iter));
      x1 = bench.space.sample_uniform(rng);
      do {
        x2 = bench.space.sample_uniform(rng);
      } while (x2 == x1);
    } else if (method == Method::kRandom) {
      const PairProposal prop = propose_pair(
          nullptr, nullptr, bench.space, acq,
          derive_seed(seed, kTagAcquisition, iter));
      x1 = prop.x1;
      x2 = prop.x2;
    } else if (method == Method::kSingleGp) {
      // Latent utility directly over scenarios; no objective layer.
      PreferenceModel pref =
          scenario_duels.duels.empty()
              ? PreferenceModel::prior(
                    default_preference_kernel(bench.space.dim()), 0.1)
              : PreferenceModel::fit_laplace(
                    scenario_duels,
                    default_preference_kernel(bench.space.dim()), 0.1);
      const PairProposal prop = propose_pair_scenario_utility(
          pref, bench.space, acq, derive_seed(seed, kTagAcquisition, iter));
      x1 = prop.x1;
      x2 = prop.x2;
      if (cfg.snapshots) snapshot = {{"preference", pref.to_json()}};
    } else {
      const ObjectiveDataset data = ObjectiveDataset::create(
          stack_rows(xs), stack_rows(ys), bench.space.lower,
          bench.space.upper);
      FitOptions fit;
      fit.seed = derive_seed(seed, kTagFitObjective, iter);
      fit.warm_start_specs = warm_objective;
      fit.warm_restarts = 3;
      // Periodic cold refit: a warm chain can sit in a poor ARD optimum for
      // the rest of the run otherwise.
      if ((iter - cfg.n_init) % 10 == 0) fit.warm_start_specs.clear();
      const KernelSpec obj_init = default_objective_kernel(bench.space.dim());
      ObjectiveModel obj =
          cfg.gp.mode == GpMode::kExact
              ? ObjectiveModel::fit_exact(data, obj_init, fit)
              : ObjectiveModel::fit_svgp(
                    data,
                    std::min<int>(cfg.gp.inducing,
                                  static_cast<int>(data.n())),
                    obj_init, SvgpOptions{fit, /*optimize_inducing=*/false});
      warm_objective.clear();
      for (Eigen::Index j = 0; j < data.dy(); ++j)
        warm_objective.push_back(obj.kernel(static_cast<int>(j)));

      const int dy = static_cast<int>(data.dy());
      PreferenceModel pref =
          observable_duels.duels.empty()
              ? PreferenceModel::prior(default_preference_kernel(dy), 0.1)
              : PreferenceModel::fit_laplace(
                    observable_duels, default_preference_kernel(dy), 0.1);

      const PairProposal prop =
          propose_pair(&obj, &pref, bench.space, acq,
                       derive_seed(seed, kTagAcquisition, iter));
      x1 = prop.x1;
      x2 = prop.x2;
      if (cfg.snapshots)
        snapshot = {{"objective", obj.to_json()},
                    {"preference", pref.to_json()}};
    }

    const Vector y1 = bench.observables(x1);
    const Vector y2 = bench.observables(x2);

    Verdict verdict;
    std::string backend = oracle.backend_name();
    if (resume != nullptr && iter < static_cast<int>(resume->size())) {
      const RunRecord& prev = (*resume)[iter];
      require(prev.x1 == x1 && prev.x2 == x2 && prev.y1 == y1 &&
                  prev.y2 == y2,
              "run_bed: resume state does not match the regenerated run");
      verdict.choice = prev.verdict;
      backend = "replay";
    } else {
      try {
        verdict = oracle.compare(y1, y2, derive_seed(seed, kTagOracle, iter));
      } catch (const OracleError& err) {
        result.abort_reason = err.what();
        return result;  // partial records already emitted through the sink
      }
    }

    xs.push_back(x1);
    xs.push_back(x2);
    ys.push_back(y1);
    ys.push_back(y2);
    observable_duels.add_observation(y1, y2, verdict.choice);
    scenario_duels.add_observation(x1, x2, verdict.choice);

    RunRecord rec;
    rec.iter = iter;
    rec.seed = seed;
    rec.x1 = x1;
    rec.x2 = x2;
    rec.y1 = y1;
    rec.y2 = y2;
    rec.verdict = verdict.choice;
    rec.pref_score_x1 = eval_w.dot(y1);
    rec.pref_score_x2 = eval_w.dot(y2);
    best_pref = std::max({best_pref, rec.pref_score_x1, rec.pref_score_x2});
    rec.best_pref_so_far = best_pref;
    rec.coverage_so_far = coverage_score(xs);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    result.records.push_back(rec);

    if (sink != nullptr) {
      IterationOutput out;
      out.record = rec;
      out.oracle_record = {iter, y1, y2, verdict.choice, backend,
                           verdict.raw_response};
      out.model_snapshot = std::move(snapshot);
      (*sink)(out);
    }
  }
  result.completed = true;
  return result;
}

// ---------------------------------------------------------------------------
// Logs and aggregation
// ---------------------------------------------------------------------------

std::string run_log_filename(const std::string& benchmark,
                             const std::string& method, uint64_t seed) {
  return benchmark + "_" + method + "_" + std::to_string(seed) + ".jsonl";
}

RunLog read_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run log: " + path);
  RunLog log;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      const std::string type = doc.at("type").get<std::string>();
      if (type == "header") {
        log.header = doc;
        log.benchmark = doc.at("benchmark").get<std::string>();
        log.method = doc.at("method").get<std::string>();
        log.seed = doc.at("seed").get<uint64_t>();
        have_header = true;
      } else if (type == "record") {
        log.records.push_back(RunRecord::from_json(doc));
      }
    } catch (const nlohmann::json::exception& err) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad log line: " + err.what());
    }
  }
  if (!have_header)
    throw std::runtime_error(path + ": missing header line");
  return log;
}

std::vector<AggregateRow> aggregate(const std::vector<RunLog>& runs) {
  require(!runs.empty(), "aggregate: need at least one run");
  for (const RunLog& run : runs)
    require(run.benchmark == runs[0].benchmark,
            "aggregate: runs mix benchmarks");
  // (method, iter) -> samples
  std::map<std::pair<std::string, int>,
           std::vector<std::pair<double, double>>>
      cells;
  for (const RunLog& run : runs)
    for (const RunRecord& rec : run.records)
      cells[{run.method, rec.iter}].emplace_back(rec.best_pref_so_far,
                                                 rec.coverage_so_far);
  std::vector<AggregateRow> rows;
  for (const auto& [key, samples] : cells) {
    AggregateRow row;
    row.method = key.first;
    row.iter = key.second;
    row.runs = static_cast<int>(samples.size());
    const double n = static_cast<double>(samples.size());
    for (const auto& [best, cov] : samples) {
      row.best_pref_mean += best / n;
      row.coverage_mean += cov / n;
    }
    if (samples.size() > 1) {
      double sb = 0.0, sc = 0.0;
      for (const auto& [best, cov] : samples) {
        sb += (best - row.best_pref_mean) * (best - row.best_pref_mean);
        sc += (cov - row.coverage_mean) * (cov - row.coverage_mean);
      }
      row.best_pref_std = std::sqrt(sb / (n - 1.0));
      row.coverage_std = std::sqrt(sc / (n - 1.0));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "method,iter,best_pref_mean,best_pref_std,coverage_mean,"
         "coverage_std,runs\n";
  std::ostringstream line;
  line.precision(17);
  for (const AggregateRow& row : rows) {
    line.str("");
    line << row.method << "," << row.iter << "," << row.best_pref_mean << ","
         << row.best_pref_std << "," << row.coverage_mean << ","
         << row.coverage_std << "," << row.runs << "\n";
    out << line.str();
  }
}

}  // namespace prefbed
