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

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "prefbed/config.hpp"

namespace fs = std::filesystem;
using namespace prefbed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitOracle = 4;

struct CommonArgs {
  std::string config_path;
  std::string output_dir = "results";
  std::vector<std::string> sets;
  std::string seed_list;
  int jobs = 1;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ConfigMap map = parse_config_file(args.config_path);
  apply_overrides(map, args.sets);
  if (!args.seed_list.empty()) map["seeds"] = args.seed_list;
  return build_experiment_config(map);
}

std::unique_ptr<PairOracle> make_oracle(const ExperimentConfig& cfg,
                                        const Benchmark& bench) {
  if (cfg.oracle_backend == "synthetic") {
    SyntheticOracleSpec spec;
    spec.weights = cfg.oracle_weights.size() > 0 ? cfg.oracle_weights
                                                 : bench.default_weights;
    spec.lambda_true = cfg.oracle_lambda;
    return make_synthetic_oracle(spec);
  }
  if (cfg.oracle_backend == "llm")
    return make_llm_oracle(cfg.llm, bench.default_prompt);
  return make_interactive_oracle(bench.default_prompt, std::cin, std::cout);
}

struct RunOutcome {
  std::string method;
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunLog log;
};

nlohmann::json run_header(const ExperimentConfig& cfg, const Benchmark& bench,
                          Method method, uint64_t seed,
                          const std::vector<std::string>& overrides) {
  nlohmann::json header;
  header["type"] = "header";
  header["benchmark"] = bench.name;
  header["method"] = to_string(method);
  header["seed"] = seed;
  header["budget"] = cfg.budget;
  header["n_init"] = cfg.n_init;
  header["oracle_backend"] = cfg.oracle_backend;
  header["gp_mode"] =
      cfg.gp.mode == GpMode::kExact ? "exact" : "svgp";
  header["overrides"] = overrides;
  return header;
}

RunOutcome execute_run(const ExperimentConfig& cfg, const Benchmark& bench,
                       Method method, uint64_t seed, const fs::path& out_dir,
                       const std::vector<std::string>& overrides,
                       bool resume) {
  RunOutcome outcome;
  outcome.method = to_string(method);
  outcome.seed = seed;
  const fs::path log_path =
      out_dir / run_log_filename(bench.name, to_string(method), seed);
  const fs::path oracle_path = log_path.string() + ".oracle.jsonl";

  std::vector<RunRecord> previous;
  if (resume && fs::exists(log_path)) {
    try {
      previous = read_run_log(log_path.string()).records;
    } catch (const std::exception&) {
      previous.clear();  // unreadable partial log: start over
    }
  }

  std::ofstream log(log_path);
  std::ofstream oracle_log(oracle_path);
  log << run_header(cfg, bench, method, seed, overrides).dump() << "\n";

  const RecordSink sink = [&](const IterationOutput& out) {
    log << out.record.to_json(cfg.log_timings).dump() << "\n";
    oracle_log << out.oracle_record.to_json().dump() << "\n";
    if (!out.model_snapshot.is_null() && cfg.snapshots) {
      const fs::path snap =
          out_dir / (log_path.stem().string() + "_models_iter" +
                     std::to_string(out.record.iter) + ".json");
      std::ofstream snap_file(snap);
      snap_file << out.model_snapshot.dump(2) << "\n";
    }
  };

  std::unique_ptr<PairOracle> oracle = make_oracle(cfg, bench);
  const RunResult result =
      run_bed(bench, cfg, method, seed, *oracle, &sink,
              previous.empty() ? nullptr : &previous);
  outcome.ok = result.completed;
  outcome.error = result.abort_reason;
  outcome.log.benchmark = bench.name;
  outcome.log.method = to_string(method);
  outcome.log.seed = seed;
  outcome.log.records = result.records;
  return outcome;
}

int cmd_run(const CommonArgs& args, bool resume) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  }
  const Benchmark bench = make_benchmark(cfg.benchmark);
  fs::create_directories(args.output_dir);

  std::vector<std::pair<Method, uint64_t>> runs;
  for (Method m : cfg.methods)
    for (uint64_t s : cfg.seeds) runs.emplace_back(m, s);

  const int jobs =
      cfg.oracle_backend == "interactive" ? 1 : std::max(1, args.jobs);
  std::vector<RunOutcome> outcomes(runs.size());
  for (size_t base = 0; base < runs.size(); base += jobs) {
    std::vector<std::future<RunOutcome>> wave;
    const size_t end = std::min(runs.size(), base + jobs);
    for (size_t i = base; i < end; ++i)
      wave.push_back(std::async(std::launch::async, [&, i] {
        return execute_run(cfg, bench, runs[i].first, runs[i].second,
                           args.output_dir, args.sets, resume);
      }));
    for (size_t i = base; i < end; ++i) outcomes[i] = wave[i - base].get();
  }

  std::vector<RunLog> logs;
  bool all_ok = true;
  for (const RunOutcome& outcome : outcomes) {
    if (!outcome.ok) {
      all_ok = false;
      std::cerr << "run " << outcome.method << " seed " << outcome.seed
                << " aborted: " << outcome.error << "\n";
    }
    if (!outcome.log.records.empty()) logs.push_back(outcome.log);
  }
  if (!logs.empty()) {
    const auto rows = aggregate(logs);
    write_aggregate_csv((fs::path(args.output_dir) / "aggregate.csv").string(),
                        rows);
    // Final-iteration summary per method.
    std::map<std::string, AggregateRow> final_rows;
    for (const AggregateRow& row : rows) {
      auto it = final_rows.find(row.method);
      if (it == final_rows.end() || row.iter > it->second.iter)
        final_rows[row.method] = row;
    }
    std::cout << "final best_pref by method:\n";
    for (const auto& [method, row] : final_rows)
      std::cout << "  " << method << ": " << row.best_pref_mean << " +/- "
                << row.best_pref_std << " (" << row.runs << " runs)\n";
  }
  return all_ok ? kExitOk : kExitOracle;
}

int cmd_rank(const CommonArgs& args, const std::vector<std::string>& logs) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  }
  const Benchmark bench = make_benchmark(cfg.benchmark);

  ConfigMap map = parse_config_file(args.config_path);
  apply_overrides(map, args.sets);
  int max_points = 20;
  uint64_t rank_seed = 0;
  if (map.count("rank.max_points"))
    max_points = std::stoi(map["rank.max_points"]);
  if (map.count("rank.seed")) rank_seed = std::stoull(map["rank.seed"]);

  std::vector<Vector> points;
  try {
    for (const std::string& path : logs) {
      const RunLog log = read_run_log(path);
      if (log.benchmark != bench.name)
        throw std::runtime_error(path + ": benchmark mismatch in rank input");
      for (const RunRecord& rec : log.records) {
        points.push_back(rec.y1);
        points.push_back(rec.y2);
      }
    }
  } catch (const std::exception& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kExitData;
  }
  if (points.size() < 2) {
    std::cerr << "data error: need at least two logged points to rank\n";
    return kExitData;
  }

  std::unique_ptr<PairOracle> oracle = make_oracle(cfg, bench);
  Rng rng(rank_seed);
  std::vector<SkillRating> ratings;
  try {
    ratings = rank_candidates(points, *oracle, max_points, rng);
  } catch (const OracleError& err) {
    std::cerr << "oracle error: " << err.what() << "\n";
    return kExitOracle;
  }
  fs::create_directories(args.output_dir);
  const fs::path csv = fs::path(args.output_dir) / "ratings.csv";
  std::ofstream out(csv);
  out << "point_index,mu,sigma\n";
  out.precision(17);
  for (size_t i = 0; i < ratings.size(); ++i)
    out << i << "," << ratings[i].mu << "," << ratings[i].sigma << "\n";
  std::cout << "wrote " << ratings.size() << " ratings to " << csv.string()
            << "\n";
  return kExitOk;
}

int cmd_report(const CommonArgs& args, const std::vector<std::string>& logs) {
  std::vector<RunLog> parsed;
  try {
    for (const std::string& path : logs) parsed.push_back(read_run_log(path));
    const auto rows = aggregate(parsed);
    fs::create_directories(args.output_dir);
    const fs::path csv = fs::path(args.output_dir) / "report.csv";
    write_aggregate_csv(csv.string(), rows);
    std::cout << "wrote " << rows.size() << " aggregate rows to "
              << csv.string() << "\n";
  } catch (const std::exception& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int cmd_oracle_test(const CommonArgs& args) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  }
  const Benchmark bench = make_benchmark(cfg.benchmark);
  std::unique_ptr<PairOracle> oracle = make_oracle(cfg, bench);
  try {
    const Verdict verdict = oracle->compare(bench.probe_pair.first,
                                            bench.probe_pair.second, 0);
    std::cout << "Verdict: " << verdict.choice << "\n";
    if (verdict.raw_response.has_value())
      std::cout << "Raw response: " << *verdict.raw_response << "\n";
  } catch (const OracleError& err) {
    std::cerr << "oracle error: " << err.what() << "\n";
    return kExitOracle;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-guided Bayesian experimental design toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--config", args.config_path, "Experiment config file");
  app.add_option("--output-dir", args.output_dir, "Output directory");
  app.add_option("--set", args.sets, "Override config entries (key=value)");
  app.add_option("--seed-list", args.seed_list, "Comma-separated seeds");
  app.add_option("--jobs", args.jobs, "Concurrent runs");

  bool resume = false;
  CLI::App* run = app.add_subcommand("run", "Execute all configured runs");
  run->add_flag("--resume", resume, "Continue aborted runs from their logs");

  std::vector<std::string> rank_logs;
  CLI::App* rank = app.add_subcommand("rank", "Skill-rate logged candidates");
  rank->add_option("logs", rank_logs, "Run log files")->required();

  std::vector<std::string> report_logs;
  CLI::App* report =
      app.add_subcommand("report", "Aggregate run logs into a CSV");
  report->add_option("logs", report_logs, "Run log files")->required();

  CLI::App* oracle_test =
      app.add_subcommand("oracle-test", "Send one probe comparison");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args, resume);
    if (rank->parsed()) return cmd_rank(args, rank_logs);
    if (report->parsed()) return cmd_report(args, report_logs);
    if (oracle_test->parsed()) return cmd_oracle_test(args);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const OracleError& err) {
    std::cerr << "oracle error: " << err.what() << "\n";
    return kExitOracle;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
