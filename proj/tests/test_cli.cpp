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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "prefbed/runner.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string(PREFBED_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream text;
  text << in.rdbuf();
  return {WEXITSTATUS(status), text.str()};
}

fs::path make_workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("prefbed_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path path = dir / "exp.cfg";
  std::ofstream out(path);
  out << body;
  return path;
}

const char* kRandomConfig =
    "benchmark = routing\n"
    "methods = random\n"
    "seeds = 0\n"
    "budget = 12\n"
    "n_init = 4\n"
    "oracle.backend = synthetic\n";

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace

TEST_CASE("run executes the configured runs and writes logs") {
  const fs::path dir = make_workdir("run");
  const fs::path cfg = write_config(dir, kRandomConfig);
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " run",
      dir);
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("final best_pref") != std::string::npos);

  const fs::path log = dir / "out" / "routing_random_0.jsonl";
  REQUIRE(fs::exists(log));
  const prefbed::RunLog parsed = prefbed::read_run_log(log.string());
  CHECK(parsed.records.size() == 12);
  CHECK(parsed.benchmark == "routing");
  CHECK(fs::exists(dir / "out" / "aggregate.csv"));
  CHECK(fs::exists(dir / "out" / "routing_random_0.jsonl.oracle.jsonl"));
}

TEST_CASE("missing config exits 2 without partial outputs") {
  const fs::path dir = make_workdir("missing");
  const CliResult res = run_cli(
      "--config " + (dir / "absent.cfg").string() + " --output-dir " +
          (dir / "out").string() + " run",
      dir);
  CHECK(res.exit_code == 2);
  CHECK(!fs::exists(dir / "out" / "aggregate.csv"));
}

TEST_CASE("bad config keys exit 2 with diagnostics") {
  const fs::path dir = make_workdir("badkey");
  const fs::path cfg = write_config(dir, "benchmark = routing\nbudge = 5\n");
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " run",
      dir);
  CHECK(res.exit_code == 2);
  CHECK(res.stdout_text.find("budge") != std::string::npos);
}

TEST_CASE("overrides supersede the file and land in the header") {
  const fs::path dir = make_workdir("override");
  const fs::path cfg = write_config(dir, kRandomConfig);
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " --set budget=20 run",
      dir);
  CHECK(res.exit_code == 0);
  const prefbed::RunLog parsed =
      prefbed::read_run_log((dir / "out" / "routing_random_0.jsonl").string());
  CHECK(parsed.records.size() == 20);
  CHECK(parsed.header.at("budget").get<int>() == 20);
  const auto& overrides = parsed.header.at("overrides");
  REQUIRE(overrides.size() == 1);
  CHECK(overrides[0].get<std::string>() == "budget=20");
}

TEST_CASE("repeated runs produce byte-identical logs") {
  const fs::path dir = make_workdir("determinism");
  const fs::path cfg = write_config(dir, kRandomConfig);
  run_cli("--config " + cfg.string() + " --output-dir " +
              (dir / "a").string() + " run",
          dir);
  run_cli("--config " + cfg.string() + " --output-dir " +
              (dir / "b").string() + " run",
          dir);
  CHECK(read_file(dir / "a" / "routing_random_0.jsonl") ==
        read_file(dir / "b" / "routing_random_0.jsonl"));
}

TEST_CASE("rank writes one rating row per logged point") {
  const fs::path dir = make_workdir("rank");
  const fs::path cfg = write_config(dir, kRandomConfig);
  run_cli("--config " + cfg.string() + " --output-dir " +
              (dir / "out").string() + " run",
          dir);
  const fs::path log = dir / "out" / "routing_random_0.jsonl";
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " rank " + log.string(),
      dir);
  CHECK(res.exit_code == 0);
  const std::string csv = read_file(dir / "out" / "ratings.csv");
  // 12 records = 24 points + header line.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
  CHECK(csv.rfind("point_index,mu,sigma", 0) == 0);

  const CliResult res2 = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out2").string() +
          " rank " + log.string(),
      dir);
  CHECK(res2.exit_code == 0);
  CHECK(read_file(dir / "out2" / "ratings.csv") == csv);  // seeded determinism
}

TEST_CASE("rank rejects corrupt logs with the offending line") {
  const fs::path dir = make_workdir("corrupt");
  const fs::path cfg = write_config(dir, kRandomConfig);
  const fs::path log = dir / "broken.jsonl";
  {
    std::ofstream out(log);
    out << R"({"type":"header","benchmark":"routing","method":"random","seed":0})"
        << "\n";
    out << "{not json}\n";
  }
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " rank " + log.string(),
      dir);
  CHECK(res.exit_code == 3);
  CHECK(res.stdout_text.find(":2") != std::string::npos);  // line number
}

TEST_CASE("report aggregates logs into a CSV") {
  const fs::path dir = make_workdir("report");
  const fs::path cfg = write_config(dir, kRandomConfig);
  run_cli("--config " + cfg.string() + " --output-dir " +
              (dir / "out").string() + " --seed-list 0,1 run",
          dir);
  const CliResult res = run_cli(
      "--output-dir " + (dir / "rep").string() + " report " +
          (dir / "out" / "routing_random_0.jsonl").string() + " " +
          (dir / "out" / "routing_random_1.jsonl").string(),
      dir);
  CHECK(res.exit_code == 0);
  const std::string csv = read_file(dir / "rep" / "report.csv");
  CHECK(csv.find("method,iter") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);  // header + 12 iters
}

TEST_CASE("oracle-test prints a verdict for the synthetic backend") {
  const fs::path dir = make_workdir("oracle");
  const fs::path cfg = write_config(dir, kRandomConfig);
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " oracle-test",
      dir);
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("Verdict:") != std::string::npos);
}

TEST_CASE("oracle-test surfaces unreachable endpoints as exit 4") {
  const fs::path dir = make_workdir("oracle_fail");
  const fs::path cfg = write_config(
      dir,
      "benchmark = routing\nmethods = random\nseeds = 0\nbudget = 12\n"
      "n_init = 4\noracle.backend = llm\n"
      "llm.url = http://127.0.0.1:1/v1/chat/completions\n");
  const CliResult res = run_cli(
      "--config " + cfg.string() + " --output-dir " + (dir / "out").string() +
          " oracle-test",
      dir);
  CHECK(res.exit_code == 4);
}
