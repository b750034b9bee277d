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
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "prefbed/runner.hpp"

using namespace prefbed;

namespace {

// A tiny analytic benchmark whose composite utility is linear in x: both
// methods find it easily and quickly.
Benchmark linear_benchmark() {
  Benchmark bench;
  bench.id = BenchmarkId::kRouting;  // id is irrelevant for direct run_bed use
  bench.name = "linear_toy";
  bench.space = ScenarioSpace::unit_cube(2);
  bench.observable_names = {"A", "B"};
  bench.default_weights = (Vector(2) << 1.0, 1.0).finished();
  bench.default_prompt =
      PromptTemplate::create("toy", {"A", "B"}, "prefer larger sums");
  bench.observables = [](const Vector& x) {
    Vector y(2);
    y << x[0] + 0.5 * x[1], 0.5 * x[0] + x[1];
    return y;
  };
  bench.probe_pair = {(Vector(2) << 1, 1).finished(),
                      (Vector(2) << 0, 0).finished()};
  return bench;
}

ExperimentConfig small_config(int budget, int n_init) {
  ExperimentConfig cfg;
  cfg.budget = budget;
  cfg.n_init = n_init;
  cfg.acquisition.pool_size = 64;
  cfg.acquisition.top_k = 6;
  cfg.acquisition.mc_samples = 8;
  cfg.acquisition.refine_steps = 4;
  cfg.acquisition.bald_samples = 16;
  return cfg;
}

std::unique_ptr<PairOracle> toy_oracle(const Benchmark& bench) {
  SyntheticOracleSpec spec;
  spec.weights = bench.default_weights;
  return make_synthetic_oracle(spec);
}

// Oracle wrapper that counts queries and can be scripted to fail.
class CountingOracle final : public PairOracle {
 public:
  CountingOracle(std::unique_ptr<PairOracle> inner, int fail_at = -1)
      : inner_(std::move(inner)), fail_at_(fail_at) {}
  Verdict compare(const Vector& y1, const Vector& y2, uint64_t seed) override {
    if (fail_at_ >= 0 && calls_ == fail_at_)
      throw OracleError("scripted failure");
    ++calls_;
    return inner_->compare(y1, y2, seed);
  }
  std::string backend_name() const override { return inner_->backend_name(); }
  int calls() const { return calls_; }

 private:
  std::unique_ptr<PairOracle> inner_;
  int fail_at_;
  int calls_ = 0;
};

std::string serialize(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  for (const RunRecord& rec : records) out << rec.to_json(false).dump() << "\n";
  return out.str();
}

}  // namespace

TEST_CASE("random method fills records with correct bookkeeping") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(8, 3);
  auto oracle = toy_oracle(bench);
  const RunResult result = run_bed(bench, cfg, Method::kRandom, 5, *oracle);
  REQUIRE(result.completed);
  REQUIRE(result.records.size() == 8);
  double best = -1e300;
  std::vector<Vector> xs;
  for (int i = 0; i < 8; ++i) {
    const RunRecord& rec = result.records[i];
    CHECK(rec.iter == i);
    CHECK(bench.space.contains(rec.x1));
    CHECK(bench.space.contains(rec.x2));
    CHECK(rec.y1 == bench.observables(rec.x1));
    CHECK(rec.pref_score_x1 ==
          doctest::Approx(bench.default_weights.dot(rec.y1)).epsilon(1e-12));
    best = std::max({best, rec.pref_score_x1, rec.pref_score_x2});
    CHECK(rec.best_pref_so_far == doctest::Approx(best).epsilon(1e-12));
    xs.push_back(rec.x1);
    xs.push_back(rec.x2);
    CHECK(rec.coverage_so_far ==
          doctest::Approx(coverage_score(xs)).epsilon(1e-12));
  }
}

TEST_CASE("budget equal to n_init never fits a model") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(4, 4);
  auto oracle = toy_oracle(bench);
  // HVGP method, but every iteration is an initialization pair.
  const RunResult result = run_bed(bench, cfg, Method::kHvgpFull, 1, *oracle);
  CHECK(result.completed);
  CHECK(result.records.size() == 4);
}

TEST_CASE("each run queries the oracle B times and the benchmark 2B times") {
  Benchmark bench = linear_benchmark();
  int evals = 0;
  const auto base = bench.observables;
  bench.observables = [&evals, base](const Vector& x) {
    ++evals;
    return base(x);
  };
  const ExperimentConfig cfg = small_config(7, 2);
  CountingOracle oracle(toy_oracle(bench));
  const RunResult result = run_bed(bench, cfg, Method::kRandom, 3, oracle);
  CHECK(result.completed);
  CHECK(oracle.calls() == 7);
  CHECK(evals == 14);
}

TEST_CASE("identical seeds give byte-identical record streams") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(10, 4);
  for (Method method :
       {Method::kHvgpFull, Method::kSingleGp, Method::kRandom}) {
    auto o1 = toy_oracle(bench);
    auto o2 = toy_oracle(bench);
    const RunResult a = run_bed(bench, cfg, method, 11, *o1);
    const RunResult b = run_bed(bench, cfg, method, 11, *o2);
    REQUIRE(a.completed);
    REQUIRE(b.completed);
    CHECK(serialize(a.records) == serialize(b.records));
  }
}

TEST_CASE("an oracle failure aborts with the partial records") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(9, 3);
  CountingOracle failing(toy_oracle(bench), /*fail_at=*/5);
  const RunResult partial = run_bed(bench, cfg, Method::kHvgpFull, 17, failing);
  CHECK_FALSE(partial.completed);
  CHECK(partial.records.size() == 5);
  CHECK(partial.abort_reason.find("scripted failure") != std::string::npos);
}

TEST_CASE("resuming an aborted run reproduces the uninterrupted stream") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(9, 3);

  auto full_oracle = toy_oracle(bench);
  const RunResult full = run_bed(bench, cfg, Method::kHvgpFull, 17, *full_oracle);
  REQUIRE(full.completed);

  CountingOracle failing(toy_oracle(bench), /*fail_at=*/5);
  const RunResult partial = run_bed(bench, cfg, Method::kHvgpFull, 17, failing);
  REQUIRE(partial.records.size() == 5);

  auto resume_oracle = toy_oracle(bench);
  const RunResult resumed = run_bed(bench, cfg, Method::kHvgpFull, 17,
                                    *resume_oracle, nullptr,
                                    &partial.records);
  REQUIRE(resumed.completed);
  CHECK(serialize(resumed.records) == serialize(full.records));
}

TEST_CASE("single-model baseline tracks the hierarchical method on a linear task") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(16, 6);
  double single_best = 0.0, hvgp_best = 0.0;
  {
    auto oracle = toy_oracle(bench);
    const RunResult r = run_bed(bench, cfg, Method::kSingleGp, 2, *oracle);
    REQUIRE(r.completed);
    single_best = r.records.back().best_pref_so_far;
  }
  {
    auto oracle = toy_oracle(bench);
    const RunResult r = run_bed(bench, cfg, Method::kHvgpFull, 2, *oracle);
    REQUIRE(r.completed);
    hvgp_best = r.records.back().best_pref_so_far;
  }
  // Linear composite: both methods should end close to the 3.0 optimum.
  CHECK(single_best >= hvgp_best * 0.9);
  CHECK(hvgp_best > 2.0);
}

TEST_CASE("record JSON round trips") {
  const Benchmark bench = linear_benchmark();
  const ExperimentConfig cfg = small_config(5, 2);
  auto oracle = toy_oracle(bench);
  const RunResult result = run_bed(bench, cfg, Method::kRandom, 23, *oracle);
  for (const RunRecord& rec : result.records) {
    const RunRecord back = RunRecord::from_json(rec.to_json(true));
    CHECK(back.iter == rec.iter);
    CHECK(back.x1 == rec.x1);
    CHECK(back.y2 == rec.y2);
    CHECK(back.verdict == rec.verdict);
    CHECK(back.best_pref_so_far == rec.best_pref_so_far);
  }
}

TEST_CASE("aggregation means and spreads per iteration") {
  RunLog a, b;
  a.benchmark = b.benchmark = "toy";
  a.method = b.method = "random";
  a.seed = 0;
  b.seed = 1;
  RunRecord ra;
  ra.iter = 3;
  ra.best_pref_so_far = 1.0;
  ra.coverage_so_far = 0.5;
  RunRecord rb;
  rb.iter = 3;
  rb.best_pref_so_far = 3.0;
  rb.coverage_so_far = 1.5;
  a.records = {ra};
  b.records = {rb};

  const auto single = aggregate({a});
  REQUIRE(single.size() == 1);
  CHECK(single[0].best_pref_std == 0.0);
  CHECK(single[0].coverage_std == 0.0);

  const auto rows = aggregate({a, b});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].best_pref_mean == doctest::Approx(2.0));
  CHECK(rows[0].best_pref_std == doctest::Approx(std::sqrt(2.0)));
  CHECK(rows[0].runs == 2);

  const auto swapped = aggregate({b, a});
  CHECK(swapped[0].best_pref_mean == rows[0].best_pref_mean);
  CHECK(swapped[0].best_pref_std == rows[0].best_pref_std);

  RunLog other = b;
  other.benchmark = "different";
  CHECK_THROWS_AS(aggregate({a, other}), ContractViolation);
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::kHvgpFull, Method::kHvgpMiOnly,
                   Method::kHvgpPrefOnly, Method::kSingleGp, Method::kRandom})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("bogus"), ContractViolation);
}

TEST_CASE("config validation accepts the boundary budget") {
  ExperimentConfig cfg = small_config(5, 5);
  CHECK_NOTHROW(cfg.validate());
  cfg.budget = 4;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg.budget = 5;
  cfg.n_init = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
}
