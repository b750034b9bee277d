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
#include "prefbed/oracle.hpp"
#include "prefbed/preference_gp.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace prefbed;

namespace {

Vector vec3(double a, double b, double c) {
  Vector y(3);
  y << a, b, c;
  return y;
}

PromptTemplate grid_prompt() {
  return PromptTemplate::create(
      "Compare two deployment plans for a distribution network.",
      {"Fairness", "Cost", "Priority", "Resilience"},
      "prioritize Priority, followed by Cost");
}

// Stub chat endpoint whose replies are scripted per request.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<std::string> replies;
  std::vector<int> statuses;
  std::atomic<int> hits{0};

  explicit StubServer(std::vector<std::string> scripted,
                      std::vector<int> codes = {})
      : replies(std::move(scripted)), statuses(std::move(codes)) {
    server.Post("/v1/chat/completions",
                [this](const httplib::Request&, httplib::Response& res) {
                  const int i =
                      std::min<int>(hits++, static_cast<int>(replies.size()) - 1);
                  const int status =
                      statuses.empty()
                          ? 200
                          : statuses[std::min<int>(
                                i, static_cast<int>(statuses.size()) - 1)];
                  nlohmann::json body;
                  body["choices"] = {
                      {{"message", {{"role", "assistant"},
                                    {"content", replies[i]}}}}};
                  res.status = status;
                  res.set_content(body.dump(), "application/json");
                });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  LlmEndpointConfig config() const {
    LlmEndpointConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port) +
              "/v1/chat/completions";
    cfg.backoff_s = {0.01, 0.02};
    return cfg;
  }
};

}  // namespace

TEST_CASE("deterministic synthetic comparison follows the weighted sums") {
  SyntheticOracleSpec spec;
  spec.weights = vec3(1.0, 0.0, 1.0);
  Rng rng(1);
  // w.y1 = 3 < w.y2 = 6, so the second candidate wins.
  const Verdict verdict =
      synthetic_compare(spec, vec3(2, 9, 1), vec3(1, 9, 5), rng);
  CHECK(verdict.choice == 2);
}

TEST_CASE("ties are broken by a fair, seeded coin") {
  SyntheticOracleSpec spec;
  spec.weights = vec3(1.0, 0.0, 1.0);
  const Vector y = vec3(1, 2, 3);
  Rng a(77), b(77);
  for (int i = 0; i < 20; ++i)
    CHECK(synthetic_compare(spec, y, y, a).choice ==
          synthetic_compare(spec, y, y, b).choice);
  Rng c(123);
  int firsts = 0;
  for (int i = 0; i < 4000; ++i)
    if (synthetic_compare(spec, y, y, c).choice == 1) ++firsts;
  CHECK(firsts > 1800);
  CHECK(firsts < 2200);
}

TEST_CASE("positive weight rescaling never changes a decided verdict") {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    SyntheticOracleSpec spec;
    spec.weights = vec3(rng.normal(), rng.normal(), rng.normal());
    const Vector y1 = vec3(rng.normal(), rng.normal(), rng.normal());
    const Vector y2 = vec3(rng.normal(), rng.normal(), rng.normal());
    if (spec.weights.dot(y1) == spec.weights.dot(y2)) continue;
    Rng r1(5), r2(5);
    const int before = synthetic_compare(spec, y1, y2, r1).choice;
    SyntheticOracleSpec scaled = spec;
    scaled.weights *= rng.uniform(0.1, 50.0);
    CHECK(synthetic_compare(scaled, y1, y2, r2).choice == before);
  }
}

TEST_CASE("deterministic comparisons are antisymmetric") {
  SyntheticOracleSpec spec;
  spec.weights = vec3(0.5, -1.0, 2.0);
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const Vector y1 = vec3(rng.normal(), rng.normal(), rng.normal());
    const Vector y2 = vec3(rng.normal(), rng.normal(), rng.normal());
    if (spec.weights.dot(y1) == spec.weights.dot(y2)) continue;
    Rng r1(1), r2(1);
    const int ab = synthetic_compare(spec, y1, y2, r1).choice;
    const int ba = synthetic_compare(spec, y2, y1, r2).choice;
    CHECK(((ab == 1 && ba == 2) || (ab == 2 && ba == 1)));
  }
}

TEST_CASE("stochastic verdict frequency matches the probit probability") {
  SyntheticOracleSpec spec;
  spec.weights = vec3(1.0, 0.0, 1.0);
  spec.lambda_true = 1.5;
  const Vector y1 = vec3(1.2, 0.0, 0.4);
  const Vector y2 = vec3(0.8, 0.0, 0.3);
  const double expected = normal_cdf(
      (spec.weights.dot(y1) - spec.weights.dot(y2)) /
      (std::sqrt(2.0) * spec.lambda_true));
  Rng rng(2024);
  int firsts = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i)
    if (synthetic_compare(spec, y1, y2, rng).choice == 1) ++firsts;
  CHECK(std::abs(static_cast<double>(firsts) / trials - expected) < 0.02);
}

TEST_CASE("prompt rendering names every metric and is deterministic") {
  const PromptTemplate tmpl = grid_prompt();
  const Vector y1 = (Vector(4) << 0.31234, 2.0, 0.8, 0.9).finished();
  const Vector y2 = (Vector(4) << 0.1, 0.5, 0.4123456, 0.7).finished();
  const std::string prompt = build_prompt(tmpl, y1, y2);
  for (const char* name : {"Fairness", "Cost", "Priority", "Resilience"})
    CHECK(prompt.find(name) != std::string::npos);
  CHECK(prompt.find("0.3123") != std::string::npos);  // 4 significant digits
  CHECK(prompt.find("0.4123") != std::string::npos);
  CHECK(prompt.find("prioritize Priority") != std::string::npos);
  CHECK(build_prompt(tmpl, y1, y2) == prompt);
}

TEST_CASE("prompt templates reject empty criteria") {
  CHECK_THROWS_AS(PromptTemplate::create("task", {"A"}, ""),
                  ContractViolation);
  CHECK_THROWS_AS(build_prompt(grid_prompt(), Vector::Zero(2), Vector::Zero(2)),
                  ContractViolation);
}

TEST_CASE("verdict token extraction takes the first standalone 1 or 2") {
  CHECK(parse_verdict_token("2") == 2);
  CHECK(parse_verdict_token("The better option is 1.") == 1);
  CHECK(parse_verdict_token("Scenario 2 is preferred") == 2);
  CHECK(parse_verdict_token("both are fine") == std::nullopt);
  CHECK(parse_verdict_token("12") == std::nullopt);
  CHECK(parse_verdict_token("option12 then 2") == 2);
  CHECK(parse_verdict_token("") == std::nullopt);
}

TEST_CASE("llm client parses plain and embedded verdicts") {
  StubServer stub({"2"});
  const Verdict v = llm_compare(stub.config(), grid_prompt(),
                                Vector::Ones(4), Vector::Zero(4));
  CHECK(v.choice == 2);
  CHECK(v.raw_response.has_value());
  CHECK(*v.raw_response == "2");
  CHECK(v.latency_ms.has_value());

  StubServer stub2({"The better option is 1."});
  const Verdict v2 = llm_compare(stub2.config(), grid_prompt(),
                                 Vector::Ones(4), Vector::Zero(4));
  CHECK(v2.choice == 1);
}

TEST_CASE("unparsable replies exhaust the retry budget and raise") {
  StubServer stub({"both are fine"});
  CHECK_THROWS_AS(llm_compare(stub.config(), grid_prompt(), Vector::Ones(4),
                              Vector::Zero(4)),
                  OracleError);
  CHECK(stub.hits.load() == 3);  // three attempts, never a fabricated verdict
}

TEST_CASE("a parse failure recovers on a later attempt") {
  StubServer stub({"hmm", "let me think", "2"});
  const Verdict v = llm_compare(stub.config(), grid_prompt(), Vector::Ones(4),
                                Vector::Zero(4));
  CHECK(v.choice == 2);
  CHECK(stub.hits.load() == 3);
}

TEST_CASE("http errors surface as transport failures") {
  StubServer stub({"1"}, {500});
  CHECK_THROWS_AS(llm_compare(stub.config(), grid_prompt(), Vector::Ones(4),
                              Vector::Zero(4)),
                  OracleError);
  LlmEndpointConfig unreachable;
  unreachable.url = "http://127.0.0.1:1/v1/chat/completions";
  unreachable.backoff_s = {0.01, 0.01};
  CHECK_THROWS_AS(llm_compare(unreachable, grid_prompt(), Vector::Ones(4),
                              Vector::Zero(4)),
                  OracleError);
}

TEST_CASE("interactive comparison accepts 1 or 2 and re-prompts otherwise") {
  std::istringstream in1("1\n");
  std::ostringstream out1;
  CHECK(interactive_compare(grid_prompt(), Vector::Ones(4), Vector::Zero(4),
                            in1, out1)
            .choice == 1);

  std::istringstream in2("x\n 2 \n");
  std::ostringstream out2;
  CHECK(interactive_compare(grid_prompt(), Vector::Ones(4), Vector::Zero(4),
                            in2, out2)
            .choice == 2);
  CHECK(out2.str().find("Please answer 1 or 2") != std::string::npos);

  std::istringstream in3("");
  std::ostringstream out3;
  CHECK_THROWS_AS(interactive_compare(grid_prompt(), Vector::Ones(4),
                                      Vector::Zero(4), in3, out3),
                  OracleError);
}

TEST_CASE("oracle factories produce working backends") {
  SyntheticOracleSpec spec;
  spec.weights = vec3(1.0, 0.0, 1.0);
  auto oracle = make_synthetic_oracle(spec);
  CHECK(oracle->backend_name() == "synthetic");
  const Verdict a = oracle->compare(vec3(2, 9, 1), vec3(1, 9, 5), 7);
  const Verdict b = oracle->compare(vec3(2, 9, 1), vec3(1, 9, 5), 7);
  CHECK(a.choice == 2);
  CHECK(a.choice == b.choice);
}
