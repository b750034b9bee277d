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

#include "prefbed/oracle.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace prefbed {

std::optional<int> parse_verdict_token(const std::string& reply) {
  const auto is_token_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  for (size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] != '1' && reply[i] != '2') continue;
    const bool left_ok = i == 0 || !is_token_char(reply[i - 1]);
    const bool right_ok = i + 1 == reply.size() || !is_token_char(reply[i + 1]);
    if (left_ok && right_ok) return reply[i] == '1' ? 1 : 2;
  }
  return std::nullopt;
}

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  require(scheme_end != std::string::npos, "llm_compare: URL needs a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Verdict llm_compare(const LlmEndpointConfig& cfg, const PromptTemplate& tmpl,
                    const Vector& y1, const Vector& y2) {
  const std::string prompt = build_prompt(tmpl, y1, y2);
  const ParsedUrl url = split_url(cfg.url);

  nlohmann::json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"}, {"content", prompt}}});
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg.api_key_env.c_str());
      key != nullptr && key[0] != '\0')
    headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    if (attempt > 0) {
      const size_t idx = std::min<size_t>(attempt - 1, cfg.backoff_s.size() - 1);
      std::this_thread::sleep_for(
          std::chrono::duration<double>(cfg.backoff_s[idx]));
    }
    const auto started = std::chrono::steady_clock::now();
    httplib::Client client(url.base);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Result result =
        client.Post(url.path, headers, payload, "application/json");
    const double latency =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - started)
            .count();
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      last_error = "HTTP status " + std::to_string(result->status);
      continue;
    }
    std::string reply = result->body;
    try {
      const nlohmann::json doc = nlohmann::json::parse(result->body);
      if (doc.contains("choices") && !doc["choices"].empty())
        reply = doc["choices"][0].at("message").at("content")
                    .get<std::string>();
    } catch (const nlohmann::json::exception&) {
      // Fall back to scanning the raw body.
    }
    const std::optional<int> choice = parse_verdict_token(reply);
    if (!choice.has_value()) {
      last_error = "no standalone 1/2 token in reply: " + reply;
      continue;
    }
    Verdict verdict;
    verdict.choice = *choice;
    verdict.raw_response = reply;
    verdict.latency_ms = latency;
    return verdict;
  }
  throw OracleError("llm_compare: all " + std::to_string(cfg.max_attempts) +
                    " attempts failed; last: " + last_error);
}

}  // namespace prefbed
