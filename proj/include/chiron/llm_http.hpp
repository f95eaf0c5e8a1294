// Copyright 2026 The Chiron Authors.
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

// Client for an OpenAI-style chat-completions endpoint.

#ifndef CHIRON_LLM_HTTP_HPP_
#define CHIRON_LLM_HTTP_HPP_

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "chiron/error.hpp"
#include "chiron/llm.hpp"

namespace chiron {

struct HttpBackendConfig {
  std::string base_url;
  std::string model;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  int max_inflight = 4;
  std::chrono::seconds timeout{120};
  int top_logprobs = 20;

  // CHIRON_API_BASE and CHIRON_API_KEY.
  static HttpBackendConfig from_environment(std::string model) {
    HttpBackendConfig c;
    c.model = std::move(model);
    if (const char* base = std::getenv("CHIRON_API_BASE")) c.base_url = base;
    if (const char* key = std::getenv("CHIRON_API_KEY")) c.api_key = key;
    return c;
  }
};

inline bool is_retryable_status(int status) {
  return status == 408 || status == 425 || status == 429 || status >= 500;
}

class HttpBackend : public Backend {
 public:
  static constexpr int kMaxInflightLimit = 256;

  explicit HttpBackend(HttpBackendConfig config)
      : config_(std::move(config)),
        inflight_(std::clamp(config_.max_inflight, 1, kMaxInflightLimit)) {
    if (config_.base_url.empty()) {
      throw ConfigError("HTTP backend needs a base URL (CHIRON_API_BASE)");
    }
    split_base_url();
  }

  ChatResponse complete(const ChatRequest& request) override {
    const std::string key = request_key(request);
    const std::string body = request_body(request).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(config_.initial_backoff * (1 << (attempt - 1)));
      }
      httplib::Result res = post(body);
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return parse_response(res->body, request);
      last_error = "HTTP " + std::to_string(res->status);
      if (!is_retryable_status(res->status)) {
        throw BackendError(last_error + ": " + res->body.substr(0, 200), key);
      }
    }
    throw BackendError(last_error + " after " + std::to_string(config_.max_retries) +
                           " retries",
                       key);
  }

  std::string id() const override { return "http:" + config_.model; }

  nlohmann::json request_body(const ChatRequest& request) const {
    nlohmann::json messages = nlohmann::json::array();
    for (const ChatMessage& m : request.messages) {
      messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    nlohmann::json body = {{"model", config_.model},
                           {"messages", messages},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_tokens}};
    if (request.want_option_scores) {
      body["logprobs"] = true;
      body["top_logprobs"] = config_.top_logprobs;
    }
    return body;
  }

  // Reads choices[0].message.content and, when options were requested, the
  // top log-probabilities of the first generated token.
  static ChatResponse parse_payload(const std::string& payload,
                                    const ChatRequest& request,
                                    const std::string& backend_id) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    const nlohmann::json* content = nullptr;
    if (j.is_object() && j.contains("choices") && j["choices"].is_array() &&
        !j["choices"].empty()) {
      const nlohmann::json& choice = j["choices"][0];
      if (choice.contains("message") && choice["message"].is_object() &&
          choice["message"].contains("content")) {
        content = &choice["message"]["content"];
      }
    }
    if (content == nullptr || !(content->is_string() || content->is_null())) {
      throw ProtocolError("response lacks choices[0].message.content");
    }
    ChatResponse r;
    r.text = content->is_string() ? content->get<std::string>() : std::string();
    r.backend_id = backend_id;
    if (request.want_option_scores) {
      const nlohmann::json& choice = j["choices"][0];
      auto lp = choice.find("logprobs");
      if (lp != choice.end() && lp->is_object() && lp->contains("content") &&
          (*lp)["content"].is_array() && !(*lp)["content"].empty()) {
        const nlohmann::json& first = (*lp)["content"][0];
        std::map<std::string, double> scores;
        if (first.contains("top_logprobs") && first["top_logprobs"].is_array()) {
          for (const nlohmann::json& t : first["top_logprobs"]) {
            if (!t.contains("token") || !t.contains("logprob")) continue;
            std::string token(trim(t["token"].get<std::string>()));
            double lpv = t["logprob"].get<double>();
            for (const std::string& o : *request.want_option_scores) {
              if (token != o) continue;
              auto it = scores.find(o);
              if (it == scores.end() || lpv > it->second) scores[o] = lpv;
            }
          }
        }
        r.option_scores = std::move(scores);
      }
    }
    return r;
  }

 private:
  void split_base_url() {
    std::string url = config_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    std::size_t scheme = url.find("://");
    std::size_t slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash == std::string::npos) {
      host_ = url;
    } else {
      host_ = url.substr(0, slash);
      prefix_ = url.substr(slash);
    }
  }

  httplib::Result post(const std::string& body) {
    inflight_.acquire();
    struct Release {
      std::counting_semaphore<kMaxInflightLimit>& s;
      ~Release() { s.release(); }
    } release{inflight_};
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);
    return client.Post(prefix_ + "/v1/chat/completions", body, "application/json");
  }

  ChatResponse parse_response(const std::string& payload, const ChatRequest& request) {
    return parse_payload(payload, request, id());
  }

  HttpBackendConfig config_;
  std::counting_semaphore<kMaxInflightLimit> inflight_;
  std::string host_;
  std::string prefix_;
};

}  // namespace chiron

#endif  // CHIRON_LLM_HTTP_HPP_
