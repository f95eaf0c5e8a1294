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

// The language-model contract used by every pipeline stage. Backends turn a
// ChatRequest into a ChatResponse; score_options turns per-option log-scores
// into a probability distribution.

#ifndef CHIRON_LLM_HPP_
#define CHIRON_LLM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "chiron/error.hpp"
#include "chiron/text.hpp"

namespace chiron {

enum class Role { kSystem, kUser, kAssistant };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

inline Role parse_role(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw ProtocolError("unknown message role '" + std::string(s) + "'");
}

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::vector<std::string>> want_option_scores;
};

struct ChatResponse {
  std::string text;
  std::optional<std::map<std::string, double>> option_scores;
  std::string backend_id;
  bool cached = false;
};

// One user turn carrying a fully rendered prompt. Role framing for a
// particular model is applied by the serving endpoint's chat template.
inline ChatRequest make_prompt_request(std::string prompt, int max_tokens = 512) {
  ChatRequest r;
  r.messages.push_back({Role::kUser, std::move(prompt)});
  r.max_tokens = max_tokens;
  return r;
}

// Canonical serialization: sorted keys, content verbatim, UTF-8.
inline std::string canonical_json(const ChatRequest& r) {
  nlohmann::json messages = nlohmann::json::array();
  for (const ChatMessage& m : r.messages) {
    messages.push_back({{"content", m.content}, {"role", role_name(m.role)}});
  }
  nlohmann::json j = {{"max_tokens", r.max_tokens},
                      {"messages", messages},
                      {"temperature", r.temperature}};
  j["want_option_scores"] =
      r.want_option_scores ? nlohmann::json(*r.want_option_scores) : nlohmann::json();
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex.append(buf, 2);
  }
  return hex;
}

inline std::string request_key(const ChatRequest& r) {
  return sha256_hex(canonical_json(r));
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Option scoring

inline constexpr double kDefaultFallbackEpsilon = 0.02;

struct OptionDistribution {
  std::vector<std::string> options;
  std::vector<double> probabilities;

  double at(std::string_view option) const {
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i] == option) return probabilities[i];
    }
    throw ScoringError("no probability for option '" + std::string(option) + "'");
  }
};

inline std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  double hi = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  long double total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - hi);
    total += out[i];
  }
  for (double& p : out) p = static_cast<double>(p / total);
  return out;
}

namespace detail {

inline bool is_word_byte(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80 || c == '_';
}

// Offset of the first whole-token occurrence of `needle`, or npos.
inline std::size_t find_token(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return std::string_view::npos;
  std::size_t pos = hay.find(needle);
  while (pos != std::string_view::npos) {
    bool left_ok = pos == 0 || !is_word_byte(hay[pos - 1]) ||
                   !is_word_byte(needle.front());
    std::size_t end = pos + needle.size();
    bool right_ok = end >= hay.size() || !is_word_byte(hay[end]) ||
                    !is_word_byte(needle.back());
    if (left_ok && right_ok) return pos;
    pos = hay.find(needle, pos + 1);
  }
  return std::string_view::npos;
}

}  // namespace detail

// Picks the option a free-text completion names: an exact match after
// trimming, otherwise the option whose first whole-token occurrence comes
// earliest (longer option wins at equal offsets).
inline std::optional<std::size_t> parse_option_choice(
    std::string_view completion, const std::vector<std::string>& options) {
  std::string_view t = trim(completion);
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (t == options[i]) return i;
  }
  std::optional<std::size_t> best;
  std::size_t best_pos = std::string_view::npos;
  for (std::size_t i = 0; i < options.size(); ++i) {
    std::size_t pos = detail::find_token(t, options[i]);
    if (pos == std::string_view::npos) continue;
    if (!best || pos < best_pos ||
        (pos == best_pos && options[i].size() > options[*best].size())) {
      best = i;
      best_pos = pos;
    }
  }
  return best;
}

// Probability distribution over request.want_option_scores. Uses the
// backend's log-scores when it returns them; otherwise reads the completion
// as a single choice carrying 1 - epsilon of the mass.
inline OptionDistribution score_options(Backend& backend, const ChatRequest& request,
                                        double epsilon = kDefaultFallbackEpsilon) {
  if (!request.want_option_scores || request.want_option_scores->empty()) {
    throw ContractError("score_options: request names no options");
  }
  const std::vector<std::string>& options = *request.want_option_scores;
  OptionDistribution dist;
  dist.options = options;
  if (options.size() == 1) {
    dist.probabilities = {1.0};
    return dist;
  }

  ChatResponse response = backend.complete(request);
  if (response.option_scores) {
    std::vector<double> scores;
    std::vector<std::string> missing;
    for (const std::string& o : options) {
      auto it = response.option_scores->find(o);
      if (it == response.option_scores->end()) {
        missing.push_back(o);
      } else {
        scores.push_back(it->second);
      }
    }
    if (!missing.empty()) {
      throw ScoringError("backend returned no score for option(s): " +
                         join(missing, ", "));
    }
    dist.probabilities = softmax(scores);
    return dist;
  }

  std::optional<std::size_t> choice = parse_option_choice(response.text, options);
  if (!choice) {
    throw ScoringError("completion names none of the options (" + join(options, ", ") +
                       "): '" + std::string(trim(response.text)) + "'");
  }
  double rest = epsilon / static_cast<double>(options.size() - 1);
  dist.probabilities.assign(options.size(), rest);
  dist.probabilities[*choice] = 1.0 - epsilon;
  return dist;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const ChatResponse& r) {
  j = nlohmann::json{{"text", r.text}, {"backend_id", r.backend_id}};
  if (r.option_scores) j["option_scores"] = *r.option_scores;
}

inline void from_json(const nlohmann::json& j, ChatResponse& r) {
  r.text = j.at("text").get<std::string>();
  r.backend_id = j.value("backend_id", std::string());
  if (auto it = j.find("option_scores"); it != j.end() && !it->is_null()) {
    r.option_scores = it->get<std::map<std::string, double>>();
  }
  r.cached = false;
}

}  // namespace chiron

#endif  // CHIRON_LLM_HPP_
