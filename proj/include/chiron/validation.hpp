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

// Validation stage. Each generated statement gets up to three reasoning
// passes (ambiguity, informativeness, a two-turn retrieve-then-compare chain
// of thought), then a 1-5 entailment label from a pluggable scorer, then an
// acceptance policy. The yes/no reasoning verdicts are context for the
// scorer only; they never filter on their own.

#ifndef CHIRON_VALIDATION_HPP_
#define CHIRON_VALIDATION_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/generation.hpp"
#include "chiron/llm.hpp"
#include "chiron/parallel.hpp"
#include "chiron/templates.hpp"
#include "chiron/text.hpp"

namespace chiron {

enum class ReasoningMode { kAll, kIcl, kCot, kNone };

inline const char* reasoning_mode_name(ReasoningMode m) {
  switch (m) {
    case ReasoningMode::kAll: return "All";
    case ReasoningMode::kIcl: return "ICL";
    case ReasoningMode::kCot: return "CoT";
    case ReasoningMode::kNone: return "None";
  }
  return "";
}

inline ReasoningMode parse_reasoning_mode(std::string_view s) {
  std::string n = to_lower_ascii(trim(s));
  if (n == "all") return ReasoningMode::kAll;
  if (n == "icl") return ReasoningMode::kIcl;
  if (n == "cot") return ReasoningMode::kCot;
  if (n == "none") return ReasoningMode::kNone;
  throw ConfigError("unknown reasoning mode '" + std::string(s) + "'");
}

inline bool uses_icl(ReasoningMode m) {
  return m == ReasoningMode::kAll || m == ReasoningMode::kIcl;
}
inline bool uses_cot(ReasoningMode m) {
  return m == ReasoningMode::kAll || m == ReasoningMode::kCot;
}

enum class AcceptancePolicy { kEq5, kGe4 };

inline const char* policy_name(AcceptancePolicy p) {
  return p == AcceptancePolicy::kEq5 ? "eq5" : "ge4";
}

inline AcceptancePolicy parse_policy(std::string_view s) {
  std::string n = to_lower_ascii(trim(s));
  if (n == "eq5" || n == "=5") return AcceptancePolicy::kEq5;
  if (n == "ge4" || n == ">=4") return AcceptancePolicy::kGe4;
  throw ConfigError("unknown acceptance policy '" + std::string(s) + "'");
}

inline bool accept(int label, AcceptancePolicy policy) {
  if (label < 1 || label > 5) {
    throw ContractError("entailment label out of range: " + std::to_string(label));
  }
  return policy == AcceptancePolicy::kEq5 ? label == 5 : label >= 4;
}

// ---------------------------------------------------------------------------
// Reasoning

struct YesNoVerdict {
  bool flag = false;
  std::string justification;
  bool parsed = true;
};

struct ReasoningBundle {
  std::optional<YesNoVerdict> ambiguity;
  std::optional<YesNoVerdict> informativeness;
  std::optional<std::string> cot_relevant_section;
  std::optional<std::string> cot_comparison;
};

inline constexpr int kReasoningMaxTokens = 128;
inline constexpr int kLabelMaxTokens = 8;

// Leading "Yes"/"No" (any case, after quotes or markdown emphasis).
inline std::optional<bool> parse_yes_no(std::string_view text) {
  std::string_view t = trim(text);
  while (!t.empty() && (t.front() == '"' || t.front() == '*' || t.front() == '\'')) {
    t.remove_prefix(1);
  }
  auto word = [&](std::string_view w) {
    if (t.size() < w.size() || !iequals_ascii(t.substr(0, w.size()), w)) return false;
    return t.size() == w.size() || !std::isalpha(static_cast<unsigned char>(t[w.size()]));
  };
  if (word("yes")) return true;
  if (word("no")) return false;
  return std::nullopt;
}

inline ChatRequest build_icl_prompt(std::string_view template_name,
                                    std::string_view question_name,
                                    std::string_view statement,
                                    const Character& character) {
  std::string question = render_template(prompt_asset(question_name),
                                         {{"character", character.canonical_name}});
  std::string prompt = render_template(
      prompt_asset(template_name),
      {{"question_text", question}, {"statement", std::string(statement)}});
  return make_prompt_request(std::move(prompt), kReasoningMaxTokens);
}

namespace detail {

inline YesNoVerdict run_yes_no(const ChatRequest& request, Backend& backend,
                               bool fallback, std::string_view what,
                               const WarningSink& warnings) {
  ChatResponse r = backend.complete(request);
  YesNoVerdict v;
  v.justification = std::string(trim(r.text));
  std::optional<bool> parsed = parse_yes_no(r.text);
  if (parsed) {
    v.flag = *parsed;
  } else {
    v.flag = fallback;
    v.parsed = false;
    warn(warnings, std::string(what) + " answer has no leading Yes/No: '" +
                       v.justification.substr(0, 80) + "'");
  }
  return v;
}

}  // namespace detail

// flag = the statement is too ambiguous to verify. Unparseable answers count
// as not ambiguous.
inline YesNoVerdict assess_ambiguity(std::string_view statement,
                                     const Character& character, Backend& backend,
                                     const WarningSink& warnings = {}) {
  if (is_blank(statement)) throw ContractError("assess_ambiguity: empty statement");
  return detail::run_yes_no(
      build_icl_prompt("prompts/ambiguity.txt", "prompts/ambiguity_question.txt",
                       statement, character),
      backend, false, "ambiguity", warnings);
}

// flag = the statement tells us something about the character. Unparseable
// answers count as informative.
inline YesNoVerdict assess_informativeness(std::string_view statement,
                                           const Character& character,
                                           Backend& backend,
                                           const WarningSink& warnings = {}) {
  if (is_blank(statement)) {
    throw ContractError("assess_informativeness: empty statement");
  }
  return detail::run_yes_no(
      build_icl_prompt("prompts/informativeness.txt",
                       "prompts/informativeness_question.txt", statement, character),
      backend, true, "informativeness", warnings);
}

inline ChatRequest build_cot_relevant_prompt(std::string_view snippet_text,
                                             const Character& character,
                                             std::string_view statement) {
  return make_prompt_request(
      render_template(prompt_asset("prompts/cot_relevant.txt"),
                      {{"story_section", std::string(snippet_text)},
                       {"character", character.canonical_name},
                       {"statement", std::string(statement)}}),
      kReasoningMaxTokens);
}

inline ChatRequest build_cot_compare_prompt(std::string_view snippet_text,
                                            const Character& character,
                                            std::string_view statement,
                                            std::string_view relevant_section) {
  return make_prompt_request(
      render_template(prompt_asset("prompts/cot_compare.txt"),
                      {{"story_section", std::string(snippet_text)},
                       {"character", character.canonical_name},
                       {"statement", std::string(statement)},
                       {"answer", std::string(relevant_section)}}),
      kReasoningMaxTokens);
}

struct CotResult {
  std::string relevant_section;
  std::optional<std::string> comparison;
  // Set when the second turn failed; the first turn is still valid.
  std::optional<std::string> error;
};

// Two strictly sequential turns: retrieve the relevant section, then compare
// it with the statement. An empty snippet has nothing to retrieve.
inline CotResult chain_of_thought(std::string_view snippet_text,
                                  const Character& character,
                                  std::string_view statement, Backend& backend) {
  CotResult result;
  if (is_blank(snippet_text)) {
    result.relevant_section = "N/A";
  } else {
    result.relevant_section = std::string(trim(
        backend.complete(build_cot_relevant_prompt(snippet_text, character, statement))
            .text));
  }
  try {
    result.comparison = std::string(
        trim(backend
                 .complete(build_cot_compare_prompt(snippet_text, character, statement,
                                                    result.relevant_section))
                 .text));
  } catch (const Error& e) {
    result.error = e.what();
  }
  return result;
}

inline ReasoningBundle gather_reasoning(std::string_view snippet_text,
                                       const Character& character,
                                       std::string_view statement, ReasoningMode mode,
                                       Backend& backend,
                                       const WarningSink& warnings = {}) {
  ReasoningBundle bundle;
  if (uses_icl(mode)) {
    bundle.ambiguity = assess_ambiguity(statement, character, backend, warnings);
    bundle.informativeness =
        assess_informativeness(statement, character, backend, warnings);
  }
  if (uses_cot(mode)) {
    CotResult cot = chain_of_thought(snippet_text, character, statement, backend);
    bundle.cot_relevant_section = cot.relevant_section;
    bundle.cot_comparison = cot.comparison;
    if (cot.error) warn(warnings, "chain of thought turn 2 failed: " + *cot.error);
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Entailment

// The reasoning block placed between the snippet and the character, in the
// order ambiguity, informativeness, relevant section, comparison.
inline std::string format_reasoning(const ReasoningBundle& r, ReasoningMode mode) {
  std::string out;
  if (uses_icl(mode)) {
    if (!r.ambiguity || !r.informativeness) {
      throw ContractError("reasoning mode needs ambiguity and informativeness");
    }
    out += "Ambiguity: " + r.ambiguity->justification + "\n";
    out += "Informativeness: " + r.informativeness->justification + "\n";
  }
  if (uses_cot(mode)) {
    if (!r.cot_relevant_section || !r.cot_comparison) {
      throw ContractError("reasoning mode needs both chain-of-thought answers");
    }
    out += "Relevant Section: " + *r.cot_relevant_section + "\n";
    out += "Comparison: " + *r.cot_comparison + "\n";
  }
  if (!out.empty()) out += "\n";
  return out;
}

inline ChatRequest build_entailment_prompt(std::string_view snippet_text,
                                           const Character& character,
                                           std::string_view statement,
                                           const ReasoningBundle& reasoning,
                                           ReasoningMode mode) {
  return make_prompt_request(
      render_template(prompt_asset("prompts/entailment.txt"),
                      {{"story_section", std::string(snippet_text)},
                       {"reasoning", format_reasoning(reasoning, mode)},
                       {"character", character.canonical_name},
                       {"statement", std::string(statement)}}),
      kLabelMaxTokens);
}

// First digit 1-5 anywhere in the completion.
inline std::optional<int> parse_label(std::string_view text) {
  for (char c : text) {
    if (c >= '1' && c <= '5') return c - '0';
  }
  return std::nullopt;
}

inline constexpr std::string_view kLabelRetryInstruction =
    "Reply with only the label: a single digit from 1 to 5.";

struct LabelResult {
  std::optional<int> label;
  std::string raw_output;
  bool retried = false;
};

// Asks the scorer for a label; an unparseable answer is retried once with a
// follow-up turn.
inline LabelResult classify_entailment(std::string_view snippet_text,
                                       const Character& character,
                                       std::string_view statement,
                                       const ReasoningBundle& reasoning,
                                       ReasoningMode mode, Backend& scorer) {
  ChatRequest request =
      build_entailment_prompt(snippet_text, character, statement, reasoning, mode);
  LabelResult result;
  result.raw_output = scorer.complete(request).text;
  result.label = parse_label(result.raw_output);
  if (result.label) return result;

  result.retried = true;
  request.messages.push_back({Role::kAssistant, result.raw_output});
  request.messages.push_back({Role::kUser, std::string(kLabelRetryInstruction)});
  std::string second = scorer.complete(request).text;
  result.raw_output += "\n---\n" + second;
  result.label = parse_label(second);
  return result;
}

// ---------------------------------------------------------------------------
// Batch validation

struct EntailmentVerdict {
  std::optional<int> label;
  bool accepted = false;
  AcceptancePolicy policy = AcceptancePolicy::kEq5;
  std::string raw_output;
  ReasoningBundle reasoning;
  // "label" when the policy rejected a valid label; otherwise the failure.
  std::string reject_reason;
};

struct ValidatedStatement {
  Statement statement;
  EntailmentVerdict verdict;
};

struct ValidationResult {
  std::vector<ValidatedStatement> accepted;
  std::vector<ValidatedStatement> rejected;
};

struct ValidationConfig {
  AcceptancePolicy policy = AcceptancePolicy::kEq5;
  ReasoningMode reasoning_mode = ReasoningMode::kAll;
  std::size_t concurrency = 1;
};

inline EntailmentVerdict validate_one(const Statement& statement,
                                      std::string_view snippet_text,
                                      const Character& character,
                                      const ValidationConfig& config, Backend& reasoner,
                                      Backend& scorer, const WarningSink& warnings) {
  EntailmentVerdict v;
  v.policy = config.policy;
  try {
    v.reasoning = gather_reasoning(snippet_text, character, statement.text,
                                   config.reasoning_mode, reasoner, warnings);
    if (uses_cot(config.reasoning_mode) && !v.reasoning.cot_comparison) {
      v.reject_reason = "reasoning_error";
      return v;
    }
    LabelResult label = classify_entailment(snippet_text, character, statement.text,
                                            v.reasoning, config.reasoning_mode, scorer);
    v.raw_output = std::move(label.raw_output);
    v.label = label.label;
    if (!v.label) {
      v.reject_reason = "unparseable";
      return v;
    }
    v.accepted = accept(*v.label, config.policy);
    if (!v.accepted) v.reject_reason = "label";
  } catch (const Error& e) {
    v.accepted = false;
    v.reject_reason = std::string("error: ") + e.what();
  }
  return v;
}

// Validates every statement independently; a failure on one never aborts the
// batch. Accepted statements keep their input order.
inline ValidationResult validate_statements(const std::vector<Statement>& statements,
                                            std::string_view snippet_text,
                                            const Character& character,
                                            const ValidationConfig& config,
                                            Backend& reasoner, Backend& scorer,
                                            const WarningSink& warnings = {}) {
  std::vector<EntailmentVerdict> verdicts(statements.size());
  parallel_for(statements.size(), config.concurrency, [&](std::size_t i) {
    verdicts[i] = validate_one(statements[i], snippet_text, character, config,
                               reasoner, scorer, warnings);
  });
  ValidationResult result;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    ValidatedStatement vs{statements[i], std::move(verdicts[i])};
    (vs.verdict.accepted ? result.accepted : result.rejected).push_back(std::move(vs));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Annotations

struct AnnotationRecord {
  std::string record_id;
  SnippetRef snippet;
  std::string snippet_text;
  Character character;
  std::string statement;
  std::map<std::string, int> labels;
  std::string source_model;

  // Lower median of the annotator labels.
  int gold_label() const {
    std::vector<int> v;
    for (const auto& [_, l] : labels) v.push_back(l);
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
  }
};

inline void to_json(nlohmann::json& j, const AnnotationRecord& r) {
  j = nlohmann::json{{"record_id", r.record_id},
                     {"story_id", r.snippet.story_id},
                     {"entry_id", r.snippet.entry_id},
                     {"snippet_index", r.snippet.snippet_index},
                     {"snippet_text", r.snippet_text},
                     {"character", r.character},
                     {"statement", r.statement},
                     {"labels", r.labels},
                     {"source_model", r.source_model}};
}

inline void from_json(const nlohmann::json& j, AnnotationRecord& r) {
  r.record_id = j.value("record_id", std::string());
  r.snippet.story_id = j.value("story_id", std::string());
  r.snippet.entry_id = j.value("entry_id", std::string());
  r.snippet.snippet_index = j.value("snippet_index", std::size_t{0});
  r.snippet_text = j.value("snippet_text", std::string());
  r.character = detail::required(j, "character", "annotation").get<Character>();
  r.statement = detail::required(j, "statement", "annotation").get<std::string>();
  r.labels = detail::required(j, "labels", "annotation").get<std::map<std::string, int>>();
  r.source_model = j.value("source_model", std::string());
  if (r.labels.empty()) throw InputError("annotation " + r.record_id + ": no labels");
  for (const auto& [who, l] : r.labels) {
    if (l < 1 || l > 5) {
      throw InputError("annotation " + r.record_id + ": label " + std::to_string(l) +
                       " from " + who + " outside 1-5");
    }
  }
}

inline nlohmann::json reasoning_json(const ReasoningBundle& r) {
  nlohmann::json j = nlohmann::json::object();
  auto verdict = [](const YesNoVerdict& v) {
    return nlohmann::json{{"flag", v.flag},
                          {"justification", v.justification},
                          {"parsed", v.parsed}};
  };
  j["ambiguity"] = r.ambiguity ? verdict(*r.ambiguity) : nlohmann::json();
  j["informativeness"] =
      r.informativeness ? verdict(*r.informativeness) : nlohmann::json();
  j["cot_relevant_section"] =
      r.cot_relevant_section ? nlohmann::json(*r.cot_relevant_section) : nlohmann::json();
  j["cot_comparison"] =
      r.cot_comparison ? nlohmann::json(*r.cot_comparison) : nlohmann::json();
  return j;
}

inline void to_json(nlohmann::json& j, const ValidatedStatement& v) {
  j = nlohmann::json{{"statement", v.statement},
                     {"reasoning", reasoning_json(v.verdict.reasoning)},
                     {"label", v.verdict.label ? nlohmann::json(*v.verdict.label)
                                               : nlohmann::json()},
                     {"accepted", v.verdict.accepted},
                     {"policy", policy_name(v.verdict.policy)},
                     {"raw_output", v.verdict.raw_output},
                     {"reject_reason", v.verdict.reject_reason}};
}

// ---------------------------------------------------------------------------
// Oracle scorer

// Answers entailment prompts with stored gold labels, looked up by
// (character name, statement) parsed from the prompt.
class OracleScorerBackend : public Backend {
 public:
  explicit OracleScorerBackend(const std::vector<AnnotationRecord>& records) {
    for (const AnnotationRecord& r : records) {
      gold_[key(r.character.canonical_name, r.statement)] = r.gold_label();
    }
  }

  ChatResponse complete(const ChatRequest& request) override {
    const std::string& prompt = request.messages.front().content;
    std::size_t c = prompt.rfind("Character: ");
    std::size_t s = prompt.rfind("\n\nStatement: ");
    std::size_t l = prompt.rfind("\n\nLabel:");
    if (c == std::string::npos || s == std::string::npos || l == std::string::npos ||
        !(c < s && s < l)) {
      throw BackendError("oracle scorer: not an entailment prompt", request_key(request));
    }
    std::string name = prompt.substr(c + 11, s - c - 11);
    std::string statement = prompt.substr(s + 13, l - s - 13);
    auto it = gold_.find(key(name, statement));
    if (it == gold_.end()) {
      throw BackendError("oracle scorer: no gold label for '" + statement + "'",
                         request_key(request));
    }
    ChatResponse r;
    r.text = std::to_string(it->second);
    r.backend_id = id();
    return r;
  }

  std::string id() const override { return "oracle-scorer"; }

 private:
  static std::string key(std::string_view name, std::string_view statement) {
    return std::string(name) + '\x1f' + std::string(statement);
  }
  std::map<std::string, int> gold_;
};

}  // namespace chiron

#endif  // CHIRON_VALIDATION_HPP_
