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

// Generation stage: per-category question prompts, raw answers, and their
// decomposition into atomic statements.

#ifndef CHIRON_GENERATION_HPP_
#define CHIRON_GENERATION_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/llm.hpp"
#include "chiron/templates.hpp"
#include "chiron/text.hpp"

namespace chiron {

enum class Category { kDialogue, kPhysicalPersonality, kKnowledge, kGoals };

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::kDialogue, Category::kPhysicalPersonality, Category::kKnowledge,
    Category::kGoals};

// Stable identifier used in files and on the command line.
inline const char* category_id(Category c) {
  switch (c) {
    case Category::kDialogue: return "Dialogue";
    case Category::kPhysicalPersonality: return "PhysicalPersonality";
    case Category::kKnowledge: return "Knowledge";
    case Category::kGoals: return "Goals";
  }
  return "";
}

// Heading used in rendered sheets.
inline const char* category_title(Category c) {
  switch (c) {
    case Category::kDialogue: return "Dialogue";
    case Category::kPhysicalPersonality: return "Physical/Personality";
    case Category::kKnowledge: return "Knowledge";
    case Category::kGoals: return "Goals";
  }
  return "";
}

// Accepts the identifier or title in any case, plus the aliases "Plot"
// (Goals) and "Physical"/"Personality".
inline Category parse_category(std::string_view name) {
  std::string n = to_lower_ascii(trim(name));
  if (n == "dialogue") return Category::kDialogue;
  if (n == "physicalpersonality" || n == "physical/personality" ||
      n == "physical" || n == "personality") {
    return Category::kPhysicalPersonality;
  }
  if (n == "knowledge") return Category::kKnowledge;
  if (n == "goals" || n == "plot") return Category::kGoals;
  throw ConfigError("unknown category '" + std::string(name) + "'");
}

struct QuestionSpec {
  Category category;
  std::string_view question_id;
  std::string_view question_text;
  int position;
};

inline constexpr std::array<QuestionSpec, 8> kQuestions = {{
    {Category::kDialogue, "dialogue_speech",
     "What, if anything have we learned about how this character speaks from "
     "this snippet?",
     0},
    {Category::kPhysicalPersonality, "physical_description",
     "What, if any, physical descriptions of this character are in this snippet?", 1},
    {Category::kPhysicalPersonality, "personality_description",
     "What, if any, descriptions of this character's personality are in this "
     "snippet?",
     2},
    {Category::kKnowledge, "knowledge_facts",
     "What, if any, factual information is given about this character in this "
     "snippet?",
     3},
    {Category::kKnowledge, "knowledge_learned",
     "What, if any, information has this character learned in this snippet?", 4},
    {Category::kGoals, "goals_gained",
     "What, if any, goals does this character gain in this snippet that they "
     "wish to accomplish in the future?",
     5},
    {Category::kGoals, "goals_completed",
     "What, if any, goals does this character complete in this snippet?", 6},
    {Category::kGoals, "goals_motivation",
     "How, if at all, does this character's internal motivations change in this "
     "snippet?",
     7},
}};

inline const QuestionSpec& find_question(std::string_view question_id) {
  for (const QuestionSpec& q : kQuestions) {
    if (q.question_id == question_id) return q;
  }
  throw ConfigError("unknown question '" + std::string(question_id) + "'");
}

inline std::vector<const QuestionSpec*> questions_in(Category c) {
  std::vector<const QuestionSpec*> out;
  for (const QuestionSpec& q : kQuestions) {
    if (q.category == c) out.push_back(&q);
  }
  return out;
}

// One atomic claim about a character, with its lineage.
struct Statement {
  std::string text;
  std::string question_id;
  SnippetRef snippet;
  std::string focus_character;
  std::string generator_model;
  std::optional<std::string> parent_sentence;
  std::size_t ordinal = 0;
};

inline void to_json(nlohmann::json& j, const Statement& s) {
  j = nlohmann::json{{"text", s.text},
                     {"question_id", s.question_id},
                     {"story_id", s.snippet.story_id},
                     {"entry_id", s.snippet.entry_id},
                     {"snippet_index", s.snippet.snippet_index},
                     {"focus_character", s.focus_character},
                     {"generator_model", s.generator_model},
                     {"ordinal", s.ordinal}};
  j["parent_sentence"] =
      s.parent_sentence ? nlohmann::json(*s.parent_sentence) : nlohmann::json();
}

inline void from_json(const nlohmann::json& j, Statement& s) {
  s.text = j.at("text").get<std::string>();
  s.question_id = j.at("question_id").get<std::string>();
  s.snippet.story_id = j.at("story_id").get<std::string>();
  s.snippet.entry_id = j.at("entry_id").get<std::string>();
  s.snippet.snippet_index = j.at("snippet_index").get<std::size_t>();
  s.focus_character = j.at("focus_character").get<std::string>();
  s.generator_model = j.value("generator_model", std::string());
  s.ordinal = j.value("ordinal", std::size_t{0});
  if (auto it = j.find("parent_sentence"); it != j.end() && it->is_string()) {
    s.parent_sentence = it->get<std::string>();
  }
}

inline constexpr int kGenerationMaxTokens = 512;
inline constexpr int kSimplificationMaxTokens = 256;

inline ChatRequest build_generation_prompt(const Snippet& snippet,
                                           const Character& character,
                                           const QuestionSpec& question) {
  const QuestionSpec& registered = find_question(question.question_id);
  if (registered.question_text != question.question_text) {
    throw ConfigError("question '" + std::string(question.question_id) +
                      "' does not match the registry");
  }
  std::string prompt = render_template(
      prompt_asset("prompts/generation.txt"),
      {{"story_section", snippet.text},
       {"character", character.canonical_name},
       {"question", std::string(registered.question_text)}});
  return make_prompt_request(std::move(prompt), kGenerationMaxTokens);
}

inline ChatRequest build_generation_prompt(const Snippet& snippet,
                                           const Character& character,
                                           std::string_view question_id) {
  return build_generation_prompt(snippet, character, find_question(question_id));
}

inline ChatRequest build_simplification_prompt(std::string_view sentence) {
  std::string prompt = render_template(prompt_asset("prompts/simplification.txt"),
                                       {{"sentence", std::string(sentence)}});
  return make_prompt_request(std::move(prompt), kSimplificationMaxTokens);
}

// Sentences of a completion, each whitespace-normalized to one line.
inline std::vector<std::string> completion_sentences(std::string_view completion) {
  std::vector<std::string> out;
  for (const std::string& s : split_sentences(completion)) {
    std::string n = normalize_whitespace(s);
    if (!n.empty()) out.push_back(std::move(n));
  }
  return out;
}

// Splits a compound sentence through the exemplar-guided prompt. Pronoun and
// reference resolution is left to the model. An empty completion keeps the
// sentence as-is.
inline std::vector<std::string> simplify_sentence(std::string_view sentence,
                                                  const Character& /*character*/,
                                                  Backend& backend,
                                                  const WarningSink& warnings = {}) {
  if (is_blank(sentence)) throw ContractError("simplify_sentence: empty sentence");
  ChatResponse response = backend.complete(build_simplification_prompt(sentence));
  std::string_view text = response.text;
  // Models sometimes keep writing further exemplars.
  if (std::size_t cut = text.find("Sentence:"); cut != std::string_view::npos) {
    text = text.substr(0, cut);
  }
  std::vector<std::string> parts = completion_sentences(text);
  if (parts.empty()) {
    warn(warnings, "empty simplification for: " + std::string(sentence));
    return {normalize_whitespace(sentence)};
  }
  return parts;
}

// generate -> split into sentences -> simplify each -> flatten.
inline std::vector<Statement> generate_statements(const Snippet& snippet,
                                                  const Character& character,
                                                  const QuestionSpec& question,
                                                  Backend& backend,
                                                  const WarningSink& warnings = {}) {
  ChatResponse answer;
  try {
    answer = backend.complete(build_generation_prompt(snippet, character, question));
  } catch (const BackendError& e) {
    throw BackendError(e.message() + " while generating " +
                           std::string(question.question_id) + " for snippet " +
                           snippet.story_id + "/" + snippet.entry_id + "#" +
                           std::to_string(snippet.snippet_index),
                       e.request_key());
  }
  std::vector<Statement> out;
  for (const std::string& sentence : completion_sentences(answer.text)) {
    std::vector<std::string> parts =
        simplify_sentence(sentence, character, backend, warnings);
    bool changed = !(parts.size() == 1 && parts.front() == sentence);
    for (std::string& part : parts) {
      Statement s;
      s.text = std::move(part);
      s.question_id = std::string(question.question_id);
      s.snippet = snippet.ref();
      s.focus_character = character.character_id;
      s.generator_model = answer.backend_id.empty() ? backend.id() : answer.backend_id;
      if (changed) s.parent_sentence = sentence;
      s.ordinal = out.size();
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace chiron

#endif  // CHIRON_GENERATION_HPP_
