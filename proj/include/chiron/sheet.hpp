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

// Story-level character sheets: per-question concatenation of accepted
// statements, TF-IDF near-duplicate removal, and text rendering.

#ifndef CHIRON_SHEET_HPP_
#define CHIRON_SHEET_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/generation.hpp"
#include "chiron/text.hpp"

namespace chiron {

// ---------------------------------------------------------------------------
// TF-IDF

struct DedupConfig {
  double threshold = 0.9;

  void validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
      throw ConfigError("dedup threshold must be in (0, 1], got " +
                        std::to_string(threshold));
    }
  }
};

// Lowercase, drop ASCII punctuation, split on whitespace.
inline std::vector<std::string> dedup_tokens(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    if (std::ispunct(static_cast<unsigned char>(c))) continue;
    cleaned.push_back(ascii_lower(c));
  }
  std::vector<std::string> out;
  for (std::string_view w : split_words(cleaned)) out.emplace_back(w);
  return out;
}

using SparseVector = std::vector<std::pair<std::size_t, double>>;  // sorted by term

class TfidfModel {
 public:
  // idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the fitted documents.
  static TfidfModel fit(const std::vector<std::string>& documents) {
    TfidfModel m;
    std::vector<std::size_t> df;
    for (const std::string& doc : documents) {
      std::vector<std::string> toks = dedup_tokens(doc);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      for (std::string& t : toks) {
        auto [it, inserted] = m.vocab_.emplace(std::move(t), df.size());
        if (inserted) df.push_back(0);
        ++df[it->second];
      }
    }
    const double n = static_cast<double>(documents.size());
    m.idf_.resize(df.size());
    for (std::size_t i = 0; i < df.size(); ++i) {
      m.idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
    }
    return m;
  }

  // Raw term counts times idf; unseen terms are dropped.
  SparseVector transform(std::string_view document) const {
    std::map<std::size_t, double> counts;
    for (const std::string& t : dedup_tokens(document)) {
      auto it = vocab_.find(t);
      if (it != vocab_.end()) counts[it->second] += 1.0;
    }
    SparseVector v;
    v.reserve(counts.size());
    for (const auto& [term, tf] : counts) v.emplace_back(term, tf * idf_[term]);
    return v;
  }

  std::size_t vocabulary_size() const { return idf_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<double> idf_;
};

// Zero-norm vectors have cosine 0 with everything.
inline double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0, na = 0, nb = 0;
  for (const auto& [_, x] : a) na += x * x;
  for (const auto& [_, x] : b) nb += x * x;
  if (na == 0 || nb == 0) return 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      dot += a[i++].second * b[j++].second;
    } else if (a[i].first < b[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Indices kept by an in-order scan: a text survives iff its cosine with every
// text kept before it is below the threshold. Vectors come from one model
// fitted over all the texts.
inline std::vector<std::size_t> dedup_kept_indices(const std::vector<std::string>& texts,
                                                   const DedupConfig& config = {}) {
  config.validate();
  TfidfModel model = TfidfModel::fit(texts);
  std::vector<SparseVector> vectors;
  vectors.reserve(texts.size());
  for (const std::string& t : texts) vectors.push_back(model.transform(t));
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    bool keep = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return cosine(vectors[i], vectors[k]) < config.threshold;
    });
    if (keep) kept.push_back(i);
  }
  return kept;
}

inline std::vector<Statement> dedup_statements(const std::vector<Statement>& statements,
                                               const DedupConfig& config = {}) {
  std::vector<std::string> texts;
  texts.reserve(statements.size());
  for (const Statement& s : statements) texts.push_back(s.text);
  std::vector<Statement> out;
  for (std::size_t i : dedup_kept_indices(texts, config)) out.push_back(statements[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Sheets

struct SheetProvenance {
  std::string policy = "eq5";
  std::string reasoning_mode = "All";
  bool only_role = false;
  double dedup_threshold = 0.9;
  std::string prompt_registry_version{kPromptRegistryVersion};
  std::string generator_model;
};

struct CharacterSheet {
  std::string story_id;
  Character character;
  std::map<std::string, std::vector<Statement>> by_question;
  SheetProvenance provenance;

  const std::vector<Statement>& statements(std::string_view question_id) const {
    static const std::vector<Statement> kEmpty;
    auto it = by_question.find(std::string(question_id));
    return it == by_question.end() ? kEmpty : it->second;
  }
};

// Accepted statements produced from one snippet.
struct SnippetStatements {
  Snippet snippet;
  std::vector<Statement> accepted;
};

inline CharacterSheet assemble_sheet(const std::string& story_id,
                                     const Character& character,
                                     const std::vector<SnippetStatements>& groups,
                                     bool only_role, const DedupConfig& dedup = {},
                                     SheetProvenance provenance = {}) {
  dedup.validate();
  struct Keyed {
    std::size_t entry_index;
    std::size_t snippet_index;
    std::size_t ordinal;
    const Statement* statement;
  };
  std::map<std::string, std::vector<Keyed>> pooled;
  for (const SnippetStatements& g : groups) {
    if (g.snippet.story_id != story_id) {
      throw ContractError("assemble_sheet: snippet from story " + g.snippet.story_id +
                          " in sheet for " + story_id);
    }
    for (const Statement& s : g.accepted) {
      if (s.snippet.story_id != story_id ||
          s.focus_character != character.character_id) {
        throw ContractError("assemble_sheet: statement about " + s.snippet.story_id +
                            "/" + s.focus_character + " in sheet for " + story_id +
                            "/" + character.character_id);
      }
      find_question(s.question_id);
    }
    if (only_role && g.snippet.focus_character != character.character_id) continue;
    for (const Statement& s : g.accepted) {
      pooled[s.question_id].push_back(
          {g.snippet.entry_index, g.snippet.snippet_index, s.ordinal, &s});
    }
  }

  CharacterSheet sheet;
  sheet.story_id = story_id;
  sheet.character = character;
  provenance.only_role = only_role;
  provenance.dedup_threshold = dedup.threshold;
  sheet.provenance = std::move(provenance);
  for (auto& [question_id, items] : pooled) {
    std::stable_sort(items.begin(), items.end(), [](const Keyed& a, const Keyed& b) {
      return std::tie(a.entry_index, a.snippet_index, a.ordinal) <
             std::tie(b.entry_index, b.snippet_index, b.ordinal);
    });
    std::vector<Statement> ordered;
    ordered.reserve(items.size());
    for (const Keyed& k : items) ordered.push_back(*k.statement);
    sheet.by_question[question_id] = dedup_statements(ordered, dedup);
  }
  return sheet;
}

struct RenderMode {
  bool entire = true;
  Category category = Category::kDialogue;

  static RenderMode whole() { return {}; }
  static RenderMode only(Category c) { return {false, c}; }
  // "entire" or a category name.
  static RenderMode parse(std::string_view s) {
    if (iequals_ascii(trim(s), "entire")) return whole();
    return only(parse_category(s));
  }
};

inline void render_category(std::string& out, const CharacterSheet& sheet, Category c) {
  out += category_title(c);
  out += ":\n";
  for (const QuestionSpec* q : questions_in(c)) {
    out += q->question_text;
    out += '\n';
    for (const Statement& s : sheet.statements(q->question_id)) {
      out += "- " + s.text + "\n";
    }
  }
}

inline std::string render_sheet(const CharacterSheet& sheet, RenderMode mode = {}) {
  std::string out;
  if (!mode.entire) {
    render_category(out, sheet, mode.category);
    return out;
  }
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    if (i > 0) out += '\n';
    render_category(out, sheet, kAllCategories[i]);
  }
  return out;
}

struct SheetCounts {
  std::map<Category, std::size_t> per_category;
  std::size_t total = 0;
};

inline SheetCounts sheet_sentence_count(const CharacterSheet& sheet) {
  SheetCounts counts;
  for (Category c : kAllCategories) counts.per_category[c] = 0;
  for (const auto& [question_id, statements] : sheet.by_question) {
    counts.per_category[find_question(question_id).category] += statements.size();
    counts.total += statements.size();
  }
  return counts;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const SheetProvenance& p) {
  j = nlohmann::json{{"policy", p.policy},
                     {"reasoning_mode", p.reasoning_mode},
                     {"only_role", p.only_role},
                     {"dedup_threshold", p.dedup_threshold},
                     {"prompt_registry_version", p.prompt_registry_version},
                     {"generator_model", p.generator_model}};
}

inline void from_json(const nlohmann::json& j, SheetProvenance& p) {
  p.policy = j.value("policy", std::string("eq5"));
  p.reasoning_mode = j.value("reasoning_mode", std::string("All"));
  p.only_role = j.value("only_role", false);
  p.dedup_threshold = j.value("dedup_threshold", 0.9);
  p.prompt_registry_version =
      j.value("prompt_registry_version", std::string(kPromptRegistryVersion));
  p.generator_model = j.value("generator_model", std::string());
}

// Every category and question is present, empty lists included.
inline void to_json(nlohmann::json& j, const CharacterSheet& s) {
  nlohmann::json categories = nlohmann::json::object();
  for (Category c : kAllCategories) {
    nlohmann::json questions = nlohmann::json::object();
    for (const QuestionSpec* q : questions_in(c)) {
      questions[std::string(q->question_id)] = s.statements(q->question_id);
    }
    categories[category_id(c)] = std::move(questions);
  }
  j = nlohmann::json{{"story_id", s.story_id},
                     {"character", s.character},
                     {"provenance", s.provenance},
                     {"categories", std::move(categories)}};
}

inline void from_json(const nlohmann::json& j, CharacterSheet& s) {
  s.story_id = detail::required(j, "story_id", "sheet").get<std::string>();
  s.character = detail::required(j, "character", "sheet").get<Character>();
  if (auto it = j.find("provenance"); it != j.end() && it->is_object()) {
    s.provenance = it->get<SheetProvenance>();
  }
  s.by_question.clear();
  for (const auto& [cat, questions] :
       detail::required(j, "categories", "sheet").items()) {
    Category c = parse_category(cat);
    for (const auto& [qid, statements] : questions.items()) {
      if (find_question(qid).category != c) {
        throw InputError("sheet: question " + qid + " filed under " + cat);
      }
      auto list = statements.get<std::vector<Statement>>();
      if (!list.empty()) s.by_question[qid] = std::move(list);
    }
  }
}

}  // namespace chiron

#endif  // CHIRON_SHEET_HPP_
