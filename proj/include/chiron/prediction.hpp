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

// Masked-character prediction: snippets naming the top characters of a
// story have those names replaced by [CHAR k] ids, and a model is asked
// which id belongs to each character given some information about them.

#ifndef CHIRON_PREDICTION_HPP_
#define CHIRON_PREDICTION_HPP_

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/generation.hpp"
#include "chiron/llm.hpp"
#include "chiron/parallel.hpp"
#include "chiron/sheet.hpp"
#include "chiron/templates.hpp"
#include "chiron/text.hpp"
#include "chiron/validation.hpp"

namespace chiron {

// ---------------------------------------------------------------------------
// Masking

inline std::string mask_token(int id) { return "[CHAR " + std::to_string(id) + "]"; }

namespace detail {

struct AliasTarget {
  std::string lower;
  int id;
};

// Longest aliases first so "Jay Smith" wins over "Jay".
inline std::vector<AliasTarget> alias_targets(const std::vector<Character>& characters,
                                              const std::map<std::string, int>& ids) {
  std::vector<AliasTarget> targets;
  std::map<std::string, std::string> owner;
  std::vector<std::string> collisions;
  for (const Character& c : characters) {
    auto id = ids.find(c.character_id);
    if (id == ids.end()) {
      throw ContractError("no mask id for character " + c.character_id);
    }
    std::set<std::string> own;
    for (const std::string& alias : c.aliases) {
      std::string lower = to_lower_ascii(trim(alias));
      if (lower.empty() || !own.insert(lower).second) continue;
      auto [it, inserted] = owner.emplace(lower, c.character_id);
      if (!inserted) {
        collisions.push_back("'" + lower + "' (" + it->second + ", " + c.character_id +
                             ")");
        continue;
      }
      targets.push_back({lower, id->second});
    }
  }
  if (!collisions.empty()) {
    throw ContractError("alias shared by several characters: " + join(collisions, "; "));
  }
  std::stable_sort(targets.begin(), targets.end(),
                   [](const AliasTarget& a, const AliasTarget& b) {
                     return a.lower.size() > b.lower.size();
                   });
  return targets;
}

inline bool alias_at(std::string_view text, std::size_t i, std::string_view lower) {
  if (i + lower.size() > text.size()) return false;
  if (i > 0 && is_word_byte(text[i - 1]) && is_word_byte(lower.front())) return false;
  std::size_t end = i + lower.size();
  if (end < text.size() && is_word_byte(text[end]) && is_word_byte(lower.back())) {
    return false;
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (ascii_lower(text[i + k]) != lower[k]) return false;
  }
  return true;
}

}  // namespace detail

// Single left-to-right pass, so inserted mask tokens are never rescanned.
inline std::string mask_text(std::string_view text, const std::vector<Character>& characters,
                             const std::map<std::string, int>& gold_map) {
  std::set<int> used;
  for (const auto& [_, id] : gold_map) {
    if (!used.insert(id).second) throw ContractError("mask ids are not a bijection");
  }
  std::vector<detail::AliasTarget> targets = detail::alias_targets(characters, gold_map);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const detail::AliasTarget* hit = nullptr;
    for (const detail::AliasTarget& t : targets) {
      if (detail::alias_at(text, i, t.lower)) {
        hit = &t;
        break;
      }
    }
    if (hit) {
      out += mask_token(hit->id);
      i += hit->lower.size();
    } else {
      out += text[i++];
    }
  }
  return out;
}

// Case-insensitive whole-word occurrence of any alias.
inline bool mentions_character(std::string_view text, const Character& character) {
  std::string lower = to_lower_ascii(text);
  for (const std::string& alias : character.aliases) {
    std::string a = to_lower_ascii(trim(alias));
    if (!a.empty() && detail::find_token(lower, a) != std::string_view::npos) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Tasks

struct MaskedTask {
  std::string story_id;
  SnippetRef snippet;
  std::size_t entry_index = 0;
  std::string masked_text;
  std::vector<Character> characters;
  std::map<std::string, int> gold_map;
  std::uint64_t seed = 0;
};

// FNV-1a, stable across platforms.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Fisher-Yates over mt19937_64 with rejection sampling; std::shuffle and the
// standard distributions differ between library implementations.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(items[i - 1], items[static_cast<std::size_t>(draw % bound)]);
  }
}

inline std::uint64_t task_seed(std::uint64_t seed, const SnippetRef& ref) {
  return seed ^ stable_hash(ref.story_id + '\x1f' + ref.entry_id + '\x1f' +
                            std::to_string(ref.snippet_index));
}

// One task per snippet that names all k top characters of its story.
inline std::vector<MaskedTask> build_tasks(const std::vector<Story>& stories,
                                           std::size_t k = 3, std::uint64_t seed = 0,
                                           std::size_t budget = kDefaultSnippetBudget,
                                           const WarningSink& warnings = {}) {
  std::vector<MaskedTask> tasks;
  for (const Story& story : stories) {
    std::vector<Character> top = select_top_characters(story, k);
    if (top.size() < k) {
      warn(warnings, "story " + story.story_id + ": fewer than " + std::to_string(k) +
                         " characters, skipped");
      continue;
    }
    std::size_t before = tasks.size();
    for (const Snippet& snippet : split_story(story, budget)) {
      bool all = std::all_of(top.begin(), top.end(), [&](const Character& c) {
        return mentions_character(snippet.text, c);
      });
      if (!all) continue;
      MaskedTask task;
      task.story_id = story.story_id;
      task.snippet = snippet.ref();
      task.entry_index = snippet.entry_index;
      task.characters = top;
      task.seed = task_seed(seed, task.snippet);
      std::vector<int> ids(k);
      for (std::size_t i = 0; i < k; ++i) ids[i] = static_cast<int>(i);
      seeded_shuffle(ids, task.seed);
      for (std::size_t i = 0; i < k; ++i) task.gold_map[top[i].character_id] = ids[i];
      task.masked_text = mask_text(snippet.text, top, task.gold_map);
      tasks.push_back(std::move(task));
    }
    if (tasks.size() == before) {
      warn(warnings, "story " + story.story_id + ": no snippet names all top " +
                         std::to_string(k) + " characters, skipped");
    }
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// Settings

struct PredictionSetting {
  enum class Kind { kNoInformation, kCharacterSummary, kEntireSheet, kAgreed };
  Kind kind = Kind::kNoInformation;
  std::vector<Category> categories;  // kAgreed only

  static PredictionSetting none() { return {}; }
  static PredictionSetting summary() { return {Kind::kCharacterSummary, {}}; }
  static PredictionSetting entire_sheet() { return {Kind::kEntireSheet, {}}; }
  static PredictionSetting agreed(std::vector<Category> cats) {
    if (cats.empty()) throw ConfigError("Agreed needs at least one category");
    return {Kind::kAgreed, std::move(cats)};
  }

  bool needs_sheet() const { return kind == Kind::kEntireSheet || kind == Kind::kAgreed; }

  std::string name() const {
    switch (kind) {
      case Kind::kNoInformation: return "NoInformation";
      case Kind::kCharacterSummary: return "CharacterSummary";
      case Kind::kEntireSheet: return "EntireSheet";
      case Kind::kAgreed: {
        std::vector<std::string> ids;
        for (Category c : categories) ids.emplace_back(category_id(c));
        return "Agreed(" + join(ids, ",") + ")";
      }
    }
    return "";
  }

  // "NoInformation", "CharacterSummary", "EntireSheet", "Agreed" (all four
  // categories) or "Agreed(Knowledge,PhysicalPersonality)".
  static PredictionSetting parse(std::string_view text) {
    std::string s(trim(text));
    std::string lower = to_lower_ascii(s);
    if (lower == "noinformation" || lower == "none") return none();
    if (lower == "charactersummary" || lower == "summary") return summary();
    if (lower == "entiresheet" || lower == "sheet") return entire_sheet();
    if (lower == "agreed") {
      return agreed({kAllCategories.begin(), kAllCategories.end()});
    }
    if (lower.rfind("agreed(", 0) == 0 && lower.back() == ')') {
      std::vector<Category> cats;
      std::string inner = s.substr(7, s.size() - 8);
      std::size_t start = 0;
      while (start <= inner.size()) {
        std::size_t comma = inner.find(',', start);
        if (comma == std::string::npos) comma = inner.size();
        cats.push_back(parse_category(inner.substr(start, comma - start)));
        start = comma + 1;
      }
      return agreed(std::move(cats));
    }
    throw ConfigError("unknown prediction setting '" + s + "'");
  }
};

// What the prompt may show about one character.
struct CharacterInfo {
  std::optional<CharacterSheet> sheet;
  std::optional<std::string> summary;
};

inline constexpr int kPredictionMaxTokens = 4;

inline ChatRequest build_prediction_prompt(const MaskedTask& task,
                                           const Character& character,
                                           std::string_view info) {
  std::string block;
  if (!is_blank(info)) {
    block = "Information about " + character.canonical_name + ":\n\n" +
            std::string(trim(info)) + "\n\n";
  }
  const std::size_t n = task.characters.size();
  ChatRequest r = make_prompt_request(
      render_template(prompt_asset("prompts/prediction.txt"),
                      {{"num_characters", std::to_string(n)},
                       {"max_id", std::to_string(n == 0 ? 0 : n - 1)},
                       {"masked_story", task.masked_text},
                       {"character_info", block},
                       {"character", character.canonical_name}}),
      kPredictionMaxTokens);
  std::vector<std::string> options;
  for (std::size_t i = 0; i < n; ++i) options.push_back(std::to_string(i));
  r.want_option_scores = std::move(options);
  return r;
}

// Texts shown for one character: a single entry, or one per category for
// Agreed.
inline std::vector<std::string> information_texts(const PredictionSetting& setting,
                                                  const Character& character,
                                                  const CharacterInfo* info) {
  using Kind = PredictionSetting::Kind;
  if (setting.kind == Kind::kNoInformation) return {""};
  if (setting.kind == Kind::kCharacterSummary) {
    if (!info || !info->summary) {
      throw ContractError("no summary for character " + character.character_id);
    }
    return {*info->summary};
  }
  if (!info || !info->sheet) {
    throw ContractError("no sheet for character " + character.character_id);
  }
  if (setting.kind == Kind::kEntireSheet) return {render_sheet(*info->sheet)};
  std::vector<std::string> texts;
  for (Category c : setting.categories) {
    texts.push_back(render_sheet(*info->sheet, RenderMode::only(c)));
  }
  return texts;
}

// Elementwise product, renormalized.
inline std::vector<double> combine_distributions(
    const std::vector<std::vector<double>>& distributions) {
  if (distributions.empty()) throw ContractError("no distributions to combine");
  std::vector<long double> prod(distributions.front().size(), 1.0L);
  for (const std::vector<double>& d : distributions) {
    if (d.size() != prod.size()) throw ContractError("distribution sizes differ");
    for (std::size_t i = 0; i < d.size(); ++i) prod[i] *= d[i];
  }
  long double total = 0;
  for (long double p : prod) total += p;
  if (!(total > 0)) throw ScoringError("combined distribution has no mass");
  std::vector<double> out(prod.size());
  for (std::size_t i = 0; i < prod.size(); ++i) {
    out[i] = static_cast<double>(prod[i] / total);
  }
  return out;
}

// Ties go to the lowest id.
inline int argmax_lowest(const std::vector<double>& p) {
  if (p.empty()) throw ContractError("argmax of empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<int>(best);
}

struct CharacterPrediction {
  std::vector<std::vector<double>> per_category;
  std::vector<double> combined;
  int predicted_id = -1;
};

struct PredictionOutcome {
  std::string story_id;
  SnippetRef snippet;
  std::string setting;
  bool only_role = false;
  std::map<std::string, CharacterPrediction> per_character;
  std::map<std::string, int> assignment;
  std::map<std::string, int> gold_map;
  int correct_count = 0;
  bool valid = true;
  std::string error;
};

// Each character is scored independently; no one-to-one constraint between
// characters and ids is imposed.
inline PredictionOutcome predict_assignment(
    const MaskedTask& task, const PredictionSetting& setting,
    const std::map<std::string, CharacterInfo>& info, Backend& backend,
    bool only_role = false, double epsilon = kDefaultFallbackEpsilon) {
  PredictionOutcome out;
  out.story_id = task.story_id;
  out.snippet = task.snippet;
  out.setting = setting.name();
  out.only_role = only_role;
  out.gold_map = task.gold_map;
  for (const Character& c : task.characters) {
    auto it = info.find(c.character_id);
    std::vector<std::string> texts =
        information_texts(setting, c, it == info.end() ? nullptr : &it->second);
    CharacterPrediction p;
    try {
      for (const std::string& text : texts) {
        p.per_category.push_back(
            score_options(backend, build_prediction_prompt(task, c, text), epsilon)
                .probabilities);
      }
      p.combined = combine_distributions(p.per_category);
    } catch (const ScoringError& e) {
      out.valid = false;
      out.error = c.character_id + ": " + e.what();
    } catch (const BackendError& e) {
      out.valid = false;
      out.error = c.character_id + ": " + e.what();
    }
    if (!out.valid) break;
    p.predicted_id = argmax_lowest(p.combined);
    out.assignment[c.character_id] = p.predicted_id;
    out.per_character[c.character_id] = std::move(p);
  }
  if (!out.valid) {
    out.assignment.clear();
    out.per_character.clear();
    return out;
  }
  for (const auto& [id, predicted] : out.assignment) {
    if (task.gold_map.at(id) == predicted) ++out.correct_count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy

struct AccuracyRow {
  std::string setting;
  bool only_role = false;
  std::size_t tasks = 0;
  std::size_t invalid = 0;
  std::size_t correct = 0;
  std::size_t assignments = 0;        // over valid outcomes
  std::optional<double> accuracy;     // invalid outcomes excluded
  double accuracy_invalid_as_wrong = 0;
};

// Rows in first-seen (setting, only_role) order. Errors when no outcome is
// valid.
inline std::vector<AccuracyRow> score_accuracy(const std::vector<PredictionOutcome>& outcomes) {
  std::vector<AccuracyRow> rows;
  std::size_t valid_total = 0;
  std::map<std::pair<std::string, bool>, std::size_t> index;
  std::map<std::pair<std::string, bool>, std::size_t> all_assignments;
  for (const PredictionOutcome& o : outcomes) {
    auto key = std::make_pair(o.setting, o.only_role);
    auto [it, inserted] = index.emplace(key, rows.size());
    if (inserted) {
      AccuracyRow fresh;
      fresh.setting = o.setting;
      fresh.only_role = o.only_role;
      rows.push_back(std::move(fresh));
    }
    AccuracyRow& row = rows[it->second];
    ++row.tasks;
    all_assignments[key] += o.gold_map.size();
    if (!o.valid) {
      ++row.invalid;
      continue;
    }
    ++valid_total;
    row.correct += static_cast<std::size_t>(o.correct_count);
    row.assignments += o.gold_map.size();
  }
  if (valid_total == 0) throw StatisticsError("no valid prediction outcomes to score");
  for (AccuracyRow& row : rows) {
    if (row.assignments > 0) {
      row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.assignments);
    }
    std::size_t all = all_assignments[{row.setting, row.only_role}];
    row.accuracy_invalid_as_wrong =
        all ? static_cast<double>(row.correct) / static_cast<double>(all) : 0.0;
  }
  return rows;
}

inline std::string format_accuracy_table(const std::vector<AccuracyRow>& rows) {
  std::size_t width = 7;
  for (const AccuracyRow& r : rows) width = std::max(width, r.setting.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Setting" << "  OnlyRole"
      << "  Accuracy" << "  Correct/Total" << "  Invalid\n";
  for (const AccuracyRow& r : rows) {
    std::ostringstream acc;
    if (r.accuracy) {
      acc << std::fixed << std::setprecision(1) << *r.accuracy * 100.0 << "%";
    } else {
      acc << "n/a";
    }
    std::string ratio = std::to_string(r.correct) + "/" + std::to_string(r.assignments);
    out << std::left << std::setw(static_cast<int>(width)) << r.setting << "  "
        << std::setw(8) << (r.only_role ? "yes" : "no") << "  " << std::right
        << std::setw(8) << acc.str() << "  " << std::setw(13) << ratio << "  "
        << std::setw(7) << r.invalid << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Summaries

inline constexpr int kSummaryMaxTokens = 512;

inline ChatRequest build_summary_prompt(std::string_view story_so_far,
                                        const Character& character) {
  return make_prompt_request(
      render_template(prompt_asset("prompts/summary.txt"),
                      {{"story_section", std::string(story_so_far)},
                       {"character", character.canonical_name}}),
      kSummaryMaxTokens);
}

// One completion, split into sentences, each validated against the story so
// far; accepted sentences are re-joined in order.
inline std::string summarize_character(std::string_view story_so_far,
                                       const Character& character, Backend& generator,
                                       const ValidationConfig& config, Backend& reasoner,
                                       Backend& scorer, const WarningSink& warnings = {}) {
  if (is_blank(story_so_far)) throw ContractError("summarize_character: empty story");
  ChatResponse response = generator.complete(build_summary_prompt(story_so_far, character));
  std::vector<Statement> sentences;
  for (std::string& s : completion_sentences(response.text)) {
    Statement st;
    st.text = std::move(s);
    st.question_id = "summary";
    st.focus_character = character.character_id;
    st.generator_model = response.backend_id.empty() ? generator.id() : response.backend_id;
    st.ordinal = sentences.size();
    sentences.push_back(std::move(st));
  }
  ValidationResult result =
      validate_statements(sentences, story_so_far, character, config, reasoner, scorer,
                          warnings);
  std::vector<std::string> kept;
  for (const ValidatedStatement& v : result.accepted) kept.push_back(v.statement.text);
  return join(kept, " ");
}

// ---------------------------------------------------------------------------
// Oracle

// Scores the gold id of whichever task's masked text appears in the prompt.
class GoldOracleBackend : public Backend {
 public:
  explicit GoldOracleBackend(std::vector<MaskedTask> tasks) : tasks_(std::move(tasks)) {}

  ChatResponse complete(const ChatRequest& request) override {
    if (!request.want_option_scores || request.messages.empty()) {
      throw BackendError("gold oracle only answers scoring requests", request_key(request));
    }
    const std::string& prompt = request.messages.front().content;
    std::size_t q = prompt.rfind("Which ID refers to ");
    std::size_t e = prompt.find(" in the story section above?", q);
    if (q == std::string::npos || e == std::string::npos) {
      throw BackendError("gold oracle: not a prediction prompt", request_key(request));
    }
    std::string name = prompt.substr(q + 19, e - q - 19);
    const MaskedTask* best = nullptr;
    const Character* who = nullptr;
    for (const MaskedTask& t : tasks_) {
      if (best && t.masked_text.size() <= best->masked_text.size()) continue;
      if (prompt.find(t.masked_text) == std::string::npos) continue;
      for (const Character& c : t.characters) {
        if (c.canonical_name == name) {
          best = &t;
          who = &c;
        }
      }
    }
    if (!best) throw BackendError("gold oracle: unknown task", request_key(request));
    std::string gold = std::to_string(best->gold_map.at(who->character_id));
    ChatResponse r;
    r.text = gold;
    r.backend_id = id();
    std::map<std::string, double> scores;
    for (const std::string& o : *request.want_option_scores) {
      scores[o] = o == gold ? 0.0 : -20.0;
    }
    r.option_scores = std::move(scores);
    return r;
  }

  std::string id() const override { return "gold-oracle"; }

 private:
  std::vector<MaskedTask> tasks_;
};

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const MaskedTask& t) {
  j = nlohmann::json{{"story_id", t.story_id},
                     {"entry_id", t.snippet.entry_id},
                     {"snippet_index", t.snippet.snippet_index},
                     {"entry_index", t.entry_index},
                     {"masked_text", t.masked_text},
                     {"characters", t.characters},
                     {"gold_map", t.gold_map},
                     {"seed", t.seed}};
}

inline void from_json(const nlohmann::json& j, MaskedTask& t) {
  t.story_id = detail::required(j, "story_id", "task").get<std::string>();
  t.snippet.story_id = t.story_id;
  t.snippet.entry_id = detail::required(j, "entry_id", "task").get<std::string>();
  t.snippet.snippet_index = detail::required(j, "snippet_index", "task").get<std::size_t>();
  t.entry_index = j.value("entry_index", std::size_t{0});
  t.masked_text = detail::required(j, "masked_text", "task").get<std::string>();
  t.characters = detail::required(j, "characters", "task").get<std::vector<Character>>();
  t.gold_map = detail::required(j, "gold_map", "task").get<std::map<std::string, int>>();
  t.seed = j.value("seed", std::uint64_t{0});
}

inline void to_json(nlohmann::json& j, const PredictionOutcome& o) {
  nlohmann::json chars = nlohmann::json::object();
  for (const auto& [id, p] : o.per_character) {
    chars[id] = {{"per_category", p.per_category},
                 {"combined", p.combined},
                 {"predicted_id", p.predicted_id}};
  }
  j = nlohmann::json{{"story_id", o.story_id},
                     {"entry_id", o.snippet.entry_id},
                     {"snippet_index", o.snippet.snippet_index},
                     {"setting", o.setting},
                     {"only_role", o.only_role},
                     {"per_character", chars},
                     {"assignment", o.assignment},
                     {"gold_map", o.gold_map},
                     {"correct_count", o.correct_count},
                     {"valid", o.valid},
                     {"error", o.error}};
}

}  // namespace chiron

#endif  // CHIRON_PREDICTION_HPP_
