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

// Story corpus model: ingestion from JSONL, the narrative-style filters,
// paragraph-aligned snippet splitting and focal character selection.

#ifndef CHIRON_CORPUS_HPP_
#define CHIRON_CORPUS_HPP_

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chiron/error.hpp"
#include "chiron/text.hpp"

namespace chiron {

inline constexpr std::size_t kDefaultSnippetBudget = 350;

struct StoryMetadata {
  std::optional<std::string> play_style;
  std::optional<std::string> speed;
  std::optional<bool> suspended;
  std::optional<bool> is_nsfw;
  std::optional<std::string> language;
  std::optional<bool> finished;
};

struct SceneFlags {
  bool is_ended = false;
  bool is_final = false;
};

struct Entry {
  std::string entry_id;
  std::string scene_id;
  std::string perspective_character;
  std::string text;
  std::size_t word_count = 0;
  std::optional<SceneFlags> scene_flags;
};

struct Character {
  std::string character_id;
  std::string canonical_name;
  std::vector<std::string> aliases;
  std::size_t appearance_count = 0;
};

struct Story {
  std::string story_id;
  std::string title;
  StoryMetadata metadata;
  std::vector<Entry> entries;
  std::vector<Character> characters;

  const Character* find_character(std::string_view id) const {
    for (const Character& c : characters) {
      if (c.character_id == id) return &c;
    }
    return nullptr;
  }

  std::size_t total_words() const {
    std::size_t n = 0;
    for (const Entry& e : entries) n += e.word_count;
    return n;
  }
};

struct SnippetRef {
  std::string story_id;
  std::string entry_id;
  std::size_t snippet_index = 0;

  friend bool operator==(const SnippetRef&, const SnippetRef&) = default;
};

struct Snippet {
  std::string story_id;
  std::string entry_id;
  // Position of the source entry within its story.
  std::size_t entry_index = 0;
  std::size_t snippet_index = 0;
  // Perspective character of the source entry.
  std::string focus_character;
  std::string text;
  std::pair<std::size_t, std::size_t> paragraph_span{0, 0};

  SnippetRef ref() const { return {story_id, entry_id, snippet_index}; }
};

// ---------------------------------------------------------------------------
// Filtering

struct FilterConfig {
  std::vector<std::string> play_styles{"writing", "standard"};
  std::string excluded_speed = "Hardcore";
  std::string language = "English";
  std::size_t min_total_words = 1000;         // strictly greater
  std::size_t min_avg_words_per_entry = 30;   // strictly greater
  bool require_finished = false;
  std::optional<std::size_t> min_entry_words;  // entries kept iff strictly greater
  std::optional<std::size_t> max_total_words;  // strictly less

  // Extras used for masked-character prediction. The total-word cap stays
  // off unless requested.
  static FilterConfig masked_prediction(bool cap_total_words = false) {
    FilterConfig c;
    c.require_finished = true;
    c.min_entry_words = 50;
    if (cap_total_words) c.max_total_words = 10000;
    return c;
  }
};

enum class RejectReason {
  kMissingMetadata,
  kNoEntries,
  kPlayStyle,
  kSpeed,
  kSuspended,
  kNsfw,
  kLanguage,
  kTooFewWords,
  kShortEntries,
  kTooManyWords,
  kNotFinished,
};

inline const char* reason_code(RejectReason r) {
  switch (r) {
    case RejectReason::kMissingMetadata: return "missing_metadata";
    case RejectReason::kNoEntries: return "no_entries";
    case RejectReason::kPlayStyle: return "play_style";
    case RejectReason::kSpeed: return "speed";
    case RejectReason::kSuspended: return "suspended";
    case RejectReason::kNsfw: return "nsfw";
    case RejectReason::kLanguage: return "language";
    case RejectReason::kTooFewWords: return "too_few_words";
    case RejectReason::kShortEntries: return "short_entries";
    case RejectReason::kTooManyWords: return "too_many_words";
    case RejectReason::kNotFinished: return "not_finished";
  }
  return "unknown";
}

struct Rejection {
  std::string story_id;
  RejectReason reason;
  std::string detail;
};

struct FilterResult {
  std::vector<Story> kept;
  std::vector<Rejection> rejected;
};

// Finished means the metadata says so; without that field, the last entry's
// scene must be both ended and final.
inline std::optional<bool> story_finished(const Story& story) {
  if (story.metadata.finished) return story.metadata.finished;
  if (story.entries.empty() || !story.entries.back().scene_flags) {
    return std::nullopt;
  }
  const SceneFlags& f = *story.entries.back().scene_flags;
  return f.is_ended && f.is_final;
}

// Checks one story. Entry pruning (min_entry_words) is applied first so that
// the story-level predicates see the pruned story; this keeps the filter
// idempotent.
inline std::optional<Rejection> check_story(Story& story,
                                            const FilterConfig& config) {
  auto reject = [&](RejectReason r, std::string detail = {}) {
    return std::optional<Rejection>(Rejection{story.story_id, r, std::move(detail)});
  };
  const StoryMetadata& m = story.metadata;
  if (!m.play_style) return reject(RejectReason::kMissingMetadata, "play_style");
  if (!m.speed) return reject(RejectReason::kMissingMetadata, "speed");
  if (!m.suspended) return reject(RejectReason::kMissingMetadata, "suspended");
  if (!m.is_nsfw) return reject(RejectReason::kMissingMetadata, "is_nsfw");
  if (!m.language) return reject(RejectReason::kMissingMetadata, "language");

  if (config.min_entry_words) {
    std::size_t floor = *config.min_entry_words;
    std::erase_if(story.entries,
                  [floor](const Entry& e) { return e.word_count <= floor; });
  }

  bool style_ok = std::any_of(
      config.play_styles.begin(), config.play_styles.end(),
      [&](const std::string& s) { return iequals_ascii(s, *m.play_style); });
  if (!style_ok) return reject(RejectReason::kPlayStyle, *m.play_style);
  if (iequals_ascii(*m.speed, config.excluded_speed)) {
    return reject(RejectReason::kSpeed, *m.speed);
  }
  if (*m.suspended) return reject(RejectReason::kSuspended);
  if (*m.is_nsfw) return reject(RejectReason::kNsfw);
  if (!iequals_ascii(*m.language, config.language)) {
    return reject(RejectReason::kLanguage, *m.language);
  }
  if (story.entries.empty()) return reject(RejectReason::kNoEntries);

  std::size_t total = story.total_words();
  if (total <= config.min_total_words) {
    return reject(RejectReason::kTooFewWords, std::to_string(total));
  }
  // avg > threshold  <=>  total > threshold * entries
  if (total <= config.min_avg_words_per_entry * story.entries.size()) {
    return reject(RejectReason::kShortEntries);
  }
  if (config.max_total_words && total >= *config.max_total_words) {
    return reject(RejectReason::kTooManyWords, std::to_string(total));
  }
  if (config.require_finished) {
    std::optional<bool> finished = story_finished(story);
    if (!finished) return reject(RejectReason::kMissingMetadata, "finished");
    if (!*finished) return reject(RejectReason::kNotFinished);
  }
  return std::nullopt;
}

inline FilterResult filter_stories_with_report(const std::vector<Story>& stories,
                                               const FilterConfig& config = {}) {
  FilterResult result;
  for (const Story& s : stories) {
    Story copy = s;
    if (auto r = check_story(copy, config)) {
      result.rejected.push_back(std::move(*r));
    } else {
      result.kept.push_back(std::move(copy));
    }
  }
  return result;
}

inline std::vector<Story> filter_stories(const std::vector<Story>& stories,
                                         const FilterConfig& config = {}) {
  return filter_stories_with_report(stories, config).kept;
}

// ---------------------------------------------------------------------------
// Snippets

// Greedy paragraph packing: a snippet closes when the next paragraph would
// push it past `budget` words. A paragraph is never split, so a paragraph
// longer than the budget becomes a snippet of its own.
inline std::vector<Snippet> split_entry(std::string_view story_id,
                                        const Entry& entry,
                                        std::size_t entry_index = 0,
                                        std::size_t budget = kDefaultSnippetBudget) {
  if (budget == 0) throw ContractError("split_entry: budget must be positive");
  std::vector<std::string> paragraphs = split_paragraphs(entry.text);
  std::vector<Snippet> snippets;

  std::vector<std::string> current;
  std::size_t current_words = 0;
  std::size_t first_para = 0;
  auto close = [&](std::size_t last_para) {
    Snippet s;
    s.story_id = std::string(story_id);
    s.entry_id = entry.entry_id;
    s.entry_index = entry_index;
    s.snippet_index = snippets.size();
    s.focus_character = entry.perspective_character;
    s.text = join(current, "\n\n");
    s.paragraph_span = {first_para, last_para};
    snippets.push_back(std::move(s));
    current.clear();
    current_words = 0;
  };
  for (std::size_t p = 0; p < paragraphs.size(); ++p) {
    std::size_t w = word_count(paragraphs[p]);
    if (!current.empty() && current_words + w > budget) close(p - 1);
    if (current.empty()) first_para = p;
    current.push_back(paragraphs[p]);
    current_words += w;
  }
  if (!current.empty()) close(paragraphs.size() - 1);
  return snippets;
}

inline std::vector<Snippet> split_story(const Story& story,
                                        std::size_t budget = kDefaultSnippetBudget) {
  std::vector<Snippet> all;
  for (std::size_t i = 0; i < story.entries.size(); ++i) {
    std::vector<Snippet> part =
        split_entry(story.story_id, story.entries[i], i, budget);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Characters

// Appearance = number of entries told from the character's perspective.
inline void compute_appearance_counts(Story& story) {
  std::map<std::string, std::size_t> counts;
  for (const Entry& e : story.entries) ++counts[e.perspective_character];
  for (Character& c : story.characters) c.appearance_count = counts[c.character_id];
}

// Top-k by appearance_count, ties broken by ascending character_id.
inline std::vector<Character> select_top_characters(const Story& story,
                                                    std::size_t k) {
  if (k < 1) throw ContractError("select_top_characters: k must be >= 1");
  std::vector<Character> sorted = story.characters;
  std::sort(sorted.begin(), sorted.end(),
            [](const Character& a, const Character& b) {
              if (a.appearance_count != b.appearance_count) {
                return a.appearance_count > b.appearance_count;
              }
              return a.character_id < b.character_id;
            });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

template <typename T>
std::optional<T> opt_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

inline const nlohmann::json& required(const nlohmann::json& j, const char* key,
                                      const char* what) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw InputError(std::string(what) + ": missing field '" + key + "'");
  }
  return *it;
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const Character& c) {
  j = nlohmann::json{{"character_id", c.character_id},
                     {"canonical_name", c.canonical_name},
                     {"aliases", c.aliases},
                     {"appearance_count", c.appearance_count}};
}

inline void from_json(const nlohmann::json& j, Character& c) {
  c.character_id = detail::required(j, "character_id", "character").get<std::string>();
  c.canonical_name =
      detail::required(j, "canonical_name", "character").get<std::string>();
  c.aliases = detail::opt_field<std::vector<std::string>>(j, "aliases")
                  .value_or(std::vector<std::string>{});
  if (std::find(c.aliases.begin(), c.aliases.end(), c.canonical_name) ==
      c.aliases.end()) {
    c.aliases.insert(c.aliases.begin(), c.canonical_name);
  }
  c.appearance_count = detail::opt_field<std::size_t>(j, "appearance_count").value_or(0);
}

inline void to_json(nlohmann::json& j, const Entry& e) {
  j = nlohmann::json{{"entry_id", e.entry_id},
                     {"scene_id", e.scene_id},
                     {"perspective_character", e.perspective_character},
                     {"text", e.text},
                     {"word_count", e.word_count}};
  if (e.scene_flags) {
    j["scene_flags"] = {{"is_ended", e.scene_flags->is_ended},
                        {"is_final", e.scene_flags->is_final}};
  }
}

inline void from_json(const nlohmann::json& j, Entry& e) {
  e.entry_id = detail::required(j, "entry_id", "entry").get<std::string>();
  e.scene_id = detail::opt_field<std::string>(j, "scene_id").value_or("");
  e.perspective_character =
      detail::required(j, "perspective_character", "entry").get<std::string>();
  e.text = detail::required(j, "text", "entry").get<std::string>();
  e.word_count = word_count(e.text);
  if (auto it = j.find("scene_flags"); it != j.end() && it->is_object()) {
    SceneFlags f;
    f.is_ended = it->value("is_ended", false);
    f.is_final = it->value("is_final", false);
    e.scene_flags = f;
  }
}

inline void to_json(nlohmann::json& j, const Story& s) {
  nlohmann::json meta = nlohmann::json::object();
  const StoryMetadata& m = s.metadata;
  if (m.play_style) meta["play_style"] = *m.play_style;
  if (m.speed) meta["speed"] = *m.speed;
  if (m.suspended) meta["suspended"] = *m.suspended;
  if (m.is_nsfw) meta["is_nsfw"] = *m.is_nsfw;
  if (m.language) meta["language"] = *m.language;
  if (m.finished) meta["finished"] = *m.finished;
  j = nlohmann::json{{"story_id", s.story_id},
                     {"title", s.title},
                     {"metadata", meta},
                     {"entries", s.entries},
                     {"characters", s.characters}};
}

inline void from_json(const nlohmann::json& j, Story& s) {
  s.story_id = detail::required(j, "story_id", "story").get<std::string>();
  s.title = detail::opt_field<std::string>(j, "title").value_or("");
  if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
    const nlohmann::json& m = *it;
    s.metadata.play_style = detail::opt_field<std::string>(m, "play_style");
    s.metadata.speed = detail::opt_field<std::string>(m, "speed");
    s.metadata.suspended = detail::opt_field<bool>(m, "suspended");
    s.metadata.is_nsfw = detail::opt_field<bool>(m, "is_nsfw");
    s.metadata.language = detail::opt_field<std::string>(m, "language");
    s.metadata.finished = detail::opt_field<bool>(m, "finished");
  }
  s.entries = detail::required(j, "entries", "story").get<std::vector<Entry>>();
  s.characters = detail::opt_field<std::vector<Character>>(j, "characters")
                     .value_or(std::vector<Character>{});

  std::set<std::string> ids;
  for (const Character& c : s.characters) ids.insert(c.character_id);
  for (const Entry& e : s.entries) {
    if (!ids.count(e.perspective_character)) {
      throw InputError("story " + s.story_id + ": entry " + e.entry_id +
                       " has unknown perspective character '" +
                       e.perspective_character + "'");
    }
  }
  bool has_counts = !j.contains("characters") ||
                    std::all_of(j["characters"].begin(), j["characters"].end(),
                                [](const nlohmann::json& c) {
                                  return c.contains("appearance_count");
                                });
  if (!has_counts) compute_appearance_counts(s);
}

inline void to_json(nlohmann::json& j, const Snippet& s) {
  j = nlohmann::json{{"story_id", s.story_id},
                     {"entry_id", s.entry_id},
                     {"entry_index", s.entry_index},
                     {"snippet_index", s.snippet_index},
                     {"focus_character", s.focus_character},
                     {"text", s.text},
                     {"paragraph_span", {s.paragraph_span.first, s.paragraph_span.second}}};
}

inline void from_json(const nlohmann::json& j, Snippet& s) {
  s.story_id = detail::required(j, "story_id", "snippet").get<std::string>();
  s.entry_id = detail::required(j, "entry_id", "snippet").get<std::string>();
  s.entry_index = detail::opt_field<std::size_t>(j, "entry_index").value_or(0);
  s.snippet_index = detail::required(j, "snippet_index", "snippet").get<std::size_t>();
  s.focus_character =
      detail::required(j, "focus_character", "snippet").get<std::string>();
  s.text = detail::required(j, "text", "snippet").get<std::string>();
  if (auto it = j.find("paragraph_span"); it != j.end() && it->is_array() &&
                                          it->size() == 2) {
    s.paragraph_span = {(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
  }
}

// Reads one JSON value per non-blank line. Lines holding only a provenance
// header ({"provenance": ...}) are skipped. Errors carry the line number.
template <typename T>
std::vector<T> read_jsonl(std::istream& in) {
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (j.is_object() && j.size() == 1 && j.contains("provenance")) continue;
    try {
      out.push_back(j.get<T>());
    } catch (const InputError& e) {
      throw InputError(e.what(), line_no);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(e.what(), line_no);
    }
  }
  return out;
}

template <typename T>
void write_jsonl(std::ostream& out, const std::vector<T>& items) {
  for (const T& item : items) out << nlohmann::json(item).dump() << '\n';
}

}  // namespace chiron

#endif  // CHIRON_CORPUS_HPP_
