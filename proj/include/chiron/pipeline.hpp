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

// End-to-end commands behind the CLI. Every command reads its inputs from
// RunConfig, writes its outputs under RunConfig::out_dir with the provenance
// block embedded, and returns a process exit code.

#ifndef CHIRON_PIPELINE_HPP_
#define CHIRON_PIPELINE_HPP_

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/generation.hpp"
#include "chiron/llm.hpp"
#include "chiron/llm_cache.hpp"
#include "chiron/llm_http.hpp"
#include "chiron/llm_mock.hpp"
#include "chiron/metrics.hpp"
#include "chiron/parallel.hpp"
#include "chiron/prediction.hpp"
#include "chiron/sheet.hpp"
#include "chiron/templates.hpp"
#include "chiron/validation.hpp"

namespace chiron {

enum ExitCode : int {
  kExitOk = 0,
  kExitPartial = 1,
  kExitInput = 2,
  kExitBackend = 3,
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const ProtocolError*>(&e) ||
      dynamic_cast<const ScoringError*>(&e)) {
    return kExitBackend;
  }
  return kExitInput;
}

struct BackendSpec {
  std::string kind = "mock";  // http, mock, replay, oracle
  std::string base_url;
  std::string model;
  std::string scorer_model;  // http only; empty = same model
};

struct RunConfig {
  std::string command;
  std::string corpus_path;
  std::string snippets_path;
  std::string sheets_path;
  std::string annotations_path;
  std::string predictions_path;
  std::string scores_path;
  BackendSpec backend;
  std::string policy = "eq5";
  std::string reasoning_mode = "All";
  bool only_role = false;
  double dedup_threshold = 0.9;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::size_t concurrency = 4;
  bool cache = true;
  std::string cache_path;
  std::size_t budget = kDefaultSnippetBudget;
  std::size_t top_k = 3;
  std::vector<std::string> characters;
  std::vector<std::string> settings;
  std::string setup;
  std::string source;
  std::string alpha_distance = "interval";
  // Ingest and predict filters.
  bool require_finished = false;
  std::optional<std::size_t> min_entry_words;
  std::optional<std::size_t> max_total_words;
  bool skip_filter = false;

  // Everything that can change an output's content. The output directory
  // and the concurrency cap are left out so runs that differ only in those
  // produce identical files.
  nlohmann::json provenance() const {
    nlohmann::json j = {
        {"command", command},
        {"corpus", corpus_path},
        {"snippets", snippets_path},
        {"backend",
         {{"kind", backend.kind},
          {"base_url", backend.base_url},
          {"model", backend.model},
          {"scorer_model", backend.scorer_model}}},
        {"policy", policy},
        {"reasoning_mode", reasoning_mode},
        {"only_role", only_role},
        {"dedup_threshold", dedup_threshold},
        {"seed", seed},
        {"cache", cache},
        {"budget", budget},
        {"top_k", top_k},
        {"characters", characters},
        {"settings", settings},
        {"prompt_registry_version", kPromptRegistryVersion},
    };
    if (require_finished) j["require_finished"] = true;
    if (min_entry_words) j["min_entry_words"] = *min_entry_words;
    if (max_total_words) j["max_total_words"] = *max_total_words;
    if (skip_filter) j["skip_filter"] = true;
    return j;
  }

  void validate() const {
    parse_policy(policy);
    parse_reasoning_mode(reasoning_mode);
    DedupConfig{dedup_threshold}.validate();
    if (concurrency == 0) throw ConfigError("concurrency must be positive");
    if (budget == 0) throw ConfigError("budget must be positive");
    if (top_k == 0) throw ConfigError("top-k must be positive");
    static const std::set<std::string> kinds = {"http", "mock", "replay", "oracle"};
    if (!kinds.count(backend.kind)) {
      throw ConfigError("unknown backend kind '" + backend.kind + "'");
    }
  }
};

// Thread-safe collector that also echoes to a stream.
class WarningLog {
 public:
  explicit WarningLog(std::ostream* echo = nullptr) : echo_(echo) {}

  WarningSink sink() {
    return [this](std::string_view msg) {
      std::lock_guard lock(mutex_);
      messages_.emplace_back(msg);
      if (echo_) *echo_ << "warning: " << msg << '\n';
    };
  }
  std::size_t count() const {
    std::lock_guard lock(mutex_);
    return messages_.size();
  }

 private:
  std::ostream* echo_;
  mutable std::mutex mutex_;
  std::vector<std::string> messages_;
};

// ---------------------------------------------------------------------------
// I/O

namespace detail {

inline std::filesystem::path out_path(const RunConfig& config, const std::string& name) {
  std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

inline void write_provenance_line(std::ostream& out, const RunConfig& config) {
  out << nlohmann::json{{"provenance", config.provenance()}}.dump() << '\n';
}

template <typename T>
void write_jsonl_file(const RunConfig& config, const std::string& name,
                      const std::vector<T>& items) {
  std::ofstream out = open_out(out_path(config, name));
  write_provenance_line(out, config);
  for (const T& item : items) out << nlohmann::json(item).dump() << '\n';
}

inline void write_json_file(const RunConfig& config, const std::string& name,
                            nlohmann::json body) {
  body["provenance"] = config.provenance();
  std::ofstream out = open_out(out_path(config, name));
  out << body.dump(2) << '\n';
}

inline void write_text_file(const RunConfig& config, const std::string& name,
                            const std::string& text) {
  std::ofstream out = open_out(out_path(config, name));
  out << "# provenance: " << config.provenance().dump() << '\n' << text;
}

template <typename T>
std::vector<T> read_jsonl_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing --") + what + " path");
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return read_jsonl<T>(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace detail

inline std::vector<Story> load_corpus(const RunConfig& config) {
  return detail::read_jsonl_file<Story>(config.corpus_path, "corpus");
}

inline FilterConfig filter_for(const RunConfig& config, bool masked_prediction) {
  FilterConfig f = masked_prediction ? FilterConfig::masked_prediction() : FilterConfig{};
  if (config.require_finished) f.require_finished = true;
  if (config.min_entry_words) f.min_entry_words = config.min_entry_words;
  if (config.max_total_words) f.max_total_words = config.max_total_words;
  return f;
}

// ---------------------------------------------------------------------------
// Backends

struct Backends {
  std::shared_ptr<Backend> generator;
  std::shared_ptr<Backend> scorer;
  std::vector<std::shared_ptr<CachingBackend>> caches;
};

inline std::string cache_file_name(const std::string& kind, const std::string& model) {
  std::string name = model.empty() ? kind : model;
  for (char& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  }
  return name + ".jsonl";
}

// One cache file per model; the default location is <out>/cache/.
inline std::filesystem::path cache_location(const RunConfig& config,
                                            const std::string& model) {
  if (!config.cache_path.empty()) {
    std::filesystem::path p(config.cache_path);
    if (model.empty() || config.backend.model.empty() || model == config.backend.model) {
      return p;
    }
    return p.parent_path() / cache_file_name(config.backend.kind, model);
  }
  return std::filesystem::path(config.out_dir) / "cache" /
         cache_file_name(config.backend.kind, model);
}

inline Backends make_backends(const RunConfig& config) {
  Backends b;
  auto wrap = [&](std::shared_ptr<Backend> inner, const std::string& model) {
    if (!config.cache) return inner;
    auto cached = std::make_shared<CachingBackend>(std::move(inner),
                                                   cache_location(config, model));
    b.caches.push_back(cached);
    return std::static_pointer_cast<Backend>(cached);
  };
  const std::string& kind = config.backend.kind;
  if (kind == "mock" || kind == "oracle") {
    b.generator = wrap(std::make_shared<MockBackend>(), "mock");
    b.scorer = b.generator;
  } else if (kind == "replay") {
    if (config.cache_path.empty()) throw ConfigError("replay backend needs --cache-path");
    auto replay = std::make_shared<CachingBackend>(nullptr, config.cache_path);
    b.caches.push_back(replay);
    b.generator = replay;
    b.scorer = replay;
  } else {
    HttpBackendConfig http = HttpBackendConfig::from_environment(config.backend.model);
    if (!config.backend.base_url.empty()) http.base_url = config.backend.base_url;
    if (http.model.empty()) throw ConfigError("http backend needs --model");
    http.max_inflight = static_cast<int>(config.concurrency);
    b.generator = wrap(std::make_shared<HttpBackend>(http), http.model);
    if (config.backend.scorer_model.empty() ||
        config.backend.scorer_model == config.backend.model) {
      b.scorer = b.generator;
    } else {
      HttpBackendConfig s = http;
      s.model = config.backend.scorer_model;
      b.scorer = wrap(std::make_shared<HttpBackend>(s), s.model);
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// ingest

inline int run_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  std::vector<Story> stories = load_corpus(config);
  FilterResult filtered;
  if (config.skip_filter) {
    filtered.kept = stories;
  } else {
    filtered = filter_stories_with_report(stories, filter_for(config, false));
  }
  std::vector<Snippet> snippets;
  for (const Story& s : filtered.kept) {
    std::vector<Snippet> part = split_story(s, config.budget);
    snippets.insert(snippets.end(), part.begin(), part.end());
  }
  detail::write_jsonl_file(config, "stories.jsonl", filtered.kept);
  detail::write_jsonl_file(config, "snippets.jsonl", snippets);
  for (const Rejection& r : filtered.rejected) {
    err << "rejected " << r.story_id << ": " << reason_code(r.reason)
        << (r.detail.empty() ? "" : " (" + r.detail + ")") << '\n';
  }
  out << "stories read: " << stories.size() << "\n"
      << "stories kept: " << filtered.kept.size() << "\n"
      << "snippets emitted: " << snippets.size() << "\n";
  if (filtered.kept.empty()) {
    err << "warning: every story was filtered out\n";
    return kExitPartial;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sheet

namespace detail {

inline std::vector<Character> sheet_characters(const Story& story, const RunConfig& config) {
  if (config.characters.empty()) return select_top_characters(story, config.top_k);
  std::vector<Character> out;
  for (const std::string& id : config.characters) {
    if (const Character* c = story.find_character(id)) out.push_back(*c);
  }
  return out;
}

inline std::map<std::string, std::vector<Snippet>> snippets_by_story(
    const RunConfig& config, const std::vector<Story>& stories) {
  std::map<std::string, std::vector<Snippet>> by_story;
  if (!config.snippets_path.empty()) {
    for (Snippet& s : read_jsonl_file<Snippet>(config.snippets_path, "snippets")) {
      by_story[s.story_id].push_back(std::move(s));
    }
  } else {
    for (const Story& s : stories) by_story[s.story_id] = split_story(s, config.budget);
  }
  return by_story;
}

}  // namespace detail

// Generates and validates the statements of one (snippet, character), keeping
// the validated results so sheets over snippet prefixes can share them.
class SnippetStatementCache {
 public:
  SnippetStatementCache(Backend& generator, Backend& scorer, ValidationConfig validation,
                        WarningSink warnings)
      : generator_(generator),
        scorer_(scorer),
        validation_(std::move(validation)),
        warnings_(std::move(warnings)) {}

  struct Result {
    std::vector<ValidatedStatement> accepted;
    std::vector<ValidatedStatement> rejected;
  };

  // Fills every missing (snippet, character) pair, running (snippet,
  // question) units on up to `concurrency` threads.
  void compute(const std::vector<std::pair<const Snippet*, const Character*>>& pairs,
               std::size_t concurrency) {
    struct Unit {
      std::size_t pair;
      const QuestionSpec* question;
    };
    std::vector<std::pair<const Snippet*, const Character*>> todo;
    for (const auto& p : pairs) {
      std::lock_guard lock(mutex_);
      if (!done_.count(key(*p.first, *p.second))) todo.push_back(p);
    }
    std::vector<Unit> units;
    for (std::size_t i = 0; i < todo.size(); ++i) {
      for (const QuestionSpec& q : kQuestions) units.push_back({i, &q});
    }
    std::vector<ValidationResult> results(units.size());
    ValidationConfig inner = validation_;
    inner.concurrency = 1;
    parallel_for(units.size(), concurrency, [&](std::size_t u) {
      const auto& [snippet, character] = todo[units[u].pair];
      std::vector<Statement> statements = generate_statements(
          *snippet, *character, *units[u].question, generator_, warnings_);
      results[u] = validate_statements(statements, snippet->text, *character, inner,
                                       generator_, scorer_, warnings_);
    });
    std::lock_guard lock(mutex_);
    for (std::size_t u = 0; u < units.size(); ++u) {
      const auto& [snippet, character] = todo[units[u].pair];
      Result& r = done_[key(*snippet, *character)];
      for (auto& v : results[u].accepted) r.accepted.push_back(std::move(v));
      for (auto& v : results[u].rejected) r.rejected.push_back(std::move(v));
    }
  }

  const Result& get(const Snippet& snippet, const Character& character) const {
    std::lock_guard lock(mutex_);
    auto it = done_.find(key(snippet, character));
    if (it == done_.end()) throw ContractError("snippet statements not computed");
    return it->second;
  }

 private:
  static std::string key(const Snippet& s, const Character& c) {
    return s.story_id + '\x1f' + s.entry_id + '\x1f' + std::to_string(s.snippet_index) +
           '\x1f' + c.character_id;
  }

  Backend& generator_;
  Backend& scorer_;
  ValidationConfig validation_;
  WarningSink warnings_;
  mutable std::mutex mutex_;
  std::map<std::string, Result> done_;
};

inline SheetProvenance sheet_provenance(const RunConfig& config, const Backend& generator) {
  SheetProvenance p;
  p.policy = policy_name(parse_policy(config.policy));
  p.reasoning_mode = reasoning_mode_name(parse_reasoning_mode(config.reasoning_mode));
  p.only_role = config.only_role;
  p.dedup_threshold = config.dedup_threshold;
  p.generator_model = generator.id();
  return p;
}

inline ValidationConfig validation_config(const RunConfig& config) {
  ValidationConfig v;
  v.policy = parse_policy(config.policy);
  v.reasoning_mode = parse_reasoning_mode(config.reasoning_mode);
  v.concurrency = config.concurrency;
  return v;
}

// Sheet of `character` from `snippets`, generating only what only_role keeps.
inline CharacterSheet build_sheet(const Story& story, const Character& character,
                                  const std::vector<const Snippet*>& snippets,
                                  SnippetStatementCache& cache, const RunConfig& config,
                                  const Backend& generator) {
  std::vector<std::pair<const Snippet*, const Character*>> pairs;
  for (const Snippet* s : snippets) {
    if (config.only_role && s->focus_character != character.character_id) continue;
    pairs.emplace_back(s, &character);
  }
  cache.compute(pairs, config.concurrency);
  std::vector<SnippetStatements> groups;
  for (const auto& [s, _] : pairs) {
    SnippetStatements g;
    g.snippet = *s;
    for (const ValidatedStatement& v : cache.get(*s, character).accepted) {
      g.accepted.push_back(v.statement);
    }
    groups.push_back(std::move(g));
  }
  return assemble_sheet(story.story_id, character, groups, config.only_role,
                        DedupConfig{config.dedup_threshold},
                        sheet_provenance(config, generator));
}

inline int run_sheet(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  WarningLog log(&err);
  std::vector<Story> stories = load_corpus(config);
  auto by_story = detail::snippets_by_story(config, stories);
  Backends backends = make_backends(config);
  SnippetStatementCache cache(*backends.generator, *backends.scorer,
                              validation_config(config), log.sink());

  std::vector<CharacterSheet> sheets;
  std::vector<nlohmann::json> rejected;
  for (const Story& story : stories) {
    std::vector<const Snippet*> snippets;
    for (const Snippet& s : by_story[story.story_id]) snippets.push_back(&s);
    for (const Character& character : detail::sheet_characters(story, config)) {
      sheets.push_back(
          build_sheet(story, character, snippets, cache, config, *backends.generator));
      for (const Snippet* s : snippets) {
        if (config.only_role && s->focus_character != character.character_id) continue;
        for (const ValidatedStatement& v : cache.get(*s, character).rejected) {
          nlohmann::json j = v;
          j["character_id"] = character.character_id;
          rejected.push_back(std::move(j));
        }
      }
    }
  }
  detail::write_jsonl_file(config, "sheets.jsonl", sheets);
  detail::write_jsonl_file(config, "rejected.jsonl", rejected);
  std::size_t statements = 0;
  for (const CharacterSheet& s : sheets) statements += sheet_sentence_count(s).total;
  out << "sheets written: " << sheets.size() << "\n"
      << "statements kept: " << statements << "\n"
      << "statements rejected: " << rejected.size() << "\n";
  return log.count() ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// summarize

inline std::string story_text(const std::vector<const Snippet*>& snippets) {
  std::vector<std::string> parts;
  for (const Snippet* s : snippets) parts.push_back(s->text);
  return join(parts, "\n\n");
}

inline int run_summarize(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  WarningLog log(&err);
  std::vector<Story> stories = load_corpus(config);
  auto by_story = detail::snippets_by_story(config, stories);
  Backends backends = make_backends(config);
  ValidationConfig validation = validation_config(config);

  struct Job {
    const Story* story;
    Character character;
    std::string text;
  };
  std::vector<Job> jobs;
  for (const Story& story : stories) {
    std::vector<const Snippet*> snippets;
    for (const Snippet& s : by_story[story.story_id]) snippets.push_back(&s);
    std::string text = story_text(snippets);
    if (is_blank(text)) {
      log.sink()("story " + story.story_id + " has no text; skipped");
      continue;
    }
    for (const Character& c : detail::sheet_characters(story, config)) {
      jobs.push_back({&story, c, text});
    }
  }
  std::vector<std::string> summaries(jobs.size());
  parallel_for(jobs.size(), config.concurrency, [&](std::size_t i) {
    summaries[i] = summarize_character(jobs[i].text, jobs[i].character,
                                       *backends.generator, validation,
                                       *backends.generator, *backends.scorer, log.sink());
  });
  std::vector<nlohmann::json> rows;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    rows.push_back({{"story_id", jobs[i].story->story_id},
                    {"character_id", jobs[i].character.character_id},
                    {"summary", summaries[i]}});
  }
  detail::write_jsonl_file(config, "summaries.jsonl", rows);
  out << "summaries written: " << rows.size() << "\n";
  return log.count() ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// predict

inline int run_predict(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  WarningLog log(&err);
  std::vector<Story> stories = load_corpus(config);
  if (!config.skip_filter) stories = filter_stories(stories, filter_for(config, true));
  std::vector<MaskedTask> tasks =
      build_tasks(stories, config.top_k, config.seed, config.budget, log.sink());
  detail::write_jsonl_file(config, "tasks.jsonl", tasks);
  if (tasks.empty()) {
    err << "error: no prediction tasks in corpus\n";
    return kExitInput;
  }

  std::vector<PredictionSetting> settings;
  for (const std::string& s : config.settings) settings.push_back(PredictionSetting::parse(s));
  if (settings.empty()) settings.push_back(PredictionSetting::none());

  Backends backends = make_backends(config);
  std::shared_ptr<Backend> predictor = backends.scorer;
  if (config.backend.kind == "oracle") predictor = std::make_shared<GoldOracleBackend>(tasks);
  SnippetStatementCache cache(*backends.generator, *backends.scorer,
                              validation_config(config), log.sink());
  ValidationConfig validation = validation_config(config);

  std::map<std::string, const Story*> story_by_id;
  for (const Story& s : stories) story_by_id[s.story_id] = &s;
  std::map<std::string, std::vector<Snippet>> snippets;
  for (const Story& s : stories) snippets[s.story_id] = split_story(s, config.budget);

  std::vector<PredictionOutcome> outcomes;
  std::map<std::string, std::string> summary_memo;
  for (const PredictionSetting& setting : settings) {
    for (const MaskedTask& task : tasks) {
      const Story& story = *story_by_id.at(task.story_id);
      // Information comes only from the story before the task snippet.
      std::vector<const Snippet*> prefix;
      for (const Snippet& s : snippets[task.story_id]) {
        if (s.ref() == task.snippet) break;
        prefix.push_back(&s);
      }
      std::map<std::string, CharacterInfo> info;
      for (const Character& c : task.characters) {
        CharacterInfo ci;
        if (setting.needs_sheet()) {
          ci.sheet = build_sheet(story, c, prefix, cache, config, *backends.generator);
        } else if (setting.kind == PredictionSetting::Kind::kCharacterSummary) {
          std::string text = story_text(prefix);
          std::string key = task.story_id + '\x1f' + task.snippet.entry_id + '\x1f' +
                            std::to_string(task.snippet.snippet_index) + '\x1f' +
                            c.character_id;
          auto it = summary_memo.find(key);
          if (it == summary_memo.end()) {
            std::string summary =
                is_blank(text) ? std::string()
                               : summarize_character(text, c, *backends.generator,
                                                     validation, *backends.generator,
                                                     *backends.scorer, log.sink());
            it = summary_memo.emplace(key, std::move(summary)).first;
          }
          ci.summary = it->second;
        }
        info[c.character_id] = std::move(ci);
      }
      outcomes.push_back(
          predict_assignment(task, setting, info, *predictor, config.only_role));
    }
  }

  std::size_t invalid = 0;
  for (const PredictionOutcome& o : outcomes) {
    if (!o.valid) {
      ++invalid;
      err << "invalid outcome " << o.story_id << "/" << o.snippet.entry_id << "#"
          << o.snippet.snippet_index << " [" << o.setting << "]: " << o.error << '\n';
    }
  }
  detail::write_jsonl_file(config, "outcomes.jsonl", outcomes);
  std::vector<AccuracyRow> rows = score_accuracy(outcomes);
  std::string table = format_accuracy_table(rows);
  detail::write_text_file(config, "accuracy.txt", table);
  nlohmann::json j = nlohmann::json::array();
  for (const AccuracyRow& r : rows) {
    j.push_back({{"setting", r.setting},
                 {"only_role", r.only_role},
                 {"tasks", r.tasks},
                 {"invalid", r.invalid},
                 {"correct", r.correct},
                 {"assignments", r.assignments},
                 {"accuracy", r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json()},
                 {"accuracy_invalid_as_wrong", r.accuracy_invalid_as_wrong}});
  }
  detail::write_json_file(config, "accuracy.json", {{"rows", j}});
  out << "tasks: " << tasks.size() << "\n" << table;
  return (invalid || log.count()) ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

inline int run_analyze(const RunConfig& config, std::ostream& out, std::ostream& err) {
  WarningLog log(&err);
  std::vector<Story> stories = load_corpus(config);
  std::vector<CharacterSheet> sheets =
      detail::read_jsonl_file<CharacterSheet>(config.sheets_path, "sheets");
  DensityReport report = density(sheets, stories, config.setup, config.source, log.sink());
  std::string table = format_density_table({report});
  detail::write_text_file(config, "density.txt", table);
  detail::write_json_file(config, "density.json", report);
  out << table;
  return log.count() ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// eval

inline int run_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
  WarningLog log(&err);
  std::vector<AnnotationRecord> records =
      detail::read_jsonl_file<AnnotationRecord>(config.annotations_path, "annotations");
  AlphaDistance distance = parse_alpha_distance(config.alpha_distance);
  nlohmann::json body = nlohmann::json::object();
  std::string text;

  std::optional<double> alpha;
  try {
    alpha = krippendorff_alpha(records, distance);
  } catch (const StatisticsError& e) {
    log.sink()(e.what());
  }

  std::optional<double> r;
  if (!config.scores_path.empty()) {
    std::vector<nlohmann::json> pairs =
        detail::read_jsonl_file<nlohmann::json>(config.scores_path, "scores");
    std::vector<double> x, y;
    for (const nlohmann::json& p : pairs) {
      try {
        x.push_back(p.at("x").get<double>());
        y.push_back(p.at("y").get<double>());
      } catch (const nlohmann::json::exception& e) {
        throw InputError(config.scores_path + ": " + e.what());
      }
    }
    r = pearson(x, y);
  }

  if (!config.predictions_path.empty()) {
    std::map<std::string, int> predicted;
    for (const nlohmann::json& p :
         detail::read_jsonl_file<nlohmann::json>(config.predictions_path, "predictions")) {
      try {
        predicted[p.at("record_id").get<std::string>()] = p.at("label").get<int>();
      } catch (const nlohmann::json::exception& e) {
        throw InputError(config.predictions_path + ": " + e.what());
      }
    }
    std::vector<int> pred, gold;
    for (const AnnotationRecord& rec : records) {
      auto it = predicted.find(rec.record_id);
      if (it == predicted.end()) {
        log.sink()("no prediction for record " + rec.record_id);
        continue;
      }
      pred.push_back(it->second);
      gold.push_back(rec.gold_label());
    }
    nlohmann::json reports = nlohmann::json::array();
    for (AcceptancePolicy p : {AcceptancePolicy::kGe4, AcceptancePolicy::kEq5}) {
      EvalReport rep = classifier_report(pred, gold, p);
      rep.alpha = alpha;
      if (alpha) rep.alpha_distance = alpha_distance_name(distance);
      rep.pearson = r;
      reports.push_back(rep);
      text += format_eval_report(rep);
    }
    body["classifier"] = reports;
  } else {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3);
    if (alpha) {
      s << "Krippendorff alpha (" << alpha_distance_name(distance) << "): " << *alpha << "\n";
    }
    if (r) s << "Pearson r: " << *r << "\n";
    text += s.str();
  }
  body["alpha"] = alpha ? nlohmann::json(*alpha) : nlohmann::json();
  body["alpha_distance"] = alpha_distance_name(distance);
  body["pearson"] = r ? nlohmann::json(*r) : nlohmann::json();
  std::vector<LabelDistributionRow> dist = label_distribution(records);
  body["label_distribution"] = dist;
  text += "\n" + format_label_distribution(dist);

  detail::write_text_file(config, "eval.txt", text);
  detail::write_json_file(config, "eval.json", body);
  out << text;
  return log.count() ? kExitPartial : kExitOk;
}

}  // namespace chiron

#endif  // CHIRON_PIPELINE_HPP_
