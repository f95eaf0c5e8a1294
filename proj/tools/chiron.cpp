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


// Command-line entry point: ingest, sheet, summarize, predict, analyze, eval.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chiron/chiron.hpp"

namespace {

void add_backend_options(CLI::App* cmd, chiron::RunConfig& c) {
  cmd->add_option("--backend", c.backend.kind, "http, mock, replay or oracle")
      ->check(CLI::IsMember({"http", "mock", "replay", "oracle"}));
  cmd->add_option("--base-url", c.backend.base_url,
                  "Chat-completions endpoint (default: $CHIRON_API_BASE)");
  cmd->add_option("--model", c.backend.model, "Model name for the http backend");
  cmd->add_option("--scorer-model", c.backend.scorer_model,
                  "Separate model for entailment labels (http only)");
  cmd->add_flag("--cache,!--no-cache", c.cache, "Record/replay cache (default on)");
  cmd->add_option("--cache-path", c.cache_path,
                  "Cache file (default: <out>/cache/<model>.jsonl)");
  cmd->add_option("--concurrency", c.concurrency, "Maximum parallel requests")
      ->check(CLI::PositiveNumber);
}

void add_validation_options(CLI::App* cmd, chiron::RunConfig& c) {
  cmd->add_option("--policy", c.policy, "Acceptance policy: eq5 or ge4")
      ->check(CLI::IsMember({"eq5", "ge4"}));
  cmd->add_option("--reasoning-mode", c.reasoning_mode, "All, ICL, CoT or None")
      ->check(CLI::IsMember({"All", "ICL", "CoT", "None"}, CLI::ignore_case));
}

void add_corpus_options(CLI::App* cmd, chiron::RunConfig& c) {
  cmd->add_option("--corpus", c.corpus_path, "Stories JSONL")->required();
  cmd->add_option("--budget", c.budget, "Snippet word budget")->check(CLI::PositiveNumber);
}

void add_character_options(CLI::App* cmd, chiron::RunConfig& c) {
  cmd->add_option("--top-k", c.top_k, "Characters per story when none are named")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--character", c.characters, "Character id (repeatable)");
}

void add_filter_options(CLI::App* cmd, chiron::RunConfig& c) {
  cmd->add_flag("--require-finished", c.require_finished, "Keep only finished stories");
  cmd->add_option("--min-entry-words", c.min_entry_words,
                  "Drop entries with at most this many words");
  cmd->add_option("--max-total-words", c.max_total_words,
                  "Drop stories with at least this many words");
  cmd->add_flag("--no-filter", c.skip_filter, "Use the corpus as given");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character sheets for stories: generation, validation and evaluation"};
  app.require_subcommand(1);
  chiron::RunConfig c;
  app.add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for every random choice");

  CLI::App* ingest = app.add_subcommand("ingest", "Filter a corpus and split it into snippets");
  add_corpus_options(ingest, c);
  add_filter_options(ingest, c);

  CLI::App* sheet = app.add_subcommand("sheet", "Build character sheets");
  add_corpus_options(sheet, c);
  sheet->add_option("--snippets", c.snippets_path, "Snippets JSONL (default: split corpus)");
  add_character_options(sheet, c);
  add_backend_options(sheet, c);
  add_validation_options(sheet, c);
  sheet->add_flag("--only-role", c.only_role,
                  "Use only snippets told from the character's perspective");
  sheet->add_option("--dedup-threshold", c.dedup_threshold, "TF-IDF cosine cut-off")
      ->check(CLI::Range(0.0, 1.0));

  CLI::App* summarize = app.add_subcommand("summarize", "Validated free-form summaries");
  add_corpus_options(summarize, c);
  summarize->add_option("--snippets", c.snippets_path, "Snippets JSONL");
  add_character_options(summarize, c);
  add_backend_options(summarize, c);
  add_validation_options(summarize, c);

  CLI::App* predict = app.add_subcommand("predict", "Masked-character prediction");
  add_corpus_options(predict, c);
  add_filter_options(predict, c);
  add_backend_options(predict, c);
  add_validation_options(predict, c);
  predict->add_option("--top-k", c.top_k, "Characters per task")->check(CLI::PositiveNumber);
  predict->add_option("--setting", c.settings,
                      "NoInformation, CharacterSummary, EntireSheet, Agreed or "
                      "Agreed(Knowledge,PhysicalPersonality); repeatable");
  predict->add_flag("--only-role", c.only_role, "Perspective-only sheets");
  predict->add_option("--dedup-threshold", c.dedup_threshold, "TF-IDF cosine cut-off")
      ->check(CLI::Range(0.0, 1.0));

  CLI::App* analyze = app.add_subcommand("analyze", "Sheet density report");
  analyze->add_option("--corpus", c.corpus_path, "Stories JSONL")->required();
  analyze->add_option("--sheets", c.sheets_path, "Sheets JSONL")->required();
  analyze->add_option("--setup", c.setup, "Setup label, e.g. OnlyRole");
  analyze->add_option("--source", c.source, "Source label, e.g. the corpus name");

  CLI::App* eval = app.add_subcommand("eval", "Agreement and classifier evaluation");
  eval->add_option("--annotations", c.annotations_path, "Annotation JSONL")->required();
  eval->add_option("--predictions", c.predictions_path,
                   "Predicted labels JSONL ({record_id, label})");
  eval->add_option("--scores", c.scores_path, "Paired scores JSONL ({x, y}) for Pearson r");
  eval->add_option("--alpha-distance", c.alpha_distance, "interval or ordinal")
      ->check(CLI::IsMember({"interval", "ordinal"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? chiron::kExitOk : chiron::kExitInput;
  }

  try {
    if (c.reasoning_mode.size()) {
      c.reasoning_mode = chiron::reasoning_mode_name(chiron::parse_reasoning_mode(c.reasoning_mode));
    }
    if (ingest->parsed()) {
      c.command = "ingest";
      return chiron::run_ingest(c, std::cout, std::cerr);
    }
    if (sheet->parsed()) {
      c.command = "sheet";
      return chiron::run_sheet(c, std::cout, std::cerr);
    }
    if (summarize->parsed()) {
      c.command = "summarize";
      return chiron::run_summarize(c, std::cout, std::cerr);
    }
    if (predict->parsed()) {
      c.command = "predict";
      return chiron::run_predict(c, std::cout, std::cerr);
    }
    if (analyze->parsed()) {
      c.command = "analyze";
      return chiron::run_analyze(c, std::cout, std::cerr);
    }
    c.command = "eval";
    return chiron::run_eval(c, std::cout, std::cerr);
  } catch (const chiron::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return chiron::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return chiron::kExitInput;
  }
}
