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


#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "chiron/llm_mock.hpp"
#include "chiron/validation.hpp"
#include "test_support.hpp"

namespace chiron {
namespace {

using testing::make_character;
using testing::make_statement;

const Character kSantiago = make_character("santiago", "Santiago");

bool prompt_has(const ChatRequest& r, std::string_view s) {
  return r.messages.front().content.find(s) != std::string::npos;
}

TEST(ParseYesNo, LeadingWordOnly) {
  EXPECT_EQ(parse_yes_no("Yes, it is."), true);
  EXPECT_EQ(parse_yes_no("  no."), false);
  EXPECT_EQ(parse_yes_no("**No** because"), false);
  EXPECT_EQ(parse_yes_no("\"YES\""), true);
  EXPECT_EQ(parse_yes_no("Yesterday it rained."), std::nullopt);
  EXPECT_EQ(parse_yes_no("Nobody knows."), std::nullopt);
  EXPECT_EQ(parse_yes_no("I think yes."), std::nullopt);
  EXPECT_EQ(parse_yes_no(""), std::nullopt);
}

TEST(Ambiguity, Examples) {
  MockBackend mock;
  EXPECT_TRUE(assess_ambiguity("These men run away at first sight.", kSantiago, mock).flag);
  EXPECT_FALSE(assess_ambiguity("He is skinny with long legs.", kSantiago, mock).flag);
  EXPECT_FALSE(assess_ambiguity("He waits by the door.", kSantiago, mock).flag);
}

TEST(Ambiguity, PromptCarriesStatementAndCharacter) {
  ChatRequest r = build_icl_prompt("prompts/ambiguity.txt", "prompts/ambiguity_question.txt",
                                   "He waits by the door.", kSantiago);
  EXPECT_TRUE(prompt_has(r, "Is the given statement about Santiago ambiguous"));
  EXPECT_TRUE(trim(r.messages[0].content).ends_with("Statement: He waits by the door.\n\nAnswer:"));
  EXPECT_EQ(r.max_tokens, kReasoningMaxTokens);
}

TEST(Informativeness, Examples) {
  MockBackend mock;
  const Character kelly = make_character("kelly", "Kelly");
  EXPECT_FALSE(assess_informativeness("There were no descriptions of Kelly.", kelly, mock).flag);
  EXPECT_TRUE(assess_informativeness("He is skinny with long legs.", kSantiago, mock).flag);
  EXPECT_FALSE(assess_informativeness(
                   "Here are some physical descriptions of Pedro based on the given story section:",
                   make_character("pedro", "Pedro"), mock)
                   .flag);
}

TEST(IclVerdicts, UnparseableAnswersUseDocumentedDefaults) {
  auto b = FunctionBackend::from_text([](const ChatRequest&) { return "Perhaps."; });
  int warnings = 0;
  WarningSink sink = [&](std::string_view) { ++warnings; };
  YesNoVerdict a = assess_ambiguity("He ran.", kSantiago, *b, sink);
  YesNoVerdict i = assess_informativeness("He ran.", kSantiago, *b, sink);
  EXPECT_FALSE(a.parsed);
  EXPECT_FALSE(a.flag);
  EXPECT_FALSE(i.parsed);
  EXPECT_TRUE(i.flag);
  EXPECT_EQ(a.justification, "Perhaps.");
  EXPECT_EQ(warnings, 2);
  EXPECT_THROW(assess_ambiguity(" ", kSantiago, *b), ContractError);
}

TEST(ChainOfThought, SupportedStatement) {
  MockBackend mock;
  const Character rachel = make_character("rachel", "Rachel");
  const std::string snippet =
      "The alarm wailed. Rachel pushed open the fire door and stepped into the alley. "
      "Rain hammered the bins.";
  CotResult r = chain_of_thought(snippet, rachel, "Rachel pushed open the fire door.", mock);
  EXPECT_EQ(r.relevant_section, "Rachel pushed open the fire door and stepped into the alley.");
  ASSERT_TRUE(r.comparison.has_value());
  EXPECT_NE(r.comparison->find("explicitly supported"), std::string::npos);
  EXPECT_FALSE(r.error.has_value());
}

TEST(ChainOfThought, EmptySnippetIsNotApplicable) {
  auto b = FunctionBackend::from_text([](const ChatRequest&) { return "N/A"; });
  CotResult r = chain_of_thought("", kSantiago, "He ran.", *b);
  EXPECT_EQ(r.relevant_section, "N/A");
  EXPECT_EQ(b->calls(), 1u);
  EXPECT_TRUE(prompt_has(b->requests()[0], "Answer: N/A\n\nQuestion: In 1-2 sentences"));
}

TEST(ChainOfThought, TurnsAreSequentialAndFixtureDeterministic) {
  MockBackend a, b;
  const std::string snippet = "Santiago fished alone. He is skinny with long legs.";
  CotResult x = chain_of_thought(snippet, kSantiago, "He is skinny.", a);
  CotResult y = chain_of_thought(snippet, kSantiago, "He is skinny.", b);
  EXPECT_EQ(x.relevant_section, y.relevant_section);
  EXPECT_EQ(x.comparison, y.comparison);

  auto rec = FunctionBackend::from_text([](const ChatRequest& r) {
    return prompt_has(r, "compare the claim") ? "second" : "first";
  });
  CotResult z = chain_of_thought(snippet, kSantiago, "He is skinny.", *rec);
  auto reqs = rec->requests();
  ASSERT_EQ(reqs.size(), 2u);
  EXPECT_TRUE(prompt_has(reqs[1], "Answer: first\n\n"));
  EXPECT_EQ(z.comparison, "second");
}

TEST(ChainOfThought, SecondTurnFailureKeepsFirst) {
  auto b = std::make_shared<FunctionBackend>([](const ChatRequest& r) {
    if (prompt_has(r, "compare the claim")) throw BackendError("down", request_key(r));
    ChatResponse out;
    out.text = "The fishing scene.";
    return out;
  });
  CotResult r = chain_of_thought("Santiago fished.", kSantiago, "He fished.", *b);
  EXPECT_EQ(r.relevant_section, "The fishing scene.");
  EXPECT_FALSE(r.comparison.has_value());
  ASSERT_TRUE(r.error.has_value());
}

TEST(GatherReasoning, CallCountsPerMode) {
  const std::map<ReasoningMode, std::size_t> expected = {
      {ReasoningMode::kAll, 4}, {ReasoningMode::kIcl, 2},
      {ReasoningMode::kCot, 2}, {ReasoningMode::kNone, 0}};
  for (const auto& [mode, calls] : expected) {
    auto b = FunctionBackend::from_text([](const ChatRequest&) { return "No."; });
    ReasoningBundle r = gather_reasoning("Santiago fished.", kSantiago, "He fished.", mode, *b);
    EXPECT_EQ(b->calls(), calls) << reasoning_mode_name(mode);
    EXPECT_EQ(r.ambiguity.has_value(), uses_icl(mode));
    EXPECT_EQ(r.cot_comparison.has_value(), uses_cot(mode));
  }
}

TEST(FormatReasoning, FixedOrder) {
  ReasoningBundle r;
  r.ambiguity = YesNoVerdict{false, "No, clear.", true};
  r.informativeness = YesNoVerdict{true, "Yes, useful.", true};
  r.cot_relevant_section = "The dock.";
  r.cot_comparison = "Supported.";
  EXPECT_EQ(format_reasoning(r, ReasoningMode::kAll),
            "Ambiguity: No, clear.\nInformativeness: Yes, useful.\n"
            "Relevant Section: The dock.\nComparison: Supported.\n\n");
  EXPECT_EQ(format_reasoning(r, ReasoningMode::kCot),
            "Relevant Section: The dock.\nComparison: Supported.\n\n");
  EXPECT_EQ(format_reasoning(r, ReasoningMode::kNone), "");
  EXPECT_THROW(format_reasoning(ReasoningBundle{}, ReasoningMode::kIcl), ContractError);
}

TEST(EntailmentPrompt, ReasoningSitsBeforeCharacter) {
  ReasoningBundle r;
  r.cot_relevant_section = "The dock.";
  r.cot_comparison = "Supported.";
  ChatRequest req = build_entailment_prompt("Santiago fished.", kSantiago, "He fished.", r,
                                            ReasoningMode::kCot);
  EXPECT_TRUE(prompt_has(req, "Santiago fished.\n\nRelevant Section: The dock.\nComparison: "
                              "Supported.\n\nCharacter: Santiago\n\nStatement: He fished.\n\nLabel:"));
  ChatRequest none = build_entailment_prompt("Santiago fished.", kSantiago, "He fished.", {},
                                             ReasoningMode::kNone);
  EXPECT_TRUE(prompt_has(none, "Santiago fished.\n\nCharacter: Santiago"));
  EXPECT_EQ(req.max_tokens, kLabelMaxTokens);
}

TEST(ParseLabel, FirstDigitInRange) {
  EXPECT_EQ(parse_label("5"), 5);
  EXPECT_EQ(parse_label("Label: 4 (probably)"), 4);
  EXPECT_EQ(parse_label("0 then 7 then 3"), 3);
  EXPECT_EQ(parse_label("none"), std::nullopt);
}

TEST(ClassifyEntailment, RetriesOnce) {
  auto b = FunctionBackend::from_text(
      [](const ChatRequest& r) { return r.messages.size() == 1 ? "Hard to say." : "4"; });
  LabelResult l = classify_entailment("s", kSantiago, "x", {}, ReasoningMode::kNone, *b);
  EXPECT_EQ(l.label, 4);
  EXPECT_TRUE(l.retried);
  auto reqs = b->requests();
  ASSERT_EQ(reqs.size(), 2u);
  ASSERT_EQ(reqs[1].messages.size(), 3u);
  EXPECT_EQ(reqs[1].messages[1].role, Role::kAssistant);
  EXPECT_EQ(reqs[1].messages[1].content, "Hard to say.");
  EXPECT_EQ(reqs[1].messages[2].content, kLabelRetryInstruction);
  EXPECT_NE(request_key(reqs[0]), request_key(reqs[1]));

  auto never = FunctionBackend::from_text([](const ChatRequest&) { return "?"; });
  LabelResult n = classify_entailment("s", kSantiago, "x", {}, ReasoningMode::kNone, *never);
  EXPECT_FALSE(n.label.has_value());
  EXPECT_EQ(never->calls(), 2u);
}

TEST(Accept, PolicyTable) {
  EXPECT_TRUE(accept(5, AcceptancePolicy::kEq5));
  EXPECT_FALSE(accept(4, AcceptancePolicy::kEq5));
  EXPECT_TRUE(accept(4, AcceptancePolicy::kGe4));
  EXPECT_FALSE(accept(3, AcceptancePolicy::kGe4));
  EXPECT_THROW(accept(0, AcceptancePolicy::kEq5), ContractError);
  EXPECT_THROW(accept(6, AcceptancePolicy::kGe4), ContractError);
  EXPECT_EQ(parse_policy("=5"), AcceptancePolicy::kEq5);
  EXPECT_EQ(parse_policy(">=4"), AcceptancePolicy::kGe4);
  EXPECT_THROW(parse_policy("ge3"), ConfigError);
}

TEST(Accept, MonotoneAndNested) {
  for (AcceptancePolicy p : {AcceptancePolicy::kEq5, AcceptancePolicy::kGe4}) {
    for (int l = 1; l < 5; ++l) EXPECT_LE(accept(l, p), accept(l + 1, p));
  }
  for (int l = 1; l <= 5; ++l) {
    EXPECT_LE(accept(l, AcceptancePolicy::kEq5), accept(l, AcceptancePolicy::kGe4));
  }
}

// Scorer that reads the label from the statement's trailing "#N".
std::shared_ptr<FunctionBackend> tagged_scorer() {
  return FunctionBackend::from_text([](const ChatRequest& r) {
    const std::string& p = r.messages.front().content;
    std::size_t hash = p.rfind('#');
    if (p.find("explode", hash) != std::string::npos) throw BackendError("boom", "k");
    return std::string(1, p[hash + 1]);
  });
}

std::vector<Statement> tagged(const std::vector<std::string>& tags) {
  std::vector<Statement> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    out.push_back(make_statement("Statement " + std::to_string(i) + " #" + tags[i],
                                 "knowledge_facts", "st", "e", 0, "santiago", i));
  }
  return out;
}

TEST(ValidateStatements, MixedTenWithSixFives) {
  auto scorer = tagged_scorer();
  auto reasoner = FunctionBackend::from_text([](const ChatRequest&) { return "No."; });
  std::vector<Statement> in = tagged({"5", "3", "5", "5", "1", "4", "5", "2", "5", "5"});
  ValidationResult r = validate_statements(in, "snippet", kSantiago, {}, *reasoner, *scorer);
  ASSERT_EQ(r.accepted.size(), 6u);
  std::vector<std::size_t> ordinals;
  for (const auto& v : r.accepted) ordinals.push_back(v.statement.ordinal);
  EXPECT_EQ(ordinals, (std::vector<std::size_t>{0, 2, 3, 6, 8, 9}));
  EXPECT_EQ(r.rejected.size(), 4u);
  for (const auto& v : r.rejected) EXPECT_EQ(v.verdict.reject_reason, "label");
}

TEST(ValidateStatements, AllOnesRejected) {
  auto scorer = tagged_scorer();
  auto reasoner = FunctionBackend::from_text([](const ChatRequest&) { return "No."; });
  ValidationResult r = validate_statements(tagged({"1", "1", "1"}), "snippet", kSantiago, {},
                                           *reasoner, *scorer);
  EXPECT_TRUE(r.accepted.empty());
  EXPECT_EQ(r.rejected.size(), 3u);
}

TEST(ValidateStatements, NoneModeMakesNoReasoningCalls) {
  auto scorer = tagged_scorer();
  auto reasoner = FunctionBackend::from_text([](const ChatRequest&) { return "No."; });
  ValidationConfig c;
  c.reasoning_mode = ReasoningMode::kNone;
  validate_statements(tagged({"5", "4", "2"}), "snippet", kSantiago, c, *reasoner, *scorer);
  EXPECT_EQ(reasoner->calls(), 0u);
  EXPECT_EQ(scorer->calls(), 3u);
}

TEST(ValidateStatements, FailuresStayLocal) {
  auto scorer = tagged_scorer();
  auto reasoner = FunctionBackend::from_text([](const ChatRequest&) { return "No."; });
  std::vector<Statement> in = tagged({"5", "explode", "5", "?"});
  ValidationConfig c;
  c.reasoning_mode = ReasoningMode::kNone;
  ValidationResult r = validate_statements(in, "snippet", kSantiago, c, *reasoner, *scorer);
  ASSERT_EQ(r.accepted.size(), 2u);
  ASSERT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(r.rejected[0].verdict.reject_reason.rfind("error: ", 0), 0u);
  EXPECT_EQ(r.rejected[1].verdict.reject_reason, "unparseable");
}

TEST(ValidateStatements, BrokenChainOfThoughtRejects) {
  auto scorer = tagged_scorer();
  auto reasoner = std::make_shared<FunctionBackend>([](const ChatRequest& r) {
    if (prompt_has(r, "compare the claim")) throw BackendError("down", "k");
    ChatResponse out;
    out.text = "No.";
    return out;
  });
  ValidationResult r =
      validate_statements(tagged({"5"}), "snippet", kSantiago, {}, *reasoner, *scorer);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].verdict.reject_reason, "reasoning_error");
  EXPECT_EQ(scorer->calls(), 0u);
}

TEST(ValidateStatementsProperty, SubsequenceAndConcurrencyInvariant) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tags(rng() % 30);
    for (auto& t : tags) t = std::to_string(1 + rng() % 5);
    std::vector<Statement> in = tagged(tags);
    for (AcceptancePolicy p : {AcceptancePolicy::kEq5, AcceptancePolicy::kGe4}) {
      ValidationConfig serial{p, ReasoningMode::kIcl, 1};
      ValidationConfig wide{p, ReasoningMode::kIcl, 4};
      MockBackend reasoner;
      auto scorer = tagged_scorer();
      ValidationResult a = validate_statements(in, "snippet", kSantiago, serial, reasoner, *scorer);
      ValidationResult b = validate_statements(in, "snippet", kSantiago, wide, reasoner, *scorer);
      ASSERT_EQ(a.accepted.size(), b.accepted.size());
      std::size_t last = 0;
      bool first = true;
      for (std::size_t i = 0; i < a.accepted.size(); ++i) {
        EXPECT_EQ(nlohmann::json(a.accepted[i]), nlohmann::json(b.accepted[i]));
        std::size_t o = a.accepted[i].statement.ordinal;
        if (!first) {
          EXPECT_GT(o, last);
        }
        last = o;
        first = false;
      }
      EXPECT_EQ(a.accepted.size() + a.rejected.size(), in.size());
    }
  }
}

ValidationResult validate_record(const AnnotationRecord& rec, AcceptancePolicy policy,
                                 Backend& reasoner, Backend& scorer) {
  Statement s = make_statement(rec.statement, "knowledge_facts", rec.snippet.story_id,
                               rec.snippet.entry_id, rec.snippet.snippet_index,
                               rec.character.character_id);
  return validate_statements({s}, rec.snippet_text, rec.character,
                             {policy, ReasoningMode::kAll, 1}, reasoner, scorer);
}

TEST(OracleScorer, FixturePolicies) {
  std::vector<AnnotationRecord> records = testing::fixture_annotations();
  ASSERT_EQ(records.size(), 40u);
  OracleScorerBackend oracle(records);
  MockBackend reasoner;
  std::set<std::string> eq5, ge4, gold5, gold4;
  for (const AnnotationRecord& rec : records) {
    if (rec.gold_label() == 5) gold5.insert(rec.record_id);
    if (rec.gold_label() >= 4) gold4.insert(rec.record_id);
    if (!validate_record(rec, AcceptancePolicy::kEq5, reasoner, oracle).accepted.empty()) {
      eq5.insert(rec.record_id);
    }
    if (!validate_record(rec, AcceptancePolicy::kGe4, reasoner, oracle).accepted.empty()) {
      ge4.insert(rec.record_id);
    }
  }
  EXPECT_EQ(eq5, gold5);
  EXPECT_EQ(ge4, gold4);
  EXPECT_TRUE(std::includes(ge4.begin(), ge4.end(), eq5.begin(), eq5.end()));
  EXPECT_EQ(gold5.size(), 16u);
  EXPECT_EQ(gold4.size(), 26u);
}

TEST(OracleScorer, ExampleRecords) {
  auto record = [](std::string name, std::string statement, std::map<std::string, int> labels) {
    AnnotationRecord r;
    r.record_id = name;
    r.character = make_character(to_lower_ascii(name), name);
    r.statement = std::move(statement);
    r.labels = std::move(labels);
    r.snippet_text = "A scene.";
    return r;
  };
  std::vector<AnnotationRecord> records = {
      record("Holly",
             "Based on the given story section, we can infer the following physical "
             "descriptions of Holly:",
             {{"a", 1}, {"b", 1}, {"c", 2}}),
      record("Kaye", "Kaye speaks in a hesitant and self-deprecating manner.",
             {{"a", 4}, {"b", 4}, {"c", 5}}),
      record("Anastasia", "Anastasia is easily frightened, as evidenced by her scream.",
             {{"a", 5}, {"b", 5}, {"c", 5}}),
  };
  OracleScorerBackend oracle(records);
  std::vector<int> got;
  for (const AnnotationRecord& r : records) {
    got.push_back(*classify_entailment(r.snippet_text, r.character, r.statement, {},
                                       ReasoningMode::kNone, oracle)
                       .label);
  }
  EXPECT_EQ(got, (std::vector<int>{1, 4, 5}));
  EXPECT_THROW(oracle.complete(make_prompt_request("hello")), BackendError);
}

TEST(Annotation, GoldIsLowerMedian) {
  AnnotationRecord r;
  r.labels = {{"a", 5}, {"b", 4}};
  EXPECT_EQ(r.gold_label(), 4);
  r.labels = {{"a", 2}, {"b", 5}, {"c", 3}};
  EXPECT_EQ(r.gold_label(), 3);
}

TEST(Annotation, LabelsAreValidated) {
  auto parse = [](const char* labels) {
    return nlohmann::json::parse(std::string(R"({"record_id":"r","character":{"character_id":"a",)"
                                             R"("canonical_name":"A"},"statement":"s","labels":)") +
                                 labels + "}")
        .get<AnnotationRecord>();
  };
  EXPECT_NO_THROW(parse(R"({"x": 3})"));
  EXPECT_THROW(parse(R"({"x": 6})"), InputError);
  EXPECT_THROW(parse(R"({})"), InputError);
}

TEST(ReasoningModes, NamesRoundTrip) {
  for (ReasoningMode m :
       {ReasoningMode::kAll, ReasoningMode::kIcl, ReasoningMode::kCot, ReasoningMode::kNone}) {
    EXPECT_EQ(parse_reasoning_mode(reasoning_mode_name(m)), m);
  }
  EXPECT_THROW(parse_reasoning_mode("some"), ConfigError);
}

}  // namespace
}  // namespace chiron
