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

#include <string>
#include <vector>

#include "chiron/generation.hpp"
#include "chiron/llm_mock.hpp"
#include "test_support.hpp"

namespace chiron {
namespace {

using testing::make_character;

Snippet snippet_with(std::string text) {
  Snippet s;
  s.story_id = "lighthouse";
  s.entry_id = "lighthouse-e03";
  s.entry_index = 3;
  s.snippet_index = 1;
  s.focus_character = "nadia";
  s.text = std::move(text);
  return s;
}

const Character kNadia = make_character("nadia", "Nadia", {"Nadia Reyes"});

bool is_simplification(const ChatRequest& r) {
  return trim(r.messages.front().content).ends_with("Split Sentences:");
}

// Generation answers come from `answer`; simplification echoes the sentence.
std::shared_ptr<FunctionBackend> scripted(std::string answer) {
  return FunctionBackend::from_text([answer](const ChatRequest& r) {
    if (is_simplification(r)) {
      return mock::between(r.messages.front().content, "Sentence: ", "\n\nSplit Sentences:", true);
    }
    return answer;
  });
}

TEST(GenerationPrompt, DialogueQuestion) {
  ChatRequest r = build_generation_prompt(snippet_with("Nadia laughed."), kNadia, "dialogue_speech");
  const std::string& p = r.messages.at(0).content;
  EXPECT_NE(p.find("What, if anything have we learned about how this character speaks from "
                   "this snippet?"),
            std::string::npos);
  EXPECT_NE(p.find("questions about Nadia with short"), std::string::npos);
  EXPECT_NE(p.find("Story Section:\n\nNadia laughed.\n\n"), std::string::npos);
  EXPECT_EQ(r.max_tokens, kGenerationMaxTokens);
}

TEST(GenerationPrompt, NoPlaceholderSurvives) {
  for (const QuestionSpec& q : kQuestions) {
    for (std::string text : {"", "[character] says [story_section].", "Plain text."}) {
      std::string p = build_generation_prompt(snippet_with(text), kNadia, q).messages[0].content;
      std::size_t first = p.find("[story_section]");
      // Only text inside the snippet itself may contain the literal.
      if (first != std::string::npos) {
        EXPECT_NE(text.find("[story_section]"), std::string::npos);
        EXPECT_EQ(p.find("[story_section]", first + 1), std::string::npos);
      }
      EXPECT_EQ(template_placeholders(p).count("question"), 0u);
    }
  }
}

TEST(GenerationPrompt, UnknownQuestionIsAConfigError) {
  EXPECT_THROW(build_generation_prompt(snippet_with("x"), kNadia, "weather"), ConfigError);
  QuestionSpec forged = kQuestions[0];
  forged.question_text = "What is the weather?";
  EXPECT_THROW(build_generation_prompt(snippet_with("x"), kNadia, forged), ConfigError);
}

TEST(Simplification, Exemplars) {
  MockBackend mock;
  EXPECT_EQ(simplify_sentence("She uses imperatives to give orders and asks direct questions to "
                              "gather information.",
                              kNadia, mock),
            (std::vector<std::string>{"She uses imperatives to give orders.",
                                      "She asks direct questions to gather information."}));
  EXPECT_EQ(
      simplify_sentence("Hassan encountered a crab monster and engaged in a card battle to defeat it.",
                        kNadia, mock),
      (std::vector<std::string>{"Hassan encountered a crab monster.",
                                "Hassan engaged in a card battle to defeat the crab monster."}));
  const std::string kaluros =
      "Kaluros is determined and focused during battles, using his magic and weapons "
      "effectively to defeat his enemies.";
  EXPECT_EQ(simplify_sentence(kaluros, kNadia, mock), std::vector<std::string>{kaluros});
}

TEST(Simplification, CutsRunawayExemplars) {
  auto b = FunctionBackend::from_text([](const ChatRequest&) {
    return "Nadia ran. Nadia hid.\n\nSentence: Bob sang and danced.";
  });
  EXPECT_EQ(simplify_sentence("Nadia ran and hid.", kNadia, *b),
            (std::vector<std::string>{"Nadia ran.", "Nadia hid."}));
}

TEST(Simplification, EmptyCompletionKeepsSentence) {
  auto b = FunctionBackend::from_text([](const ChatRequest&) { return "  "; });
  std::vector<std::string> warnings;
  auto out = simplify_sentence("Nadia ran   and hid.", kNadia, *b,
                               [&](std::string_view m) { warnings.emplace_back(m); });
  EXPECT_EQ(out, std::vector<std::string>{"Nadia ran and hid."});
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_THROW(simplify_sentence(" ", kNadia, *b), ContractError);
}

TEST(GenerateStatements, OrderAndOrdinals) {
  auto b = scripted("She ran. He hid.");
  std::vector<Statement> s =
      generate_statements(snippet_with("x"), kNadia, find_question("knowledge_facts"), *b);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "She ran.");
  EXPECT_EQ(s[1].text, "He hid.");
  EXPECT_EQ(s[0].ordinal, 0u);
  EXPECT_EQ(s[1].ordinal, 1u);
  for (const Statement& st : s) {
    EXPECT_FALSE(st.parent_sentence.has_value());
    EXPECT_EQ(st.question_id, "knowledge_facts");
    EXPECT_EQ(st.focus_character, "nadia");
    EXPECT_EQ(st.snippet, (SnippetRef{"lighthouse", "lighthouse-e03", 1}));
    EXPECT_EQ(st.generator_model, "function");
  }
  EXPECT_EQ(b->calls(), 3u);  // one generation, two simplifications
}

TEST(GenerateStatements, EmptyAnswer) {
  auto b = scripted("");
  EXPECT_TRUE(
      generate_statements(snippet_with("x"), kNadia, find_question("goals_gained"), *b).empty());
  EXPECT_EQ(b->calls(), 1u);
}

TEST(GenerateStatements, CompoundSentenceKeepsLineage) {
  const std::string compound =
      "She uses imperatives to give orders and asks direct questions to gather information.";
  MockBackend mock([compound](const ChatRequest& r) {
    if (is_simplification(r)) return mock::heuristic_response(r);
    ChatResponse out;
    out.text = compound + " Nadia smiled.";
    return out;
  });
  std::vector<Statement> s =
      generate_statements(snippet_with("x"), kNadia, find_question("dialogue_speech"), mock);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].parent_sentence, compound);
  EXPECT_EQ(s[1].parent_sentence, compound);
  EXPECT_FALSE(s[2].parent_sentence.has_value());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].ordinal, i);
  EXPECT_EQ(s[0].generator_model, "mock");
}

TEST(GenerateStatements, PureUnderMock) {
  Story story = testing::fixture_stories().front();
  std::vector<Snippet> snippets = split_story(story);
  const Character& c = *story.find_character("nadia");
  for (const Snippet& sn : snippets) {
    for (const QuestionSpec& q : kQuestions) {
      MockBackend a, b;
      auto x = generate_statements(sn, c, q, a);
      auto y = generate_statements(sn, c, q, b);
      ASSERT_EQ(x.size(), y.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(nlohmann::json(x[i]), nlohmann::json(y[i]));
        if (i) {
          EXPECT_GT(x[i].ordinal, x[i - 1].ordinal);
        }
      }
    }
  }
}

TEST(GenerateStatements, BackendErrorNamesTheSnippet) {
  auto b = std::make_shared<FunctionBackend>(
      [](const ChatRequest& r) -> ChatResponse { throw BackendError("boom", request_key(r)); });
  try {
    generate_statements(snippet_with("x"), kNadia, find_question("goals_gained"), *b);
    FAIL();
  } catch (const BackendError& e) {
    std::string what = e.what();
    EXPECT_NE(what.find("lighthouse/lighthouse-e03#1"), std::string::npos);
    EXPECT_NE(what.find("goals_gained"), std::string::npos);
    EXPECT_EQ(e.request_key(),
              request_key(build_generation_prompt(snippet_with("x"), kNadia, "goals_gained")));
  }
}

TEST(Statement, JsonRoundTrip) {
  Statement s = testing::make_statement("Nadia ran.", "knowledge_facts", "st", "e1", 2, "nadia", 4);
  s.parent_sentence = "Nadia ran and hid.";
  s.generator_model = "m";
  Statement back = nlohmann::json(s).get<Statement>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(s));
}

}  // namespace
}  // namespace chiron
