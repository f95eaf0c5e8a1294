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


// Drives the built command-line tool end to end on the fixture corpus.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "test_support.hpp"

namespace chiron {
namespace {

using testing::ScratchDir;
using testing::slurp;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(const ScratchDir& dir, const std::string& args) {
  std::string out = (dir.path() / "stdout.txt").string();
  std::string err = (dir.path() / "stderr.txt").string();
  std::string cmd = std::string("'") + CHIRON_CLI_PATH + "' " + args + " >'" + out + "' 2>'" +
                    err + "'";
  int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string fixture(const std::string& name) { return (testing::fixture_dir() / name).string(); }

std::string out_flag(const ScratchDir& dir, const std::string& sub) {
  return "--out '" + (dir.path() / sub).string() + "'";
}

// character|text for every statement in a sheets file.
std::set<std::string> sheet_statements(const std::string& file) {
  std::set<std::string> out;
  std::istringstream in(file);
  std::string line;
  std::getline(in, line);  // provenance
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    for (const auto& [_, qs] : j["categories"].items()) {
      for (const auto& [__, list] : qs.items()) {
        for (const auto& s : list) {
          out.insert(j["character"]["character_id"].get<std::string>() + "|" +
                     s["text"].get<std::string>());
        }
      }
    }
  }
  return out;
}

TEST(Cli, HelpAndBadOptions) {
  ScratchDir dir;
  EXPECT_EQ(run_cli(dir, "--help").code, 0);
  EXPECT_EQ(run_cli(dir, "").code, 2);
  EXPECT_EQ(run_cli(dir, "sheet --corpus x --policy ge3").code, 2);
  EXPECT_EQ(run_cli(dir, "frobnicate").code, 2);
}

TEST(Cli, IngestIsDeterministic) {
  ScratchDir dir;
  CliRun a = run_cli(dir, out_flag(dir, "a") + " ingest --corpus '" + fixture("stories.jsonl") + "'");
  CliRun b = run_cli(dir, out_flag(dir, "b") + " ingest --corpus '" + fixture("stories.jsonl") + "'");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("stories kept: 3"), std::string::npos) << a.out;
  EXPECT_EQ(slurp(dir.path() / "a/snippets.jsonl"), slurp(dir.path() / "b/snippets.jsonl"));
  EXPECT_EQ(slurp(dir.path() / "a/stories.jsonl"), slurp(dir.path() / "b/stories.jsonl"));
}

TEST(Cli, FullyFilteredCorpusIsPartial) {
  ScratchDir dir;
  CliRun r = run_cli(dir, out_flag(dir, "o") + " ingest --corpus '" + fixture("rejects.jsonl") + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("rejected lighthouse-nsfw: nsfw"), std::string::npos) << r.err;
  std::string snippets = slurp(dir.path() / "o/snippets.jsonl");
  EXPECT_EQ(std::count(snippets.begin(), snippets.end(), '\n'), 1);
  EXPECT_EQ(snippets.rfind("{\"provenance\":", 0), 0u);
}

TEST(Cli, MalformedLineNamesTheLine) {
  ScratchDir dir;
  std::string lines = slurp(fixture("stories.jsonl"));
  std::ofstream(dir.path() / "bad.jsonl") << lines.substr(0, lines.find('\n') + 1) << "{oops\n";
  CliRun r = run_cli(dir, out_flag(dir, "o") + " ingest --corpus '" +
                           (dir.path() / "bad.jsonl").string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, SheetsAreReproducibleAndPolicyNested) {
  ScratchDir dir;
  std::string corpus = " sheet --corpus '" + fixture("stories.jsonl") + "' --backend mock";
  CliRun a = run_cli(dir, out_flag(dir, "a") + corpus + " --concurrency 1");
  CliRun b = run_cli(dir, out_flag(dir, "b") + corpus + " --concurrency 4");
  CliRun g = run_cli(dir, out_flag(dir, "g") + corpus + " --policy ge4");
  ASSERT_LE(a.code, 1) << a.err;
  ASSERT_LE(g.code, 1) << g.err;
  std::string sa = slurp(dir.path() / "a/sheets.jsonl");
  EXPECT_EQ(sa, slurp(dir.path() / "b/sheets.jsonl"));
  EXPECT_NE(a.out.find("sheets written: 9"), std::string::npos) << a.out;

  std::set<std::string> eq5 = sheet_statements(sa);
  std::set<std::string> ge4 = sheet_statements(slurp(dir.path() / "g/sheets.jsonl"));
  EXPECT_FALSE(eq5.empty());
  EXPECT_TRUE(std::includes(ge4.begin(), ge4.end(), eq5.begin(), eq5.end()));
}

TEST(Cli, PredictWithOracleAndUniformMock) {
  ScratchDir dir;
  std::string corpus = " predict --corpus '" + fixture("stories.jsonl") + "'";
  CliRun oracle = run_cli(dir, out_flag(dir, "o") + corpus + " --backend oracle");
  ASSERT_EQ(oracle.code, 0) << oracle.err;
  EXPECT_NE(oracle.out.find("100.0%"), std::string::npos) << oracle.out;
  CliRun mock = run_cli(dir, out_flag(dir, "m") + corpus + " --backend mock");
  ASSERT_EQ(mock.code, 0) << mock.err;
  EXPECT_NE(mock.out.find("33.3%"), std::string::npos) << mock.out;
  nlohmann::json acc = nlohmann::json::parse(slurp(dir.path() / "m/accuracy.json"));
  EXPECT_EQ(acc["rows"][0]["setting"], "NoInformation");
}

TEST(Cli, AnalyzeDensity) {
  ScratchDir dir;
  ASSERT_LE(run_cli(dir, out_flag(dir, "s") + " sheet --corpus '" + fixture("stories.jsonl") +
                             "' --backend mock")
                .code,
            1);
  CliRun r = run_cli(dir, out_flag(dir, "d") + " analyze --corpus '" + fixture("stories.jsonl") +
                           "' --sheets '" + (dir.path() / "s/sheets.jsonl").string() +
                           "' --setup All --source fixture");
  ASSERT_EQ(r.code, 0) << r.err;
  nlohmann::json j = nlohmann::json::parse(slurp(dir.path() / "d/density.json"));
  EXPECT_GT(j["density"].get<double>(), 0.0);
  EXPECT_NE(r.out.find("fixture"), std::string::npos);
}

TEST(Cli, EvalAgreementAndClassifier) {
  ScratchDir dir;
  {
    std::ofstream ann(dir.path() / "agree.jsonl");
    for (int i = 0; i < 4; ++i) {
      int l = 2 + i;
      ann << nlohmann::json{{"record_id", "r" + std::to_string(i)},
                            {"character", {{"character_id", "a"}, {"canonical_name", "A"}}},
                            {"statement", "s"},
                            {"labels", {{"x", l}, {"y", l}}}}
                 .dump()
          << "\n";
    }
  }
  CliRun perfect = run_cli(dir, out_flag(dir, "p") + " eval --annotations '" +
                                 (dir.path() / "agree.jsonl").string() + "'");
  ASSERT_EQ(perfect.code, 0) << perfect.err;
  EXPECT_NE(perfect.out.find("Krippendorff alpha (interval): 1.000"), std::string::npos)
      << perfect.out;

  {
    std::ofstream pred(dir.path() / "pred.jsonl");
    for (const AnnotationRecord& r : testing::fixture_annotations()) {
      pred << nlohmann::json{{"record_id", r.record_id}, {"label", r.gold_label()}}.dump()
           << "\n";
    }
  }
  CliRun cls = run_cli(dir, out_flag(dir, "c") + " eval --annotations '" +
                             fixture("annotations.jsonl") + "' --predictions '" +
                             (dir.path() / "pred.jsonl").string() + "'");
  ASSERT_EQ(cls.code, 0) << cls.err;
  nlohmann::json j = nlohmann::json::parse(slurp(dir.path() / "c/eval.json"));
  EXPECT_EQ(j["classifier"][0]["precision"], 1.0);
  EXPECT_EQ(j["classifier"][0]["recall"], 1.0);
}

TEST(Cli, ReplayMissIsBackendFailure) {
  ScratchDir dir;
  std::ofstream(dir.path() / "empty.jsonl").flush();
  CliRun r = run_cli(dir, out_flag(dir, "o") + " sheet --corpus '" + fixture("stories.jsonl") +
                           "' --backend replay --cache-path '" +
                           (dir.path() / "empty.jsonl").string() + "'");
  // A replay miss inside validation is isolated per statement; the miss on
  // generation aborts the run.
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("request"), std::string::npos) << r.err;
}

TEST(Cli, RecordedCacheReplaysIdentically) {
  ScratchDir dir;
  std::string cache = (dir.path() / "cache.jsonl").string();
  std::string corpus = " sheet --corpus '" + fixture("stories.jsonl") + "' --character nadia";
  CliRun rec = run_cli(dir, out_flag(dir, "r") + corpus + " --backend mock --cache-path '" + cache + "'");
  ASSERT_LE(rec.code, 1) << rec.err;
  CliRun rep = run_cli(dir, out_flag(dir, "p") + corpus + " --backend replay --cache-path '" + cache + "'");
  ASSERT_LE(rep.code, 1) << rep.err;
  std::set<std::string> recorded = sheet_statements(slurp(dir.path() / "r/sheets.jsonl"));
  EXPECT_FALSE(recorded.empty());
  EXPECT_EQ(recorded, sheet_statements(slurp(dir.path() / "p/sheets.jsonl")));
}

}  // namespace
}  // namespace chiron
