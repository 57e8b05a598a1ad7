// Copyright 2026 The opsum Authors.
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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "opsum/pipeline.hpp"

namespace {

using namespace opsum;
namespace fs = std::filesystem;
namespace pl = opsum::pipeline;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("opsum_pipeline_test_" + name);
  fs::remove_all(p);
  return p;
}

pl::RunConfig small_config(const fs::path& out) {
  pl::RunConfig c;
  c.set_seed(5);
  c.out_dir = out;
  c.corpus.desk_entities = 8;
  c.corpus.desk_reviews_per_entity = 16;
  c.induction.max_epochs = 2;
  c.synthesis.dataset_size = 30;
  c.summarizer.max_epochs = 1;
  c.summarizer.hidden = 16;
  return c;
}

TEST(Config, DefaultCorpusHas600Records) {
  auto dir = scratch("default");
  pl::RunConfig c;
  c.out_dir = dir;
  pl::cmd_gen_corpus(c, pl::Artifacts(dir));
  EXPECT_EQ(read_jsonl(dir / "corpus.jsonl").size(), 600u);
}

TEST(Config, SameSeedGivesByteIdenticalCorpus) {
  auto a = scratch("same_a"), b = scratch("same_b"), d = scratch("same_d");
  pl::RunConfig c = small_config(a);
  pl::cmd_gen_corpus(c, pl::Artifacts(a));
  pl::cmd_gen_corpus(c, pl::Artifacts(b));
  c.set_seed(6);
  pl::cmd_gen_corpus(c, pl::Artifacts(d));
  EXPECT_EQ(read_file(a / "corpus.jsonl"), read_file(b / "corpus.jsonl"));
  EXPECT_NE(read_file(a / "corpus.jsonl"), read_file(d / "corpus.jsonl"));
}

TEST(Config, SectionSeedsOverrideTheGlobalSeed) {
  auto c = pl::RunConfig::from_json(json{{"seed", 11}, {"summarizer", {{"seed", 3}}}});
  EXPECT_EQ(c.synthesis.seed, 11u);
  EXPECT_EQ(c.summarizer.seed, 3u);
  EXPECT_THROW(pl::RunConfig::from_json(json{{"eval", {{"bogus", 1}}}}), ValidationError);
  EXPECT_THROW(pl::RunConfig::from_json(json{{"eval", {{"ablation_epochs", -1}}}}).validate(), ValidationError);
}

TEST(Config, AblationBudgetsOnlyApplyWhenSet) {
  pl::RunConfig c;
  c.synthesis.dataset_size = 500;
  c.summarizer.max_epochs = 9;
  auto v = pl::variant_config(c, "no_plan", 2);
  EXPECT_EQ(v.synthesis.dataset_size, 500);
  EXPECT_FALSE(v.summarizer.use_plan);
  EXPECT_EQ(v.summarizer.seed, c.seed + 2);
  c.eval.ablation_dataset_size = 40;
  c.eval.ablation_epochs = 2;
  v = pl::variant_config(c, "random_sampling", 0);
  EXPECT_EQ(v.synthesis.dataset_size, 40);
  EXPECT_EQ(v.summarizer.max_epochs, 2);
  EXPECT_THROW(pl::variant_config(c, "nope", 0), ValidationError);
}

TEST(Commands, OutputDirThatIsAFileIsRejected) {
  auto dir = scratch("file");
  fs::create_directories(dir);
  std::ofstream(dir / "blocker") << "x";
  auto c = small_config(dir / "blocker" / "run");
  EXPECT_THROW(pl::cmd_gen_corpus(c, pl::Artifacts(c.out_dir)), ValidationError);
}

TEST(Commands, MissingUpstreamNamesTheProducingCommand) {
  auto dir = scratch("missing");
  auto c = small_config(dir);
  try {
    pl::cmd_train_induce(c, pl::Artifacts(dir));
    FAIL() << "expected a ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("opsum gen-corpus"), std::string::npos) << e.what();
  }
  pl::cmd_gen_corpus(c, pl::Artifacts(dir));
  try {
    pl::cmd_synthesize(c, pl::Artifacts(dir));
    FAIL() << "expected a ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("opsum train-induce"), std::string::npos) << e.what();
  }
}

TEST(Grouping, ChunksPerEntityAndKeepsSmallEntitiesWhole) {
  std::vector<ReviewRecord> rs;
  for (int i = 0; i < 17; ++i) rs.push_back({"big", "b" + std::to_string(i), "t", 3, {}});
  for (int i = 0; i < 3; ++i) rs.push_back({"small", "s" + std::to_string(i), "t", 3, {}});
  auto groups = pl::input_groups(rs, 8);
  ASSERT_EQ(groups.size(), 3u);
  std::map<std::string, std::vector<std::size_t>> sizes;
  for (const auto& g : groups) sizes[g.front().entity_id].push_back(g.size());
  EXPECT_EQ(sizes["big"], (std::vector<std::size_t>{8, 8}));
  EXPECT_EQ(sizes["small"], (std::vector<std::size_t>{3}));
}

TEST(Baseline, DrawsFromEachSummarysOwnInputs) {
  std::vector<ReviewRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back({"e", "r" + std::to_string(i), "text " + std::to_string(i), 3, {}});
  std::vector<SummaryRecord> sums = {{"e", "s", {}, {"r1", "r2", "r3"}}, {"e", "s", {}, {"r7"}}};
  auto a = random_input_baseline(sums, rs, 9), b = random_input_baseline(sums, rs, 9);
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(a[0].inputs.size(), 1u);
  EXPECT_TRUE(a[0].inputs[0] == "r1" || a[0].inputs[0] == "r2" || a[0].inputs[0] == "r3");
  EXPECT_EQ(a[0].summary_text, "text " + a[0].inputs[0].substr(1));
  EXPECT_EQ(a[1].inputs[0], "r7");
  EXPECT_EQ(a[0].inputs, b[0].inputs);

  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 64; ++s) seen.insert(random_input_baseline(sums, rs, s)[0].inputs[0]);
  EXPECT_EQ(seen.size(), 3u);

  sums[1].inputs = {};
  EXPECT_THROW(random_input_baseline(sums, rs, 1), ValidationError);
  sums[1].inputs = {"missing"};
  EXPECT_THROW(random_input_baseline(sums, rs, 1), ValidationError);
}

// One small trained run shared by the end-to-end checks.
class TrainedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("trained"));
    config_ = new pl::RunConfig(small_config(*dir_));
    pl::Artifacts art(*dir_);
    pl::cmd_gen_corpus(*config_, art);
    pl::cmd_train_induce(*config_, art);
    pl::cmd_synthesize(*config_, art);
    pl::cmd_train_sum(*config_, art);
  }
  static void TearDownTestSuite() {
    delete config_;
    delete dir_;
  }
  static fs::path* dir_;
  static pl::RunConfig* config_;
};
fs::path* TrainedRun::dir_ = nullptr;
pl::RunConfig* TrainedRun::config_ = nullptr;

TEST_F(TrainedRun, EightReviewsGiveOneSummary) {
  auto records = load_corpus(*dir_ / "corpus.jsonl", config_->corpus.corpus);
  std::vector<json> eight;
  for (const auto& r : records)
    if (r.entity_id == records.front().entity_id && eight.size() < 8) eight.push_back(r.to_json());
  ASSERT_EQ(eight.size(), 8u);
  auto input = *dir_ / "eight.jsonl";
  write_jsonl(input, eight);

  pl::RunConfig c = *config_;
  c.synthesis.n_reviews = 8;
  pl::Artifacts art(*dir_);
  pl::cmd_summarize(c, art, input);
  auto lines = read_jsonl(art.summaries());
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0]["inputs"].size(), 8u);
  EXPECT_EQ(read_jsonl(art.baseline()).size(), 1u);
  EXPECT_TRUE(fs::exists(art.manifest("summarize")));
}

TEST_F(TrainedRun, SummariesScoredAgainstThemselvesGetF1One) {
  pl::Artifacts art(*dir_);
  pl::cmd_summarize(*config_, art);
  std::vector<json> refs;
  for (const auto& s : load_summaries(art.summaries()))
    if (!s.summary_text.empty()) refs.push_back(ReferenceSet{s.entity_id, {s.summary_text}}.to_json());
  ASSERT_FALSE(refs.empty());
  // Keep one summary per entity so each reference set matches exactly.
  std::map<std::string, json> first;
  for (const auto& r : refs) first.emplace(r["entity_id"].get<std::string>(), r);
  std::vector<json> unique;
  std::vector<SummaryRecord> kept;
  for (const auto& s : load_summaries(art.summaries()))
    if (first.count(s.entity_id) && first[s.entity_id]["references"][0] == s.summary_text) {
      kept.push_back(s);
      unique.push_back(first[s.entity_id]);
      first.erase(s.entity_id);
    }
  pl::Artifacts self(*dir_, *dir_ / "self");
  pl::ensure_dir(self.downstream);
  save_summaries(self.summaries(), kept);
  write_jsonl(*dir_ / "self_refs.jsonl", unique);
  pl::cmd_evaluate(*config_, self, *dir_ / "self_refs.jsonl");
  auto report = json::parse(read_file(self.eval_json()));
  auto ev = pl::evaluate_outputs(*config_, self, *dir_ / "self_refs.jsonl");
  EXPECT_DOUBLE_EQ(ev.model.means.r1.f1, 1.0);
  EXPECT_DOUBLE_EQ(ev.model.means.rl.f1, 1.0);
  EXPECT_FALSE(report.empty());
}

TEST_F(TrainedRun, CliReportsMissingArtifactsWithExitCodeOne) {
  auto empty = scratch("cli_empty");
  std::string cmd = std::string(OPSUM_CLI) + " synthesize --out " + empty.string() + " > " +
                    (empty.string() + ".log") + " 2>&1";
  int rc = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), 1);
  EXPECT_NE(read_file(empty.string() + ".log").find("opsum train-induce"), std::string::npos);

  rc = std::system((std::string(OPSUM_CLI) + " train-sum --epochs=-1 --out " + dir_->string() + " > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 1);
  rc = std::system((std::string(OPSUM_CLI) + " --help > /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 0);
}

TEST_F(TrainedRun, CliEvaluateWritesReports) {
  pl::Artifacts art(*dir_);
  pl::cmd_summarize(*config_, art);
  auto cfg = *dir_ / "cfg.json";
  write_file_atomic(cfg, config_->to_json().dump());
  std::string cmd = std::string(OPSUM_CLI) + " evaluate --config " + cfg.string() + " --out " + dir_->string() +
                    " > /dev/null 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_TRUE(fs::exists(art.eval_json()));
  EXPECT_TRUE(fs::exists(art.eval_csv()));
  EXPECT_TRUE(fs::exists(art.baseline_eval_json()));
}

}  // namespace
