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


#include "opsum/evaluation.hpp"
#include "opsum/rouge.hpp"

#include <gtest/gtest.h>

#include <random>

namespace opsum {
namespace {

Words W(std::string_view s) { return rouge_tokens(s); }

// Longest common subsequence by enumerating every subsequence of `a`.
std::size_t brute_lcs(const Words& a, const Words& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    Words sub;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (mask & (1u << i)) sub.push_back(a[i]);
    std::size_t j = 0;
    for (const auto& w : b)
      if (j < sub.size() && sub[j] == w) ++j;
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

TEST(Rouge, Tokenization) {
  EXPECT_EQ(W("The CAT, sat!  on--the mat."), (Words{"the", "cat", "sat", "on", "the", "mat"}));
  EXPECT_TRUE(W("  ...  ").empty());
  EXPECT_EQ(W("caf\xc3\xa9 ok"), (Words{"caf\xc3\xa9", "ok"}));
}

TEST(Rouge, HandCountedUnigrams) {
  auto s = rouge_n(W("the cat sat"), W("the cat ran on the mat"), 1);
  EXPECT_NEAR(s.p, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.r, 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(s.f1, 4.0 / 9.0, 1e-12);
  EXPECT_DOUBLE_EQ(rouge_n(W("a b c"), W("a b c"), 1).f1, 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(W("a b c"), W("a b c"), 2).f1, 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(W("a b"), W("c d"), 1).f1, 0.0);
  auto empty = rouge_n({}, W("a"), 1);
  EXPECT_EQ(empty.p, 0.0);
  EXPECT_EQ(empty.f1, 0.0);
}

TEST(Rouge, ClippedCounts) {
  // "the" appears three times in the candidate but twice in the reference.
  auto s = rouge_n(W("the the the"), W("the cat the"), 1);
  EXPECT_NEAR(s.p, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.r, 2.0 / 3.0, 1e-12);
  auto b = rouge_n(W("a b a b"), W("a b x a b"), 2);
  // Candidate bigrams: ab, ba, ab. Reference: ab, bx, xa, ab.
  EXPECT_NEAR(b.p, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(b.r, 2.0 / 4.0, 1e-12);
}

TEST(Rouge, LcsExamples) {
  auto s = rouge_l(W("a c b"), W("a b c"));
  EXPECT_EQ(lcs_length(W("a c b"), W("a b c")), 2u);
  EXPECT_NEAR(s.p, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.r, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(lcs_length(W("a b c"), W("c b a")), 1u);
  EXPECT_DOUBLE_EQ(rouge_l(W("x y z"), W("x y z")).f1, 1.0);
}

TEST(Rouge, LcsMatchesBruteForce) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(0, 7), sym(0, 3);
  for (int t = 0; t < 2000; ++t) {
    Words a, b;
    int la = len(rng), lb = std::min(len(rng), 14 - la);
    for (int i = 0; i < la; ++i) a.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
    for (int i = 0; i < lb; ++i) b.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
    ASSERT_EQ(lcs_length(a, b), brute_lcs(a, b));
  }
}

TEST(Rouge, Properties) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> len(1, 12), sym(0, 5);
  auto draw = [&] {
    Words w;
    for (int i = len(rng); i > 0; --i) w.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
    return w;
  };
  for (int t = 0; t < 500; ++t) {
    Words a = draw(), b = draw();
    for (int n : {1, 2}) {
      auto ab = rouge_n(a, b, n), ba = rouge_n(b, a, n);
      EXPECT_NEAR(ab.p, ba.r, 1e-12);
      EXPECT_NEAR(ab.r, ba.p, 1e-12);
      for (double v : {ab.p, ab.r, ab.f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_LE(ab.f1, std::max(ab.p, ab.r) + 1e-12);
    }
    auto l = rouge_l(a, b);
    EXPECT_LE(l.f1, std::max(l.p, l.r) + 1e-12);
    // Appending a reference unigram never lowers recall.
    Words a2 = a;
    a2.push_back(b[rng() % b.size()]);
    EXPECT_GE(rouge_n(a2, b, 1).r, rouge_n(a, b, 1).r - 1e-12);
  }
}

TEST(Rouge, ScoreInstanceTakesPerMetricMax) {
  std::vector<std::string> one = {"the cat ran on the mat"};
  auto direct = rouge("the cat sat", one[0]);
  auto single = score_instance("the cat sat", one);
  EXPECT_DOUBLE_EQ(single.r1.f1, direct.r1.f1);
  EXPECT_DOUBLE_EQ(single.rl.f1, direct.rl.f1);

  std::vector<std::string> three = {"a b c d", "the cat sat", "x y"};
  EXPECT_DOUBLE_EQ(score_instance("the cat sat", three).r1.f1, 1.0);

  std::vector<std::string> refs = {"a b x x", "b a", "a x b y c"};
  std::string cand = "a b c";
  auto s = score_instance(cand, refs);
  double r1 = 0, r2 = 0, rl = 0;
  for (const auto& r : refs) {
    auto h = rouge(cand, r);
    r1 = std::max(r1, h.r1.f1);
    r2 = std::max(r2, h.r2.f1);
    rl = std::max(rl, h.rl.f1);
  }
  EXPECT_DOUBLE_EQ(s.r1.f1, r1);
  EXPECT_DOUBLE_EQ(s.r2.f1, r2);
  EXPECT_DOUBLE_EQ(s.rl.f1, rl);
  // Hand values for ROUGE-1 F1: 4/7, 4/5 and 3/4; ref 1 wins.
  EXPECT_NEAR(r1, 0.8, 1e-12);
  EXPECT_NEAR(s.r1.p, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.r1.r, 1.0, 1e-12);

  std::vector<std::string> dup = {refs[2], refs[2]};
  std::vector<std::string> one_ref = {refs[2]};
  EXPECT_DOUBLE_EQ(score_instance(cand, dup).rl.f1, score_instance(cand, one_ref).rl.f1);
  EXPECT_THROW(score_instance(cand, std::vector<std::string>{}), ValidationError);
}

TEST(Evaluation, SelfReferencesScoreOne) {
  std::vector<ReferenceSet> refs = {{"e1", {"good food here", "x"}}, {"e2", {"bad staff", "y"}}};
  std::vector<SummaryRecord> sums = {{"e1", "good food here", {}}, {"e2", "bad staff", {}}};
  auto rep = evaluate_summaries(sums, refs);
  EXPECT_DOUBLE_EQ(rep.means.r1.f1, 1.0);
  EXPECT_DOUBLE_EQ(rep.means.r2.f1, 1.0);
  EXPECT_DOUBLE_EQ(rep.means.rl.f1, 1.0);
}

TEST(Evaluation, MeansAreColumnAverages) {
  std::vector<ReferenceSet> refs = {{"e1", {"the cat ran on the mat"}}, {"e2", {"a b c"}}, {"e3", {"q"}}};
  std::vector<SummaryRecord> sums = {{"e1", "the cat sat", {}}, {"e2", "a c b", {}}, {"e3", "z", {}}};
  auto rep = evaluate_summaries(sums, refs);
  double r1 = 0, rl = 0;
  for (const auto& s : rep.per_instance) {
    r1 += s.score.r1.f1;
    rl += s.score.rl.f1;
  }
  EXPECT_NEAR(rep.means.r1.f1, r1 / 3, 1e-12);
  EXPECT_NEAR(rep.means.rl.f1, rl / 3, 1e-12);
  EXPECT_NEAR(rep.means.r1.f1, (4.0 / 9.0 + 1.0 + 0.0) / 3, 1e-12);
  EXPECT_EQ(rep.csv().substr(0, 19), "entity_id,r1,r2,rl\n");
  EXPECT_EQ(rep.to_json()["per_instance"].size(), 3u);
}

TEST(Evaluation, Errors) {
  std::vector<ReferenceSet> refs = {{"e1", {"a"}}};
  EXPECT_THROW(evaluate_summaries({}, refs), ValidationError);
  try {
    evaluate_summaries({{"e9", "a", {}}, {"e8", "b", {}}}, refs);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("e9, e8"), std::string::npos);
  }
}

TEST(Evaluation, FileRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "opsum_eval_test";
  std::filesystem::create_directories(dir);
  ContentPlan p{Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1, 0)};
  save_summaries(dir / "s.jsonl", {{"e1", "nice staff", p}});
  save_references(dir / "r.jsonl", {{"e1", {"nice staff", "rude staff"}}});
  auto rep = evaluate_run(dir / "s.jsonl", dir / "r.jsonl");
  EXPECT_DOUBLE_EQ(rep.means.r1.f1, 1.0);
  EXPECT_EQ(load_summaries(dir / "s.jsonl")[0].plan.aspect(0), 0.5);
  write_file_atomic(dir / "empty.jsonl", "");
  EXPECT_THROW(evaluate_run(dir / "empty.jsonl", dir / "r.jsonl"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST(Evaluation, RandomBaselinePicksEntityReviews) {
  std::vector<ReviewRecord> recs = {{"e1", "a", "one", 3, {}}, {"e1", "b", "two", 3, {}}, {"e2", "c", "three", 3, {}}};
  std::vector<ReferenceSet> refs = {{"e1", {"x"}}, {"e2", {"y"}}};
  auto base = random_review_baseline(recs, refs, 5);
  ASSERT_EQ(base.size(), 2u);
  EXPECT_TRUE(base[0].summary_text == "one" || base[0].summary_text == "two");
  EXPECT_EQ(base[1].summary_text, "three");
  EXPECT_EQ(random_review_baseline(recs, refs, 5)[0].summary_text, base[0].summary_text);
}

TEST(Evaluation, AlphaCsvHasOneRowPerAlpha) {
  std::vector<AlphaRow> rows = {{1, 0.2, 0.1, 0.2, 5}, {10, 0.3, 0.1, 0.2, 5}};
  auto csv = alpha_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.substr(0, 14), "alpha,r1,r2,rl");
}

}  // namespace
}  // namespace opsum
