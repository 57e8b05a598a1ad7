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


// Synthetic review-set construction: a filtered review plays the summary,
// its content plan is perturbed N times by Dirichlet sampling, and each
// perturbed plan is matched to the closest other review of the same entity.

#ifndef OPSUM_SYNTHESIS_HPP_
#define OPSUM_SYNTHESIS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "opsum/base.hpp"
#include "opsum/corpus.hpp"
#include "opsum/induction.hpp"
#include "opsum/plan.hpp"
#include "opsum/tokenizer.hpp"

namespace opsum {

enum class SamplingMode { kDirichlet, kRandom };

struct SynthesisConfig {
  double alpha_a = 10.0;
  double alpha_s = 10.0;
  int n_reviews = 8;  // N
  int min_len = 20;
  int max_len = 45;
  bool forbid_first_person = true;
  double epsilon_floor = 1e-3;
  int dataset_size = 2000;
  std::uint64_t seed = 13;
  // kRandom draws the N inputs uniformly from the entity instead of
  // matching sampled plans.
  SamplingMode sampling = SamplingMode::kDirichlet;

  void validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("synthesis." + m); };
    if (!(alpha_a > 0.0) || !(alpha_s > 0.0)) fail("alpha_a and alpha_s must be > 0");
    if (n_reviews < 1) fail("n_reviews must be >= 1");
    if (min_len < 0 || min_len > max_len) fail("min_len must be in [0, max_len]");
    if (!(epsilon_floor > 0.0)) fail("epsilon_floor must be > 0");
    if (dataset_size < 0) fail("dataset_size must be >= 0");
  }

  json to_json() const {
    return {{"alpha_a", alpha_a},         {"alpha_s", alpha_s},
            {"n_reviews", n_reviews},     {"min_len", min_len},
            {"max_len", max_len},         {"forbid_first_person", forbid_first_person},
            {"epsilon_floor", epsilon_floor}, {"dataset_size", dataset_size},
            {"seed", seed},
            {"sampling", sampling == SamplingMode::kDirichlet ? "dirichlet" : "random"}};
  }

  static SynthesisConfig from_json(const json& j) { return from_json(j, SynthesisConfig()); }
  static SynthesisConfig from_json(const json& j, SynthesisConfig c) {
    constexpr std::string_view s = "synthesis";
    check_known_keys(j, {"alpha_a", "alpha_s", "n_reviews", "min_len", "max_len",
                         "forbid_first_person", "epsilon_floor", "dataset_size", "seed", "sampling"},
                     s);
    read_key(j, "alpha_a", c.alpha_a, s);
    read_key(j, "alpha_s", c.alpha_s, s);
    read_key(j, "n_reviews", c.n_reviews, s);
    read_key(j, "min_len", c.min_len, s);
    read_key(j, "max_len", c.max_len, s);
    read_key(j, "forbid_first_person", c.forbid_first_person, s);
    read_key(j, "epsilon_floor", c.epsilon_floor, s);
    read_key(j, "dataset_size", c.dataset_size, s);
    read_key(j, "seed", c.seed, s);
    std::string mode = c.sampling == SamplingMode::kDirichlet ? "dirichlet" : "random";
    read_key(j, "sampling", mode, s);
    if (mode == "dirichlet") c.sampling = SamplingMode::kDirichlet;
    else if (mode == "random") c.sampling = SamplingMode::kRandom;
    else throw ValidationError("synthesis.sampling must be \"dirichlet\" or \"random\"");
    return c;
  }
};

struct SyntheticInstance {
  ReviewRecord summary;
  std::vector<ReviewRecord> inputs;
  ContentPlan summary_plan;
  std::vector<ContentPlan> input_plans;

  void validate() const {
    if (inputs.size() != input_plans.size())
      throw ValidationError("synthetic instance " + summary.review_id + ": inputs/plans size mismatch");
    std::set<std::string> seen;
    for (const auto& r : inputs) {
      if (r.entity_id != summary.entity_id)
        throw ValidationError("synthetic instance " + summary.review_id + ": input from another entity");
      if (r.review_id == summary.review_id)
        throw ValidationError("synthetic instance " + summary.review_id + ": summary among inputs");
      if (!seen.insert(r.review_id).second)
        throw ValidationError("synthetic instance " + summary.review_id + ": repeated input");
    }
  }

  json to_json() const {
    json in = json::array(), plans = json::array();
    for (const auto& r : inputs) in.push_back(r.to_json());
    for (const auto& p : input_plans) plans.push_back(p.to_json());
    return {{"summary", summary.to_json()},
            {"inputs", in},
            {"summary_plan", summary_plan.to_json()},
            {"input_plans", plans}};
  }

  static SyntheticInstance from_json(const json& j) {
    SyntheticInstance s;
    s.summary = ReviewRecord::from_json(j.at("summary"));
    for (const auto& r : j.at("inputs")) s.inputs.push_back(ReviewRecord::from_json(r));
    s.summary_plan = ContentPlan::from_json(j.at("summary_plan"));
    for (const auto& p : j.at("input_plans")) s.input_plans.push_back(ContentPlan::from_json(p));
    return s;
  }
};

// ---------------------------------------------------------------------------
// Candidate filter.

inline bool has_only_allowed_chars(std::string_view text) {
  for (const auto& ch : utf8_chars(text)) {
    char32_t cp = utf8_codepoint(ch);
    if (!(is_alnum(cp) || is_space(cp) || is_punct(cp))) return false;
  }
  return true;
}

// Case-insensitive whole-word match against {i, me, my, mine, myself}.
inline bool has_first_person_singular(std::string_view text) {
  static const std::set<std::string> kPronouns = {"i", "me", "my", "mine", "myself"};
  std::string word;
  auto flush = [&]() {
    bool hit = kPronouns.count(to_lower_ascii(word)) > 0;
    word.clear();
    return hit;
  };
  for (const auto& ch : utf8_chars(text)) {
    if (is_alnum(utf8_codepoint(ch))) {
      word += ch;
    } else if (flush()) {
      return true;
    }
  }
  return flush();
}

inline std::vector<ReviewRecord> filter_candidates(const std::vector<ReviewRecord>& corpus,
                                                   const SynthesisConfig& config,
                                                   const Vocabulary& vocab) {
  config.validate();
  std::map<std::string, int> per_entity;
  for (const auto& r : corpus) ++per_entity[r.entity_id];
  std::vector<ReviewRecord> out;
  for (const auto& r : corpus) {
    if (per_entity[r.entity_id] - 1 < config.n_reviews) continue;
    if (!has_only_allowed_chars(r.text)) continue;
    if (config.forbid_first_person && has_first_person_singular(r.text)) continue;
    auto n = static_cast<int>(tokenize(r.text, vocab).size());
    if (n < config.min_len || n > config.max_len) continue;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dirichlet sampling.

// Gamma(shape, 1) draw returned as its logarithm. Shapes below one use
// Gamma(a) = Gamma(a + 1) · U^(1/a), kept in log space so tiny shapes do not
// underflow to zero.
inline double log_gamma_sample(double shape, std::mt19937_64& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double uu = u(rng);
  while (uu <= 0.0) uu = u(rng);
  return std::log(g(rng)) + std::log(uu) / shape;
}

// One draw from Dirichlet(max(alpha · base, floor)).
inline Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& base, double alpha, double floor,
                                        std::mt19937_64& rng) {
  if (!(alpha > 0.0)) throw ValidationError("dirichlet: alpha must be > 0");
  if (!(floor > 0.0)) throw ValidationError("dirichlet: floor must be > 0");
  Eigen::VectorXd logs(base.size());
  for (Eigen::Index i = 0; i < base.size(); ++i)
    logs(i) = log_gamma_sample(std::max(alpha * base(i), floor), rng);
  double mx = logs.maxCoeff();
  Eigen::VectorXd p = (logs.array() - mx).exp().matrix();
  return p / p.sum();
}

inline std::vector<ContentPlan> sample_plan_variants(const ContentPlan& plan, double alpha_a,
                                                     double alpha_s, int n, std::mt19937_64& rng,
                                                     double floor = 1e-3) {
  if (n < 0) throw ValidationError("sample_plan_variants: n must be >= 0");
  std::vector<ContentPlan> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ContentPlan v;
    v.aspect = sample_dirichlet(plan.aspect, alpha_a, floor, rng);
    v.sentiment = sample_dirichlet(plan.sentiment, alpha_s, floor, rng);
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distances.

inline double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ValidationError("hellinger: length mismatch");
  return (p.cwiseMax(0.0).cwiseSqrt() - q.cwiseMax(0.0).cwiseSqrt()).norm() / std::sqrt(2.0);
}

inline double plan_distance(const ContentPlan& a, const ContentPlan& b) {
  return 0.5 * (hellinger(a.aspect, b.aspect) + hellinger(a.sentiment, b.sentiment));
}

// ---------------------------------------------------------------------------
// Plan index and nearest neighbour.

struct IndexedReview {
  ReviewRecord record;
  ContentPlan plan;
};

class PlanIndex {
 public:
  void add(ReviewRecord record, ContentPlan plan) {
    plan.validate();
    auto& pool = by_entity_[record.entity_id];
    for (const auto& e : pool)
      if (e.record.review_id == record.review_id)
        throw ValidationError("plan index: duplicate review_id " + record.review_id);
    IndexedReview entry{std::move(record), std::move(plan)};
    auto pos = std::lower_bound(pool.begin(), pool.end(), entry.record.review_id,
                                [](const IndexedReview& e, const std::string& id) {
                                  return e.record.review_id < id;
                                });
    pool.insert(pos, std::move(entry));
  }

  // Entries sorted by review_id; empty when the entity is unknown.
  const std::vector<IndexedReview>& pool(const std::string& entity_id) const {
    static const std::vector<IndexedReview> kEmpty;
    auto it = by_entity_.find(entity_id);
    return it == by_entity_.end() ? kEmpty : it->second;
  }

  const IndexedReview* find(const std::string& entity_id, const std::string& review_id) const {
    for (const auto& e : pool(entity_id))
      if (e.record.review_id == review_id) return &e;
    return nullptr;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, v] : by_entity_) n += v.size();
    return n;
  }

  const std::map<std::string, std::vector<IndexedReview>>& entities() const { return by_entity_; }

 private:
  std::map<std::string, std::vector<IndexedReview>> by_entity_;
};

inline PlanIndex build_plan_index(const std::vector<ReviewRecord>& corpus,
                                  const induction::InductionModel& model, const Vocabulary& vocab) {
  PlanIndex index;
  for (const auto& r : corpus) {
    auto tokens = tokenize(r.text, vocab);
    if (tokens.empty()) {
      log_warn("review has no tokens; left out of the plan index", "review_id", r.review_id);
      continue;
    }
    index.add(r, induction::infer_plan(tokens, model));
  }
  return index;
}

// Strict `<` over a pool sorted by review_id keeps the smallest id on ties.
inline const IndexedReview& nearest_review(const ContentPlan& query, const std::string& entity_id,
                                           const PlanIndex& index,
                                           const std::set<std::string>& exclude) {
  const IndexedReview* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : index.pool(entity_id)) {
    if (exclude.count(e.record.review_id)) continue;
    double d = plan_distance(query, e.plan);
    if (!best || d < best_d) {
      best = &e;
      best_d = d;
    }
  }
  if (!best) throw ValidationError("nearest_review: no candidate reviews left for entity " + entity_id);
  return *best;
}

// ---------------------------------------------------------------------------
// Dataset construction.

// Builds one instance around `summary`, or returns false when the entity
// cannot supply N distinct inputs.
inline bool build_instance(const IndexedReview& summary, const PlanIndex& index,
                           const SynthesisConfig& config, std::mt19937_64& rng,
                           SyntheticInstance& out) {
  const auto& pool = index.pool(summary.record.entity_id);
  if (static_cast<int>(pool.size()) - 1 < config.n_reviews) return false;
  out = SyntheticInstance{summary.record, {}, summary.plan, {}};
  std::set<std::string> exclude = {summary.record.review_id};
  if (config.sampling == SamplingMode::kRandom) {
    std::vector<const IndexedReview*> others;
    for (const auto& e : pool)
      if (e.record.review_id != summary.record.review_id) others.push_back(&e);
    for (int k = 0; k < config.n_reviews; ++k) {
      std::uniform_int_distribution<std::size_t> d(static_cast<std::size_t>(k), others.size() - 1);
      std::swap(others[static_cast<std::size_t>(k)], others[d(rng)]);
      out.inputs.push_back(others[static_cast<std::size_t>(k)]->record);
      out.input_plans.push_back(others[static_cast<std::size_t>(k)]->plan);
    }
    return true;
  }
  auto variants = sample_plan_variants(summary.plan, config.alpha_a, config.alpha_s,
                                       config.n_reviews, rng, config.epsilon_floor);
  for (const auto& v : variants) {
    const auto& match = nearest_review(v, summary.record.entity_id, index, exclude);
    exclude.insert(match.record.review_id);
    out.inputs.push_back(match.record);
    out.input_plans.push_back(match.plan);
  }
  return true;
}

// Draws candidate summaries uniformly (with replacement across instances)
// until `dataset_size` instances exist. Draw k uses its own stream derived
// from (seed, k).
inline std::vector<SyntheticInstance> build_dataset(const std::vector<ReviewRecord>& candidates,
                                                    const PlanIndex& index,
                                                    const SynthesisConfig& config) {
  config.validate();
  std::vector<const IndexedReview*> usable;
  for (const auto& c : candidates) {
    const auto* e = index.find(c.entity_id, c.review_id);
    if (!e) {
      log_warn("candidate missing from plan index; skipped", "review_id", c.review_id);
      continue;
    }
    usable.push_back(e);
  }
  std::vector<SyntheticInstance> out;
  if (config.dataset_size == 0) return out;
  if (usable.empty()) throw ValidationError("build_dataset: no candidate summaries passed the filter");
  const long max_draws = 20L * config.dataset_size + 100;
  for (long k = 0; k < max_draws && static_cast<int>(out.size()) < config.dataset_size; ++k) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(k)));
    std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
    const IndexedReview& summary = *usable[pick(rng)];
    SyntheticInstance inst;
    if (!build_instance(summary, index, config, rng, inst)) {
      log_warn("entity has too few reviews for N inputs; candidate skipped", "review_id",
               summary.record.review_id, "n_reviews", config.n_reviews);
      continue;
    }
    out.push_back(std::move(inst));
  }
  if (static_cast<int>(out.size()) < config.dataset_size)
    log_warn("dataset smaller than requested", "built", out.size(), "requested", config.dataset_size);
  return out;
}

inline void save_dataset(const std::filesystem::path& path, const std::vector<SyntheticInstance>& data) {
  std::vector<json> rows;
  rows.reserve(data.size());
  for (const auto& d : data) rows.push_back(d.to_json());
  write_jsonl(path, rows);
}

inline std::vector<SyntheticInstance> load_dataset(const std::filesystem::path& path) {
  auto rows = read_jsonl(path);
  std::vector<SyntheticInstance> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      out.push_back(SyntheticInstance::from_json(rows[i]));
      out.back().validate();
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
  }
  return out;
}

}  // namespace opsum

#endif  // OPSUM_SYNTHESIS_HPP_
