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


#ifndef OPSUM_EVALUATION_HPP_
#define OPSUM_EVALUATION_HPP_

#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opsum/base.hpp"
#include "opsum/corpus.hpp"
#include "opsum/desk_corpus.hpp"
#include "opsum/plan.hpp"
#include "opsum/rouge.hpp"
#include "opsum/synthesis.hpp"

namespace opsum {

// One line of a summaries file.
struct SummaryRecord {
  std::string entity_id;
  std::string summary_text;
  ContentPlan plan;
  std::vector<std::string> inputs;  // review ids the summary was generated from

  json to_json() const {
    json j = {{"entity_id", entity_id}, {"summary_text", summary_text}};
    if (plan.aspect.size() > 0) j["plan"] = plan.to_json();
    if (!inputs.empty()) j["inputs"] = inputs;
    return j;
  }

  static SummaryRecord from_json(const json& j) {
    SummaryRecord r;
    r.entity_id = j.at("entity_id").get<std::string>();
    r.summary_text = j.at("summary_text").get<std::string>();
    if (j.contains("plan")) r.plan = ContentPlan::from_json(j.at("plan"));
    if (j.contains("inputs")) r.inputs = j.at("inputs").get<std::vector<std::string>>();
    return r;
  }
};

inline void save_summaries(const std::filesystem::path& path, const std::vector<SummaryRecord>& rows) {
  std::vector<json> out;
  for (const auto& r : rows) out.push_back(r.to_json());
  write_jsonl(path, out);
}

inline std::vector<SummaryRecord> load_summaries(const std::filesystem::path& path) {
  std::vector<SummaryRecord> out;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(SummaryRecord::from_json(j));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": record " + std::to_string(line) + ": " + e.what(), line);
    }
  }
  return out;
}

struct InstanceScore {
  std::string entity_id;
  RougeScore score;
};

struct EvalReport {
  std::vector<InstanceScore> per_instance;
  RougeScore means;
  json meta = json::object();

  json to_json() const {
    json rows = json::array();
    for (const auto& s : per_instance) {
      json j = s.score.to_json();
      j["entity_id"] = s.entity_id;
      rows.push_back(j);
    }
    json m = meta;
    m["rouge"] = kRougeConvention;
    return {{"config", m}, {"per_instance", rows}, {"means", means.to_json()}};
  }

  // entity_id,r1,r2,rl (F1).
  std::string csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "entity_id,r1,r2,rl\n";
    for (const auto& s : per_instance)
      os << s.entity_id << ',' << s.score.r1.f1 << ',' << s.score.r2.f1 << ',' << s.score.rl.f1 << '\n';
    return os.str();
  }
};

inline RougeScore mean_scores(const std::vector<InstanceScore>& rows) {
  RougeScore m;
  if (rows.empty()) return m;
  auto acc = [](PRF& a, const PRF& b) {
    a.p += b.p;
    a.r += b.r;
    a.f1 += b.f1;
  };
  for (const auto& s : rows) {
    acc(m.r1, s.score.r1);
    acc(m.r2, s.score.r2);
    acc(m.rl, s.score.rl);
  }
  const double n = static_cast<double>(rows.size());
  for (PRF* p : {&m.r1, &m.r2, &m.rl}) {
    p->p /= n;
    p->r /= n;
    p->f1 /= n;
  }
  return m;
}

// Scores every summary against the reference set of its entity.
inline EvalReport evaluate_summaries(const std::vector<SummaryRecord>& summaries,
                                     const std::vector<ReferenceSet>& refs) {
  if (summaries.empty()) throw ValidationError("evaluate: no summaries");
  std::map<std::string, const ReferenceSet*> by_entity;
  for (const auto& r : refs) by_entity[r.entity_id] = &r;
  std::string missing;
  for (const auto& s : summaries) {
    if (!by_entity.count(s.entity_id)) missing += (missing.empty() ? "" : ", ") + s.entity_id;
  }
  if (!missing.empty()) throw ValidationError("evaluate: no references for entity ids: " + missing);
  EvalReport rep;
  for (const auto& s : summaries) {
    const auto& r = *by_entity[s.entity_id];
    rep.per_instance.push_back({s.entity_id, score_instance(s.summary_text, r.references)});
  }
  rep.means = mean_scores(rep.per_instance);
  return rep;
}

inline EvalReport evaluate_run(const std::filesystem::path& summaries,
                               const std::filesystem::path& references) {
  auto rep = evaluate_summaries(load_summaries(summaries), load_references(references));
  rep.meta["summaries"] = summaries.filename().string();
  rep.meta["references"] = references.filename().string();
  return rep;
}

// Baseline: one uniformly drawn input review per referenced entity.
inline std::vector<SummaryRecord> random_review_baseline(const std::vector<ReviewRecord>& records,
                                                         const std::vector<ReferenceSet>& refs,
                                                         std::uint64_t seed) {
  auto groups = group_by_entity(records);
  std::vector<SummaryRecord> out;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    auto it = groups.find(refs[k].entity_id);
    if (it == groups.end()) continue;
    std::mt19937_64 rng(derive_seed(seed, k));
    std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
    out.push_back({refs[k].entity_id, records[it->second[pick(rng)]].text, {}});
  }
  return out;
}

// Baseline matched to a set of generated summaries: for each one, a review drawn
// uniformly from that summary's own inputs.
inline std::vector<SummaryRecord> random_input_baseline(const std::vector<SummaryRecord>& summaries,
                                                        const std::vector<ReviewRecord>& records,
                                                        std::uint64_t seed) {
  std::map<std::string, const ReviewRecord*> by_id;
  for (const auto& r : records) by_id[r.review_id] = &r;
  std::vector<SummaryRecord> out;
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const auto& s = summaries[k];
    if (s.inputs.empty()) throw ValidationError("baseline: summary " + std::to_string(k) + " lists no inputs");
    std::mt19937_64 rng(derive_seed(seed, k));
    std::uniform_int_distribution<std::size_t> pick(0, s.inputs.size() - 1);
    const auto& id = s.inputs[pick(rng)];
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("baseline: unknown input review " + id);
    out.push_back({s.entity_id, it->second->text, {}, {id}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dirichlet concentration study.

struct AlphaRow {
  double alpha = 0.0;
  double r1 = 0.0, r2 = 0.0, rl = 0.0;  // mean input-vs-summary F1
  int instances = 0;
};

// For each α (applied to both α_a and α_s) builds `samples` instances and
// averages ROUGE F1 between every input review and the instance summary.
inline std::vector<AlphaRow> alpha_study(const std::vector<ReviewRecord>& candidates, const PlanIndex& index,
                                         const std::vector<double>& alphas, int samples,
                                         SynthesisConfig base) {
  std::vector<AlphaRow> rows;
  for (double alpha : alphas) {
    SynthesisConfig c = base;
    c.alpha_a = c.alpha_s = alpha;
    c.dataset_size = samples;
    c.sampling = SamplingMode::kDirichlet;
    auto data = build_dataset(candidates, index, c);
    AlphaRow row{alpha, 0, 0, 0, static_cast<int>(data.size())};
    double n = 0;
    for (const auto& inst : data) {
      auto sw = rouge_tokens(inst.summary.text);
      for (const auto& in : inst.inputs) {
        auto s = rouge(rouge_tokens(in.text), sw);
        row.r1 += s.r1.f1;
        row.r2 += s.r2.f1;
        row.rl += s.rl.f1;
        n += 1;
      }
    }
    if (n > 0) {
      row.r1 /= n;
      row.r2 /= n;
      row.rl /= n;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string alpha_csv(const std::vector<AlphaRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "alpha,r1,r2,rl\n";
  for (const auto& r : rows) os << r.alpha << ',' << r.r1 << ',' << r.r2 << ',' << r.rl << '\n';
  return os.str();
}

}  // namespace opsum

#endif  // OPSUM_EVALUATION_HPP_
