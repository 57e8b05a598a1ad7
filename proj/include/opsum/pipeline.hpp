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


// Command implementations shared by the CLI and the acceptance runner. Each
// command reads its upstream artifacts from the run directory, writes its own
// artifacts, and records a manifest.

#ifndef OPSUM_PIPELINE_HPP_
#define OPSUM_PIPELINE_HPP_

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "opsum/base.hpp"
#include "opsum/corpus.hpp"
#include "opsum/desk_corpus.hpp"
#include "opsum/evaluation.hpp"
#include "opsum/induction.hpp"
#include "opsum/summarizer.hpp"
#include "opsum/synthesis.hpp"
#include "opsum/tokenizer.hpp"

namespace opsum::pipeline {

namespace fs = std::filesystem;

inline constexpr std::string_view kVersion = "0.1.0";

// Corpus handling plus the desk generator settings.
struct CorpusSection {
  CorpusConfig corpus;
  int desk_entities = 50;
  int desk_reviews_per_entity = 12;
  double test_fraction = 0.2;  // held-out entities, never seen in training
  std::uint64_t seed = 7;

  void validate() const {
    corpus.validate();
    if (desk_entities < 1) throw ValidationError("corpus.desk_entities must be >= 1");
    if (desk_reviews_per_entity < 1) throw ValidationError("corpus.desk_reviews_per_entity must be >= 1");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
      throw ValidationError("corpus.test_fraction must be in [0, 1)");
  }

  json to_json() const {
    return {{"rating_scale", to_string(corpus.rating_scale)},
            {"vocab_size", corpus.vocab_size},
            {"mask_entities", corpus.mask_entities},
            {"desk_entities", desk_entities},
            {"desk_reviews_per_entity", desk_reviews_per_entity},
            {"test_fraction", test_fraction},
            {"seed", seed}};
  }

  static CorpusSection from_json(const json& j, CorpusSection c) {
    constexpr std::string_view s = "corpus";
    check_known_keys(j, {"rating_scale", "vocab_size", "mask_entities", "desk_entities",
                         "desk_reviews_per_entity", "test_fraction", "seed"},
                     s);
    std::string scale = to_string(c.corpus.rating_scale);
    read_key(j, "rating_scale", scale, s);
    c.corpus.rating_scale = parse_rating_scale(scale);
    read_key(j, "vocab_size", c.corpus.vocab_size, s);
    read_key(j, "mask_entities", c.corpus.mask_entities, s);
    read_key(j, "desk_entities", c.desk_entities, s);
    read_key(j, "desk_reviews_per_entity", c.desk_reviews_per_entity, s);
    read_key(j, "test_fraction", c.test_fraction, s);
    read_key(j, "seed", c.seed, s);
    return c;
  }
};

inline const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> v = {"full", "random_sampling", "no_plan", "mean_fusion",
                                             "uniform_prior"};
  return v;
}

struct EvalSection {
  std::vector<double> alphas = {1.0, 10.0, 100.0};
  int alpha_samples = 300;
  std::vector<std::string> variants = known_variants();
  int ablation_seeds = 3;
  int ablation_dataset_size = 0;  // 0 keeps synthesis.dataset_size
  int ablation_epochs = 0;        // 0 keeps summarizer.max_epochs
  std::uint64_t seed = 7;  // baseline draws

  void validate() const {
    if (alphas.empty()) throw ValidationError("eval.alphas must not be empty");
    for (double a : alphas)
      if (!(a > 0.0)) throw ValidationError("eval.alphas must be > 0");
    if (alpha_samples < 1) throw ValidationError("eval.alpha_samples must be >= 1");
    if (ablation_seeds < 1) throw ValidationError("eval.ablation_seeds must be >= 1");
    if (ablation_dataset_size < 0 || ablation_epochs < 0)
      throw ValidationError("eval.ablation_dataset_size and eval.ablation_epochs must be >= 0");
    for (const auto& v : variants) {
      const auto& k = known_variants();
      if (std::find(k.begin(), k.end(), v) == k.end())
        throw ValidationError("eval.variants: unknown variant \"" + v + "\"");
    }
  }

  json to_json() const {
    return {{"alphas", alphas},
            {"alpha_samples", alpha_samples},
            {"variants", variants},
            {"ablation_seeds", ablation_seeds},
            {"ablation_dataset_size", ablation_dataset_size},
            {"ablation_epochs", ablation_epochs},
            {"seed", seed}};
  }

  static EvalSection from_json(const json& j, EvalSection c) {
    constexpr std::string_view s = "eval";
    check_known_keys(j,
                     {"alphas", "alpha_samples", "variants", "ablation_seeds", "ablation_dataset_size",
                      "ablation_epochs", "seed"},
                     s);
    read_key(j, "alphas", c.alphas, s);
    read_key(j, "alpha_samples", c.alpha_samples, s);
    read_key(j, "variants", c.variants, s);
    read_key(j, "ablation_seeds", c.ablation_seeds, s);
    read_key(j, "ablation_dataset_size", c.ablation_dataset_size, s);
    read_key(j, "ablation_epochs", c.ablation_epochs, s);
    read_key(j, "seed", c.seed, s);
    return c;
  }
};

struct RunConfig {
  std::uint64_t seed = 7;
  fs::path out_dir = "run";
  CorpusSection corpus;
  induction::InductionConfig induction;
  SynthesisConfig synthesis;
  summarizer::SummarizerConfig summarizer;
  EvalSection eval;

  // Every section seed follows the global seed.
  void set_seed(std::uint64_t s) {
    seed = s;
    corpus.seed = induction.seed = synthesis.seed = summarizer.seed = eval.seed = s;
  }

  void validate() const {
    corpus.validate();
    induction.validate();
    synthesis.validate();
    summarizer.validate();
    eval.validate();
    int k_s = num_sentiment_classes(corpus.corpus.rating_scale);
    if (induction.num_sentiments != k_s)
      throw ValidationError("induction.num_sentiments is " + std::to_string(induction.num_sentiments) +
                            " but the " + to_string(corpus.corpus.rating_scale) + " rating scale has " +
                            std::to_string(k_s) + " classes");
  }

  json to_json() const {
    return {{"seed", seed},
            {"out_dir", out_dir.string()},
            {"corpus", corpus.to_json()},
            {"induction", induction.to_json()},
            {"synthesis", synthesis.to_json()},
            {"summarizer", summarizer.to_json()},
            {"eval", eval.to_json()}};
  }

  // Sections without an explicit "seed" inherit the top-level one.
  static RunConfig from_json(const json& j) {
    check_known_keys(j, {"seed", "out_dir", "corpus", "induction", "synthesis", "summarizer", "eval"},
                     "config");
    RunConfig c;
    std::uint64_t seed = c.seed;
    read_key(j, "seed", seed, "config");
    c.set_seed(seed);
    std::string out = c.out_dir.string();
    read_key(j, "out_dir", out, "config");
    c.out_dir = out;
    auto section = [&](const char* name) { return j.contains(name) ? j.at(name) : json::object(); };
    c.corpus = CorpusSection::from_json(section("corpus"), c.corpus);
    c.induction = induction::InductionConfig::from_json(section("induction"), c.induction);
    c.synthesis = SynthesisConfig::from_json(section("synthesis"), c.synthesis);
    c.summarizer = summarizer::SummarizerConfig::from_json(section("summarizer"), c.summarizer);
    c.eval = EvalSection::from_json(section("eval"), c.eval);
    return c;
  }

  std::string hash() const { return hex64(fnv1a(to_json().dump())); }
};

// ---------------------------------------------------------------------------
// Artifact layout.

struct Artifacts {
  fs::path root;        // corpus, vocabulary, induction model, plans
  fs::path downstream;  // dataset onward; equals root except in ablation runs

  explicit Artifacts(fs::path dir) : root(dir), downstream(std::move(dir)) {}
  Artifacts(fs::path r, fs::path d) : root(std::move(r)), downstream(std::move(d)) {}

  fs::path corpus() const { return root / "corpus.jsonl"; }
  fs::path labels() const { return root / "labels.jsonl"; }
  fs::path references() const { return root / "references.jsonl"; }
  fs::path split() const { return root / "split.json"; }
  fs::path vocab() const { return root / "vocab.json"; }
  fs::path induction() const { return root / "induction"; }
  fs::path plans() const { return root / "plans.jsonl"; }
  fs::path induction_log() const { return root / "induction_log.json"; }
  fs::path alpha_csv() const { return root / "alpha_study.csv"; }
  fs::path ablation_json() const { return root / "ablation.json"; }
  fs::path ablation_csv() const { return root / "ablation.csv"; }

  fs::path dataset() const { return downstream / "dataset.jsonl"; }
  fs::path summarizer() const { return downstream / "summarizer"; }
  fs::path train_log() const { return downstream / "summarizer_log.json"; }
  fs::path summaries() const { return downstream / "summaries.jsonl"; }
  fs::path baseline() const { return downstream / "baseline.jsonl"; }
  fs::path eval_json() const { return downstream / "eval.json"; }
  fs::path eval_csv() const { return downstream / "eval.csv"; }
  fs::path baseline_eval_json() const { return downstream / "baseline_eval.json"; }

  fs::path manifest(std::string_view command) const {
    return downstream / "manifests" / (std::string(command) + ".json");
  }
};

// Missing upstream artifacts name the command that produces them.
inline void require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path))
    throw ValidationError("missing " + path.string() + "; run `opsum " + std::string(producer) + "` first");
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ValidationError("cannot use output directory " + dir.string() +
                          (ec ? ": " + ec.message() : ": not a directory"));
}

// Times a command and writes its manifest on success.
class CommandScope {
 public:
  CommandScope(std::string command, const RunConfig& config, const Artifacts& art)
      : command_(std::move(command)), config_(config), art_(art), start_(std::chrono::steady_clock::now()) {
    config_.validate();
    ensure_dir(art_.root);
    ensure_dir(art_.downstream);
    log_info("command start", "command", command_, "seed", config_.seed);
  }

  void artifact(const std::string& name, const fs::path& path) { artifacts_[name] = path.string(); }

  json finish(json extra = json::object()) {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"command", command_},          {"config_hash", config_.hash()},
              {"code_version", kVersion},     {"seed", config_.seed},
              {"wall_time_s", secs},          {"artifacts", artifacts_},
              {"config", config_.to_json()}};
    if (!extra.empty()) m["results"] = std::move(extra);
    ensure_dir(art_.manifest(command_).parent_path());
    write_file_atomic(art_.manifest(command_), m.dump(2) + "\n");
    log_info("command done", "command", command_, "wall_time_s", secs);
    return m;
  }

 private:
  std::string command_;
  const RunConfig& config_;
  const Artifacts& art_;
  std::chrono::steady_clock::time_point start_;
  json artifacts_ = json::object();
};

// ---------------------------------------------------------------------------
// Shared loaders.

struct Split {
  std::set<std::string> train, test;

  json to_json() const { return {{"train", train}, {"test", test}}; }
  static Split from_json(const json& j) {
    return {j.at("train").get<std::set<std::string>>(), j.at("test").get<std::set<std::string>>()};
  }
};

inline Split load_split(const Artifacts& art) {
  require(art.split(), "train-induce");
  return Split::from_json(json::parse(read_file(art.split())));
}

// Corpus as the models see it: entity names masked when configured.
inline std::vector<ReviewRecord> model_records(const RunConfig& c, const Artifacts& art) {
  require(art.corpus(), "gen-corpus");
  auto records = load_corpus(art.corpus(), c.corpus.corpus);
  if (c.corpus.corpus.mask_entities) {
    for (auto& r : records) r.text = mask_entity(r.text, r.display_name());
  }
  return records;
}

inline Vocabulary load_vocab(const Artifacts& art) {
  require(art.vocab(), "train-induce");
  return Vocabulary::load(art.vocab());
}

inline induction::InductionModel load_induction(const Artifacts& art) {
  require(art.induction() / "meta.json", "train-induce");
  return induction::InductionModel::load(art.induction());
}

inline PlanIndex load_plan_index(const std::vector<ReviewRecord>& records, const Artifacts& art) {
  require(art.plans(), "train-induce");
  std::map<std::string, ContentPlan> plans;
  for (const auto& j : read_jsonl(art.plans()))
    plans[j.at("review_id").get<std::string>()] = ContentPlan::from_json(j);
  PlanIndex index;
  for (const auto& r : records) {
    auto it = plans.find(r.review_id);
    if (it != plans.end()) index.add(r, it->second);
  }
  return index;
}

// ---------------------------------------------------------------------------
// Commands.

inline json cmd_gen_corpus(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("gen-corpus", c, art);
  auto desk = generate_desk_corpus(c.corpus.desk_entities, c.corpus.desk_reviews_per_entity, c.corpus.seed);
  save_corpus(art.corpus(), desk.records);
  save_desk_labels(art.labels(), desk.labels);
  save_references(art.references(), desk.references);
  scope.artifact("corpus", art.corpus());
  scope.artifact("labels", art.labels());
  scope.artifact("references", art.references());
  return scope.finish({{"records", desk.records.size()}});
}

inline json cmd_train_induce(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("train-induce", c, art);
  auto records = model_records(c, art);
  if (records.empty()) throw ValidationError("train-induce: corpus is empty");
  auto es = split_entities(records, 0.0, c.corpus.test_fraction, c.corpus.seed);
  Split split{es.train, es.test};
  auto train = select_entities(records, split.train);

  std::vector<std::string> texts;
  for (const auto& r : train) texts.push_back(r.text);
  Vocabulary vocab = train_tokenizer(texts, c.corpus.corpus.vocab_size);

  std::vector<induction::InductionExample> examples;
  for (const auto& r : train) {
    auto tokens = tokenize(r.text, vocab);
    if (tokens.empty()) continue;
    examples.push_back({std::move(tokens), rating_to_label(r.rating, c.corpus.corpus.rating_scale)});
  }
  auto res = induction::train_induction(examples, c.induction, vocab.size());

  std::vector<json> plans;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    auto tokens = tokenize(r.text, vocab);
    if (tokens.empty()) {
      ++skipped;
      continue;
    }
    json row = induction::infer_plan(tokens, res.model).to_json();
    row["review_id"] = r.review_id;
    row["entity_id"] = r.entity_id;
    plans.push_back(std::move(row));
  }
  if (skipped) log_warn("reviews without tokens left out of the plans file", "count", skipped);

  write_file_atomic(art.split(), split.to_json().dump(1) + "\n");
  vocab.save(art.vocab());
  res.model.save(art.induction(), vocab.hash());
  write_jsonl(art.plans(), plans);
  json log = {{"initial_loss", res.initial.total},
              {"final_loss", res.final.total},
              {"dev_recon", res.dev_recon},
              {"best_epoch", res.best_epoch},
              {"step_losses", res.step_losses}};
  write_file_atomic(art.induction_log(), log.dump() + "\n");
  for (auto [name, path] : {std::pair{"split", art.split()}, {"vocab", art.vocab()},
                            {"induction", art.induction()}, {"plans", art.plans()},
                            {"induction_log", art.induction_log()}})
    scope.artifact(name, path);
  return scope.finish({{"train_reviews", examples.size()}, {"plans", plans.size()},
                       {"best_epoch", res.best_epoch}});
}

inline std::vector<ReviewRecord> training_records(const RunConfig& c, const Artifacts& art) {
  return select_entities(model_records(c, art), load_split(art).train);
}

inline json cmd_synthesize(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("synthesize", c, art);
  auto train = training_records(c, art);
  auto vocab = load_vocab(art);
  auto index = load_plan_index(train, art);
  auto candidates = filter_candidates(train, c.synthesis, vocab);
  log_info("candidate summaries", "count", candidates.size(), "reviews", train.size());
  auto data = build_dataset(candidates, index, c.synthesis);
  save_dataset(art.dataset(), data);
  scope.artifact("dataset", art.dataset());
  return scope.finish({{"candidates", candidates.size()}, {"instances", data.size()}});
}

inline json cmd_train_sum(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("train-sum", c, art);
  require(art.dataset(), "synthesize");
  auto data = load_dataset(art.dataset());
  if (data.empty()) throw ValidationError("train-sum: " + art.dataset().string() + " is empty");
  auto vocab = load_vocab(art);
  auto ind = load_induction(art);
  auto prior = summarizer::make_prior(c.summarizer, data, vocab);
  auto examples = summarizer::prepare_examples(data, ind, vocab, c.summarizer, prior);
  auto res = summarizer::train_summarizer(examples, c.summarizer, ind);
  res.model.save(art.summarizer(), vocab.hash());
  json log = {{"initial_loss", res.initial_loss},
              {"epoch_loss", res.epoch_loss},
              {"dev_accuracy", res.dev_accuracy},
              {"best_epoch", res.best_epoch},
              {"prior_degraded", prior.degraded()},
              {"step_losses", res.step_losses}};
  write_file_atomic(art.train_log(), log.dump() + "\n");
  scope.artifact("summarizer", art.summarizer());
  scope.artifact("summarizer_log", art.train_log());
  return scope.finish({{"instances", examples.size()}, {"best_epoch", res.best_epoch},
                       {"steps", res.step_losses.size()}});
}

// Review groups to summarize: consecutive chunks of N reviews per entity. An
// entity with fewer than N reviews forms one smaller group; a trailing
// partial chunk is dropped.
inline std::vector<std::vector<ReviewRecord>> input_groups(const std::vector<ReviewRecord>& records, int n) {
  std::vector<std::vector<ReviewRecord>> out;
  for (const auto& [entity, idx] : group_by_entity(records)) {
    if (static_cast<int>(idx.size()) < n) {
      std::vector<ReviewRecord> g;
      for (auto i : idx) g.push_back(records[i]);
      out.push_back(std::move(g));
      continue;
    }
    for (std::size_t s = 0; s + static_cast<std::size_t>(n) <= idx.size(); s += static_cast<std::size_t>(n)) {
      std::vector<ReviewRecord> g;
      for (std::size_t k = s; k < s + static_cast<std::size_t>(n); ++k) g.push_back(records[idx[k]]);
      out.push_back(std::move(g));
    }
  }
  return out;
}

// `input` overrides the held-out split of the run corpus.
inline json cmd_summarize(const RunConfig& c, const Artifacts& art, const std::optional<fs::path>& input = {}) {
  CommandScope scope("summarize", c, art);
  std::vector<ReviewRecord> originals;
  if (input) {
    originals = load_corpus(*input, c.corpus.corpus);
  } else {
    require(art.corpus(), "gen-corpus");
    originals = select_entities(load_corpus(art.corpus(), c.corpus.corpus), load_split(art).test);
  }
  if (originals.empty()) throw ValidationError("summarize: no input reviews");
  auto vocab = load_vocab(art);
  auto ind = load_induction(art);
  require(art.summarizer() / "meta.json", "train-sum");
  auto model = summarizer::SummarizerModel::load(art.summarizer());
  if (model.vocab_size != vocab.size() || model.plan_dim != ind.half())
    throw ValidationError("summarize: summarizer checkpoint does not match the vocabulary or induction model");

  std::vector<SummaryRecord> out;
  for (const auto& group : input_groups(originals, c.synthesis.n_reviews)) {
    std::vector<TokenSeq> tokens;
    SummaryRecord rec;
    rec.entity_id = group.front().entity_id;
    for (const auto& r : group) {
      std::string text = c.corpus.corpus.mask_entities ? mask_entity(r.text, r.display_name()) : r.text;
      auto t = tokenize(text, vocab);
      if (t.empty()) continue;
      tokens.push_back(std::move(t));
      rec.inputs.push_back(r.review_id);
    }
    if (tokens.empty()) continue;
    auto s = summarizer::summarize(tokens, ind, model);
    const std::string name = c.corpus.corpus.mask_entities ? group.front().display_name() : "";
    rec.summary_text = summarizer::summary_text(s.tokens, vocab, name);
    rec.plan = s.plan;
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw ValidationError("summarize: every input review was empty after tokenization");
  save_summaries(art.summaries(), out);
  save_summaries(art.baseline(), random_input_baseline(out, originals, c.eval.seed));
  scope.artifact("summaries", art.summaries());
  scope.artifact("baseline", art.baseline());
  return scope.finish({{"summaries", out.size()}});
}

struct EvalOutcome {
  EvalReport model;
  std::optional<EvalReport> baseline;
};

inline EvalOutcome evaluate_outputs(const RunConfig& c, const Artifacts& art,
                                    const std::optional<fs::path>& references = {}) {
  require(art.summaries(), "summarize");
  fs::path refs = references.value_or(art.references());
  require(refs, "gen-corpus");
  EvalOutcome out{evaluate_run(art.summaries(), refs), std::nullopt};
  if (fs::exists(art.baseline())) out.baseline = evaluate_run(art.baseline(), refs);
  (void)c;
  return out;
}

inline json cmd_evaluate(const RunConfig& c, const Artifacts& art, const std::optional<fs::path>& references = {}) {
  CommandScope scope("evaluate", c, art);
  auto res = evaluate_outputs(c, art, references);
  write_file_atomic(art.eval_json(), res.model.to_json().dump(1) + "\n");
  write_file_atomic(art.eval_csv(), res.model.csv());
  scope.artifact("eval", art.eval_json());
  scope.artifact("eval_csv", art.eval_csv());
  auto means = [](const EvalReport& r) {
    return json{{"r1", r.means.r1.f1}, {"r2", r.means.r2.f1}, {"rl", r.means.rl.f1}};
  };
  json results = {{"model", means(res.model)}};
  if (res.baseline) {
    write_file_atomic(art.baseline_eval_json(), res.baseline->to_json().dump(1) + "\n");
    scope.artifact("baseline_eval", art.baseline_eval_json());
    results["baseline"] = means(*res.baseline);
  }
  return scope.finish(results);
}

inline json cmd_alpha_study(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("alpha-study", c, art);
  auto train = training_records(c, art);
  auto vocab = load_vocab(art);
  auto index = load_plan_index(train, art);
  auto candidates = filter_candidates(train, c.synthesis, vocab);
  auto rows = alpha_study(candidates, index, c.eval.alphas, c.eval.alpha_samples, c.synthesis);
  write_file_atomic(art.alpha_csv(), alpha_csv(rows));
  scope.artifact("alpha_study", art.alpha_csv());
  json r = json::array();
  for (const auto& row : rows) r.push_back({{"alpha", row.alpha}, {"r1", row.r1}, {"instances", row.instances}});
  return scope.finish({{"rows", r}});
}

// ---------------------------------------------------------------------------
// Ablations.

inline RunConfig variant_config(const RunConfig& base, const std::string& variant, int seed_index) {
  RunConfig c = base;
  const std::uint64_t s = base.seed + static_cast<std::uint64_t>(seed_index);
  c.synthesis.seed = c.summarizer.seed = c.eval.seed = s;
  if (base.eval.ablation_dataset_size > 0) c.synthesis.dataset_size = base.eval.ablation_dataset_size;
  if (base.eval.ablation_epochs > 0) c.summarizer.max_epochs = base.eval.ablation_epochs;
  if (variant == "random_sampling") c.synthesis.sampling = SamplingMode::kRandom;
  else if (variant == "no_plan") c.summarizer.use_plan = false;
  else if (variant == "mean_fusion") c.summarizer.fusion = "mean";
  else if (variant == "uniform_prior") c.summarizer.prior = "uniform";
  else if (variant != "full") throw ValidationError("unknown ablation variant \"" + variant + "\"");
  return c;
}

struct AblationRow {
  std::string variant;
  std::vector<RougeScore> per_seed;  // F1 means on the held-out entities
  RougeScore mean;
};

inline std::vector<AblationRow> run_ablation(const RunConfig& c, const Artifacts& art) {
  std::vector<AblationRow> rows;
  for (const auto& v : c.eval.variants) {
    AblationRow row{v, {}, {}};
    for (int k = 0; k < c.eval.ablation_seeds; ++k) {
      RunConfig vc = variant_config(c, v, k);
      Artifacts va(art.root, art.root / "ablation" / v / ("seed" + std::to_string(k)));
      log_info("ablation run", "variant", v, "seed_index", k);
      cmd_synthesize(vc, va);
      cmd_train_sum(vc, va);
      cmd_summarize(vc, va);
      cmd_evaluate(vc, va);
      row.per_seed.push_back(evaluate_outputs(vc, va).model.means);
    }
    std::vector<InstanceScore> tmp;
    for (const auto& s : row.per_seed) tmp.push_back({v, s});
    row.mean = mean_scores(tmp);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json ablation_to_json(const std::vector<AblationRow>& rows) {
  const AblationRow* full = nullptr;
  for (const auto& r : rows)
    if (r.variant == "full") full = &r;
  json out = json::array();
  for (const auto& r : rows) {
    json seeds = json::array();
    for (const auto& s : r.per_seed) seeds.push_back({{"r1", s.r1.f1}, {"r2", s.r2.f1}, {"rl", s.rl.f1}});
    json j = {{"variant", r.variant},
              {"per_seed", seeds},
              {"mean", {{"r1", r.mean.r1.f1}, {"r2", r.mean.r2.f1}, {"rl", r.mean.rl.f1}}}};
    if (full) {
      j["delta_vs_full"] = {{"r1", r.mean.r1.f1 - full->mean.r1.f1},
                            {"r2", r.mean.r2.f1 - full->mean.r2.f1},
                            {"rl", r.mean.rl.f1 - full->mean.rl.f1}};
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "variant,seed,r1,r2,rl\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.per_seed.size(); ++k)
      os << r.variant << ',' << k << ',' << r.per_seed[k].r1.f1 << ',' << r.per_seed[k].r2.f1 << ','
         << r.per_seed[k].rl.f1 << '\n';
    os << r.variant << ",mean," << r.mean.r1.f1 << ',' << r.mean.r2.f1 << ',' << r.mean.rl.f1 << '\n';
  }
  return os.str();
}

inline json cmd_ablate(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("ablate", c, art);
  load_split(art);
  load_induction(art);
  auto rows = run_ablation(c, art);
  json j = ablation_to_json(rows);
  write_file_atomic(art.ablation_json(), j.dump(1) + "\n");
  write_file_atomic(art.ablation_csv(), ablation_csv(rows));
  scope.artifact("ablation", art.ablation_json());
  scope.artifact("ablation_csv", art.ablation_csv());
  return scope.finish({{"variants", j}});
}

inline json cmd_pipeline(const RunConfig& c, const Artifacts& art) {
  CommandScope scope("pipeline", c, art);
  cmd_gen_corpus(c, art);
  cmd_train_induce(c, art);
  cmd_synthesize(c, art);
  cmd_train_sum(c, art);
  cmd_summarize(c, art);
  json ev = cmd_evaluate(c, art);
  for (std::string_view cmd : {"gen-corpus", "train-induce", "synthesize", "train-sum", "summarize", "evaluate"})
    scope.artifact(std::string(cmd), art.manifest(cmd));
  return scope.finish(ev.value("results", json::object()));
}

}  // namespace opsum::pipeline

#endif  // OPSUM_PIPELINE_HPP_
