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


// opsum command-line interface. Exit codes: 0 success, 1 invalid input or
// configuration, 2 failure during compute.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "opsum/pipeline.hpp"

namespace {

using opsum::json;
namespace pl = opsum::pipeline;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string log_level = "info";
  json patch = json::object();  // flag overrides, by section
};

// Registers a flag that writes `section.key` in the override patch.
template <typename T>
void override_opt(CLI::App* cmd, Common& common, const std::string& flag, const std::string& section,
                  const std::string& key, const std::string& help) {
  cmd->add_option_function<T>(
      flag, [&common, section, key](const T& v) { common.patch[section][key] = v; }, help);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config with per-command sections")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed for every stage (overrides config)");
  cmd->add_option("--out", c.out, "Run directory for artifacts");
  cmd->add_option("--log-level", c.log_level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));
}

void add_corpus_flags(CLI::App* cmd, Common& c) {
  override_opt<int>(cmd, c, "--entities", "corpus", "desk_entities", "Desk corpus entity count");
  override_opt<int>(cmd, c, "--reviews-per-entity", "corpus", "desk_reviews_per_entity",
                    "Desk corpus reviews per entity");
  override_opt<double>(cmd, c, "--test-fraction", "corpus", "test_fraction", "Held-out entity share");
}

void add_synthesis_flags(CLI::App* cmd, Common& c) {
  override_opt<double>(cmd, c, "--alpha-a", "synthesis", "alpha_a", "Aspect Dirichlet constant");
  override_opt<double>(cmd, c, "--alpha-s", "synthesis", "alpha_s", "Sentiment Dirichlet constant");
  override_opt<int>(cmd, c, "--n-reviews", "synthesis", "n_reviews", "Input reviews per instance");
  override_opt<int>(cmd, c, "--size", "synthesis", "dataset_size", "Target instance count");
  override_opt<int>(cmd, c, "--min-len", "synthesis", "min_len", "Candidate minimum token count");
  override_opt<int>(cmd, c, "--max-len", "synthesis", "max_len", "Candidate maximum token count");
  override_opt<std::string>(cmd, c, "--sampling", "synthesis", "sampling", "dirichlet or random");
}

void add_summarizer_flags(CLI::App* cmd, Common& c) {
  override_opt<int>(cmd, c, "--epochs", "summarizer", "max_epochs", "Maximum training epochs");
  override_opt<double>(cmd, c, "--lr", "summarizer", "lr", "Learning rate");
  override_opt<double>(cmd, c, "--delta", "summarizer", "delta", "Label-smoothing rate");
  override_opt<std::string>(cmd, c, "--fusion", "summarizer", "fusion", "injective or mean");
  override_opt<std::string>(cmd, c, "--prior", "summarizer", "prior", "unigram, uniform or external_mlm");
  override_opt<std::string>(cmd, c, "--mlm-endpoint", "summarizer", "mlm_endpoint",
                            "URL of a masked-LM service");
  override_opt<bool>(cmd, c, "--use-plan", "summarizer", "use_plan", "Condition the decoder on the plan");
}

opsum::LogLevel parse_level(const std::string& s) {
  if (s == "debug") return opsum::LogLevel::kDebug;
  if (s == "warn") return opsum::LogLevel::kWarn;
  if (s == "error") return opsum::LogLevel::kError;
  if (s == "off") return opsum::LogLevel::kOff;
  return opsum::LogLevel::kInfo;
}

json merge_patch(json base, const json& patch) {
  for (const auto& [section, fields] : patch.items()) {
    if (!base.contains(section)) base[section] = json::object();
    for (const auto& [k, v] : fields.items()) base[section][k] = v;
  }
  return base;
}

pl::RunConfig resolve(const Common& c) {
  json j = json::object();
  if (!c.config_path.empty()) {
    try {
      j = json::parse(opsum::read_file(c.config_path));
    } catch (const json::parse_error& e) {
      throw opsum::ValidationError(c.config_path + ": malformed JSON: " + e.what());
    }
  }
  auto cfg = pl::RunConfig::from_json(merge_patch(std::move(j), c.patch));
  if (c.seed) cfg.set_seed(*c.seed);
  if (c.out) cfg.out_dir = *c.out;
  cfg.validate();
  return cfg;
}

void print_results(const json& manifest) {
  if (manifest.contains("results")) std::cout << manifest["results"].dump(1) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opinion summarization through content plans: corpus, induction, synthesis, "
               "summarizer and evaluation commands"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic desk corpus, labels and references");
  add_common(gen, c);
  add_corpus_flags(gen, c);

  auto* induce = app.add_subcommand("train-induce", "Train the tokenizer and content-plan induction model");
  add_common(induce, c);
  override_opt<int>(induce, c, "--epochs", "induction", "max_epochs", "Maximum training epochs");
  override_opt<int>(induce, c, "--aspects", "induction", "num_aspects", "Number of aspects");

  auto* synth = app.add_subcommand("synthesize", "Build the synthetic review-summary dataset");
  add_common(synth, c);
  add_synthesis_flags(synth, c);

  auto* train = app.add_subcommand("train-sum", "Train the summarizer on the synthetic dataset");
  add_common(train, c);
  add_summarizer_flags(train, c);

  std::optional<std::string> input;
  auto* summ = app.add_subcommand("summarize", "Summarize held-out reviews, or the reviews in --input");
  add_common(summ, c);
  summ->add_option("--input", input, "Corpus-format JSONL of reviews to summarize")->check(CLI::ExistingFile);
  override_opt<int>(summ, c, "--beam", "summarizer", "beam_size", "Beam width");
  override_opt<int>(summ, c, "--n-reviews", "synthesis", "n_reviews", "Reviews per summary");

  std::optional<std::string> refs;
  auto* eval = app.add_subcommand("evaluate", "Score summaries and the baseline against references");
  add_common(eval, c);
  eval->add_option("--references", refs, "Reference JSONL (default: the run's references)")
      ->check(CLI::ExistingFile);

  auto* alpha = app.add_subcommand("alpha-study", "Input-vs-summary ROUGE across Dirichlet constants");
  add_common(alpha, c);
  add_synthesis_flags(alpha, c);
  override_opt<std::vector<double>>(alpha, c, "--alphas", "eval", "alphas", "Constants to compare");
  override_opt<int>(alpha, c, "--samples", "eval", "alpha_samples", "Instances per constant");

  auto* ablate = app.add_subcommand("ablate", "Train and score ablation variants over several seeds");
  add_common(ablate, c);
  add_synthesis_flags(ablate, c);
  add_summarizer_flags(ablate, c);
  override_opt<std::vector<std::string>>(ablate, c, "--variants", "eval", "variants",
                                         "Subset of full, random_sampling, no_plan, mean_fusion, uniform_prior");
  override_opt<int>(ablate, c, "--seeds", "eval", "ablation_seeds", "Seeds per variant");
  override_opt<int>(ablate, c, "--ablation-size", "eval", "ablation_dataset_size",
                    "Training instances per ablation run (0 keeps --size)");
  override_opt<int>(ablate, c, "--ablation-epochs", "eval", "ablation_epochs",
                    "Epochs per ablation run (0 keeps --epochs)");

  auto* pipe = app.add_subcommand("pipeline", "gen-corpus through evaluate in one run");
  add_common(pipe, c);
  add_corpus_flags(pipe, c);
  add_synthesis_flags(pipe, c);
  add_summarizer_flags(pipe, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    opsum::set_log_level(parse_level(c.log_level));
    pl::RunConfig cfg = resolve(c);
    pl::Artifacts art(cfg.out_dir);
    json m;
    if (*gen) m = pl::cmd_gen_corpus(cfg, art);
    else if (*induce) m = pl::cmd_train_induce(cfg, art);
    else if (*synth) m = pl::cmd_synthesize(cfg, art);
    else if (*train) m = pl::cmd_train_sum(cfg, art);
    else if (*summ) m = pl::cmd_summarize(cfg, art, input ? std::optional<std::filesystem::path>(*input) : std::nullopt);
    else if (*eval) m = pl::cmd_evaluate(cfg, art, refs ? std::optional<std::filesystem::path>(*refs) : std::nullopt);
    else if (*alpha) m = pl::cmd_alpha_study(cfg, art);
    else if (*ablate) m = pl::cmd_ablate(cfg, art);
    else if (*pipe) m = pl::cmd_pipeline(cfg, art);
    print_results(m);
    return 0;
  } catch (const opsum::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}
