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


// Plan-conditioned summarizer: mean plan aggregation, fusion of repeated
// tokens, an LSTM decoder with additive attention and a copy gate, label
// smoothing toward a prior, and beam search.

#ifndef OPSUM_SUMMARIZER_HPP_
#define OPSUM_SUMMARIZER_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "opsum/autograd.hpp"
#include "opsum/base.hpp"
#include "opsum/checkpoint.hpp"
#include "opsum/induction.hpp"
#include "opsum/optim.hpp"
#include "opsum/plan.hpp"
#include "opsum/prior.hpp"
#include "opsum/synthesis.hpp"
#include "opsum/tokenizer.hpp"

namespace opsum::summarizer {

using ag::Matrix;
using ag::Var;
using ag::Vector;

enum class FusionMode { kInjective, kMean };

inline FusionMode parse_fusion(std::string_view s) {
  if (s == "injective") return FusionMode::kInjective;
  if (s == "mean") return FusionMode::kMean;
  throw ValidationError("summarizer.fusion must be \"injective\" or \"mean\"");
}

struct SummarizerConfig {
  double delta = 0.1;          // label-smoothing rate
  int beam_size = 2;
  int max_decode_len = 96;
  int hidden = 64;             // decoder state size d
  bool use_plan = true;        // false feeds zeros in place of (d_a, d_s)
  std::string fusion = "injective";
  std::string prior = "unigram";
  std::string mlm_endpoint;    // required when prior == "external_mlm"
  double length_penalty = 0.7;
  double lr = 3e-3;
  int batch_size = 16;
  int warmup_steps = 100;
  double dropout = 0.1;
  double clip_norm = 3.0;
  int max_epochs = 20;
  int patience = 4;            // epochs without dev-accuracy gain before stopping
  double dev_fraction = 0.2;
  std::uint64_t seed = 11;

  FusionMode fusion_mode() const { return parse_fusion(fusion); }
  PriorMode prior_mode() const { return parse_prior_mode(prior); }

  void validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("summarizer." + m); };
    if (!(delta >= 0.0 && delta < 1.0)) fail("delta must be in [0, 1)");
    if (beam_size < 1) fail("beam_size must be >= 1");
    if (max_decode_len < 1) fail("max_decode_len must be >= 1");
    if (hidden < 1) fail("hidden must be >= 1");
    fusion_mode();
    if (prior_mode() == PriorMode::kExternalMlm && mlm_endpoint.empty())
      fail("mlm_endpoint is required for the external_mlm prior");
    if (!(length_penalty >= 0.0)) fail("length_penalty must be >= 0");
    if (!(lr > 0.0)) fail("lr must be > 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (warmup_steps < 0) fail("warmup_steps must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
    if (max_epochs < 0) fail("max_epochs must be >= 0");
    if (patience < 1) fail("patience must be >= 1");
    if (dev_fraction < 0.0 || dev_fraction >= 1.0) fail("dev_fraction must be in [0, 1)");
  }

  json to_json() const {
    return {{"delta", delta},         {"beam_size", beam_size},
            {"max_decode_len", max_decode_len}, {"hidden", hidden},
            {"use_plan", use_plan},   {"fusion", fusion},
            {"prior", prior},         {"mlm_endpoint", mlm_endpoint},
            {"length_penalty", length_penalty}, {"lr", lr},
            {"batch_size", batch_size}, {"warmup_steps", warmup_steps},
            {"dropout", dropout},     {"clip_norm", clip_norm},
            {"max_epochs", max_epochs}, {"patience", patience},
            {"dev_fraction", dev_fraction}, {"seed", seed}};
  }

  static SummarizerConfig from_json(const json& j) { return from_json(j, SummarizerConfig()); }
  static SummarizerConfig from_json(const json& j, SummarizerConfig c) {
    constexpr std::string_view s = "summarizer";
    check_known_keys(j, {"delta", "beam_size", "max_decode_len", "hidden", "use_plan", "fusion",
                         "prior", "mlm_endpoint", "length_penalty", "lr", "batch_size",
                         "warmup_steps", "dropout", "clip_norm", "max_epochs", "patience",
                         "dev_fraction", "seed"},
                     s);
    read_key(j, "delta", c.delta, s);
    read_key(j, "beam_size", c.beam_size, s);
    read_key(j, "max_decode_len", c.max_decode_len, s);
    read_key(j, "hidden", c.hidden, s);
    read_key(j, "use_plan", c.use_plan, s);
    read_key(j, "fusion", c.fusion, s);
    read_key(j, "prior", c.prior, s);
    read_key(j, "mlm_endpoint", c.mlm_endpoint, s);
    read_key(j, "length_penalty", c.length_penalty, s);
    read_key(j, "lr", c.lr, s);
    read_key(j, "batch_size", c.batch_size, s);
    read_key(j, "warmup_steps", c.warmup_steps, s);
    read_key(j, "dropout", c.dropout, s);
    read_key(j, "clip_norm", c.clip_norm, s);
    read_key(j, "max_epochs", c.max_epochs, s);
    read_key(j, "patience", c.patience, s);
    read_key(j, "dev_fraction", c.dev_fraction, s);
    read_key(j, "seed", c.seed, s);
    return c;
  }
};

struct SummarizerModel {
  SummarizerConfig config;
  int vocab_size = 0;
  int enc_dim = 0;   // token-state size of the induction encoder (2H)
  int plan_dim = 0;  // size of d_a and of d_s (H)
  ag::Parameter embedding;              // V x enc_dim
  ag::Parameter fuse_W1, fuse_b1;       // d x enc_dim
  ag::Parameter fuse_W2, fuse_b2;       // d x d
  ag::Parameter combine_W, combine_b;   // d x (2 plan_dim + enc_dim)
  ag::Parameter init_W, init_b;         // 2d x (2 plan_dim + d)
  ag::Parameter lstm_W, lstm_b;         // 4d x 2d
  ag::Parameter att_Wq, att_Wk, att_v;  // d x d, d x d, 1 x d
  ag::Parameter out_W, out_b;           // V x 2d
  ag::Parameter gate_W, gate_b;         // 1 x 3d

  int d() const { return config.hidden; }

  static SummarizerModel create(const SummarizerConfig& config, int vocab_size, int enc_dim,
                                int plan_dim) {
    config.validate();
    if (vocab_size <= kNumSpecials) throw ValidationError("summarizer: vocabulary too small");
    if (enc_dim < 1 || plan_dim < 1) throw ValidationError("summarizer: bad encoder sizes");
    SummarizerModel m;
    m.config = config;
    m.vocab_size = vocab_size;
    m.enc_dim = enc_dim;
    m.plan_dim = plan_dim;
    std::mt19937_64 rng(derive_seed(config.seed, 0x5a));
    const int d = config.hidden, P = 2 * plan_dim;
    auto init = [&](const char* name, int r, int c) {
      return ag::Parameter(name, ag::uniform_matrix(r, c, 0.1, rng));
    };
    m.embedding = init("embedding", vocab_size, enc_dim);
    m.fuse_W1 = init("fuse_W1", d, enc_dim);
    m.fuse_b1 = init("fuse_b1", d, 1);
    m.fuse_W2 = init("fuse_W2", d, d);
    m.fuse_b2 = init("fuse_b2", d, 1);
    m.combine_W = init("combine_W", d, P + enc_dim);
    m.combine_b = init("combine_b", d, 1);
    m.init_W = init("init_W", 2 * d, P + d);
    m.init_b = init("init_b", 2 * d, 1);
    m.lstm_W = init("lstm_W", 4 * d, 2 * d);
    m.lstm_b = init("lstm_b", 4 * d, 1);
    m.att_Wq = init("att_Wq", d, d);
    m.att_Wk = init("att_Wk", d, d);
    m.att_v = init("att_v", 1, d);
    m.out_W = init("out_W", vocab_size, 2 * d);
    m.out_b = init("out_b", vocab_size, 1);
    m.gate_W = init("gate_W", 1, 3 * d);
    m.gate_b = init("gate_b", 1, 1);
    return m;
  }

  static SummarizerModel create(const SummarizerConfig& config, const induction::InductionModel& ind) {
    return create(config, ind.vocab_size, ind.config.hidden, ind.half());
  }

  ag::ParameterRefs parameters() {
    return {&embedding, &fuse_W1, &fuse_b1, &fuse_W2, &fuse_b2, &combine_W, &combine_b,
            &init_W,    &init_b,  &lstm_W,  &lstm_b,  &att_Wq,  &att_Wk,    &att_v,
            &out_W,     &out_b,   &gate_W,  &gate_b};
  }

  json meta(const std::string& vocab_hash = "") const {
    return {{"kind", "summarizer"}, {"config", config.to_json()}, {"vocab_size", vocab_size},
            {"enc_dim", enc_dim},   {"plan_dim", plan_dim},       {"vocab_hash", vocab_hash}};
  }

  void save(const std::filesystem::path& dir, const std::string& vocab_hash = "") const {
    auto self = const_cast<SummarizerModel*>(this);
    ag::save_checkpoint(dir, self->parameters(), meta(vocab_hash));
  }

  static SummarizerModel load(const std::filesystem::path& dir) {
    json meta = ag::load_checkpoint_meta(dir);
    if (meta.value("kind", "") != "summarizer")
      throw ValidationError(dir.string() + ": not a summarizer checkpoint");
    auto m = create(SummarizerConfig::from_json(meta.at("config")), meta.at("vocab_size").get<int>(),
                    meta.at("enc_dim").get<int>(), meta.at("plan_dim").get<int>());
    ag::load_parameters(dir, m.parameters());
    return m;
  }
};

// ---------------------------------------------------------------------------
// Inputs.

inline ContentPlan aggregate_plans(std::span<const ContentPlan> plans) {
  if (plans.empty()) throw ValidationError("aggregate_plans: no plans");
  ContentPlan out{Vector::Zero(plans[0].aspect.size()), Vector::Zero(plans[0].sentiment.size())};
  for (const auto& p : plans) {
    if (p.aspect.size() != out.aspect.size() || p.sentiment.size() != out.sentiment.size())
      throw ValidationError("aggregate_plans: inconsistent plan sizes");
    out.aspect += p.aspect;
    out.sentiment += p.sentiment;
  }
  const double n = static_cast<double>(plans.size());
  out.aspect /= n;
  out.sentiment /= n;
  return out;
}

// Constant side of one instance: what the frozen induction model says about
// the input reviews.
struct SourceBundle {
  std::vector<int> unique_tokens;  // first-occurrence order
  Matrix occurrence;               // enc_dim x K: Σ (or mean) of token states per unique token
  ContentPlan plan;                // mean of the input plans
  Vector plan_input;               // [d_a; d_s], zero when the plan is switched off
};

inline SourceBundle gather_sources(std::span<const TokenSeq> reviews, std::span<const Matrix> token_states,
                                   const std::vector<ContentPlan>& plans,
                                   const induction::InductionModel& ind, FusionMode fusion,
                                   bool use_plan) {
  if (reviews.empty()) throw ValidationError("fuse_tokens: no input reviews");
  if (reviews.size() != token_states.size() || reviews.size() != plans.size())
    throw ValidationError("fuse_tokens: reviews, encodings and plans differ in count");
  SourceBundle b;
  std::unordered_map<int, int> slot;
  std::vector<Vector> sums;
  std::vector<int> counts;
  for (std::size_t r = 0; r < reviews.size(); ++r) {
    if (token_states[r].cols() != static_cast<Eigen::Index>(reviews[r].size()))
      throw ValidationError("fuse_tokens: encoding count does not match review length");
    for (std::size_t j = 0; j < reviews[r].size(); ++j) {
      int w = reviews[r][j];
      auto [it, fresh] = slot.emplace(w, static_cast<int>(b.unique_tokens.size()));
      if (fresh) {
        b.unique_tokens.push_back(w);
        sums.push_back(Vector::Zero(token_states[r].rows()));
        counts.push_back(0);
      }
      sums[static_cast<std::size_t>(it->second)] += token_states[r].col(static_cast<Eigen::Index>(j));
      ++counts[static_cast<std::size_t>(it->second)];
    }
  }
  if (b.unique_tokens.empty()) throw ValidationError("fuse_tokens: input reviews are empty");
  b.occurrence.resize(sums[0].size(), static_cast<Eigen::Index>(sums.size()));
  for (std::size_t k = 0; k < sums.size(); ++k) {
    b.occurrence.col(static_cast<Eigen::Index>(k)) =
        fusion == FusionMode::kMean ? Vector(sums[k] / counts[k]) : sums[k];
  }
  b.plan = aggregate_plans(plans);
  auto [d_a, d_s] = induction::reconstruct(b.plan, ind);
  b.plan_input = Vector::Zero(d_a.size() + d_s.size());
  if (use_plan) b.plan_input << d_a, d_s;
  return b;
}

// Runs the frozen induction encoder over the inputs, then gathers.
inline SourceBundle prepare_source(std::span<const TokenSeq> reviews, const induction::InductionModel& ind,
                                   const SummarizerConfig& config) {
  std::vector<Matrix> states;
  std::vector<ContentPlan> plans;
  for (const auto& r : reviews) {
    if (r.empty()) throw ValidationError("summarizer: input review with no tokens");
    auto a = induction::analyze(r, ind);
    states.push_back(std::move(a.token_states));
    plans.push_back(std::move(a.plan));
  }
  return gather_sources(reviews, states, plans, ind, config.fusion_mode(), config.use_plan);
}

// ---------------------------------------------------------------------------
// Graph builders.

struct SourceGraph {
  Var fused;       // d x K
  Var keys;        // att_Wk · fused
  Var plan_input;  // 2 plan_dim x 1
  const std::vector<int>* unique_tokens = nullptr;
};

// h_k = W2 tanh(W1 (e_k + occurrence_k) + b1) + b2.
inline Var fusion_graph(ag::Tape& t, const SummarizerModel& m, std::span<const int> unique_tokens,
                        const Matrix& occurrence) {
  Var e = t.gather(m.embedding, unique_tokens);  // E x K
  Var x = ag::add(e, t.constant(occurrence));
  Var h = ag::tanh(ag::add_bias(ag::matmul(t.parameter(m.fuse_W1), x), t.parameter(m.fuse_b1)));
  return ag::add_bias(ag::matmul(t.parameter(m.fuse_W2), h), t.parameter(m.fuse_b2));
}

inline SourceGraph source_graph(ag::Tape& t, const SummarizerModel& m, const SourceBundle& b) {
  SourceGraph g;
  g.fused = fusion_graph(t, m, b.unique_tokens, b.occurrence);
  g.keys = ag::matmul(t.parameter(m.att_Wk), g.fused);
  g.plan_input = t.constant(b.plan_input);
  g.unique_tokens = &b.unique_tokens;
  return g;
}

struct StateVars {
  Var h, c;
};

// [h_0; c_0] = W_init [d_a; d_s; mean_k h_k] + b_init.
inline StateVars initial_state_graph(ag::Tape& t, const SummarizerModel& m, const SourceGraph& src) {
  Var mean = ag::mean_cols(src.fused);
  Var hc = ag::add(ag::matmul(t.parameter(m.init_W), ag::concat({src.plan_input, mean})),
                   t.parameter(m.init_b));
  return {ag::slice(hc, 0, m.d()), ag::slice(hc, m.d(), m.d())};
}

// y'_t = W_f [d_a; d_s; e(y_t)] + b_f.
inline Var combine_graph(ag::Tape& t, const SummarizerModel& m, Var plan_input, int token,
                         std::mt19937_64* dropout_rng = nullptr) {
  if (token < 0 || token >= m.vocab_size) throw ValidationError("summarizer: token id out of range");
  const int ids[1] = {token};
  Var e = t.gather(m.embedding, ids);
  if (dropout_rng) e = ag::dropout(e, m.config.dropout, *dropout_rng);
  return ag::add(ag::matmul(t.parameter(m.combine_W), ag::concat({plan_input, e})),
                 t.parameter(m.combine_b));
}

struct StepGraph {
  Var dist;       // V x 1
  Var attention;  // K x 1
  Var gate;       // 1 x 1
  StateVars next;
};

// One decoder step. `gate` pins the copy gate for diagnostics.
inline StepGraph decode_graph(ag::Tape& t, const SummarizerModel& m, const SourceGraph& src, Var y_prime,
                              StateVars state, std::optional<double> gate = std::nullopt) {
  const int d = m.d();
  Var hc = ag::lstm_cell(y_prime, state.h, state.c, t.parameter(m.lstm_W), t.parameter(m.lstm_b));
  StepGraph out;
  out.next = {ag::slice(hc, 0, d), ag::slice(hc, d, d)};
  Var q = ag::matmul(t.parameter(m.att_Wq), out.next.h);
  Var scores = ag::matmul(t.parameter(m.att_v), ag::tanh(ag::add_bias(src.keys, q)));
  out.attention = ag::softmax(ag::transpose(scores));
  Var context = ag::matmul(src.fused, out.attention);
  Var sc = ag::concat({out.next.h, context});
  Var vocab = ag::softmax(ag::add(ag::matmul(t.parameter(m.out_W), sc), t.parameter(m.out_b)));
  if (gate) {
    out.gate = t.scalar(*gate);
  } else {
    out.gate = ag::sigmoid(ag::add(ag::matmul(t.parameter(m.gate_W), ag::concat({sc, y_prime})),
                                   t.parameter(m.gate_b)));
  }
  Var copy = ag::scatter(out.attention, *src.unique_tokens, m.vocab_size);
  out.dist = ag::add(ag::scale_by(out.gate, vocab), ag::scale_by(ag::one_minus(out.gate), copy));
  return out;
}

using PriorRef = std::shared_ptr<const Vector>;

// ŷ = (1 - δ) onehot(gold) + δ prior.
inline Vector smooth_targets(int gold, const Vector& prior, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ValidationError("smooth_targets: delta must be in [0, 1)");
  if (gold < 0 || gold >= prior.size()) throw ValidationError("smooth_targets: gold id out of range");
  Vector y = delta * prior;
  y(gold) += 1.0 - delta;
  return y;
}

struct SequenceStats {
  int tokens = 0;
  int correct = 0;  // teacher-forced argmax hits
};

// -Σ_t ŷ_t · log p_t under teacher forcing. `target` ends with EOS.
inline Var sequence_loss(ag::Tape& t, const SummarizerModel& m, const SourceBundle& src_data,
                         std::span<const int> target, std::span<const PriorRef> priors, double delta,
                         std::mt19937_64* dropout_rng = nullptr, SequenceStats* stats = nullptr) {
  if (target.empty()) throw ValidationError("sequence_loss: empty target");
  if (delta > 0.0 && priors.size() != target.size())
    throw ValidationError("sequence_loss: one prior per target position is required");
  SourceGraph src = source_graph(t, m, src_data);
  StateVars state = initial_state_graph(t, m, src);
  std::vector<Var> terms;
  int prev = kBosId;
  for (std::size_t k = 0; k < target.size(); ++k) {
    Var y = combine_graph(t, m, src.plan_input, prev, dropout_rng);
    StepGraph step = decode_graph(t, m, src, y, state);
    Var lp = ag::log(step.dist);
    Var term = ag::scale(ag::pick(lp, target[k]), -(1.0 - delta));
    if (delta > 0.0) {
      term = ag::sub(term, ag::scale(ag::dot(t.constant(*priors[k]), lp), delta));
    }
    terms.push_back(term);
    if (stats) {
      Eigen::Index arg;
      step.dist.value().col(0).maxCoeff(&arg);
      stats->correct += static_cast<int>(arg) == target[k];
      ++stats->tokens;
    }
    state = step.next;
    prev = target[k];
  }
  return ag::add_n(terms);
}

// ---------------------------------------------------------------------------
// Value API.

struct FusedInput {
  std::vector<int> unique_tokens;
  Matrix fused_encodings;  // d x K
  Matrix keys;             // att_Wk · fused_encodings
  ContentPlan plan;
  Vector plan_input;
};

inline FusedInput fuse(const SourceBundle& b, const SummarizerModel& m) {
  ag::Tape t(false);
  SourceGraph g = source_graph(t, m, b);
  return {b.unique_tokens, g.fused.value(), g.keys.value(), b.plan, b.plan_input};
}

inline FusedInput fuse_tokens(std::span<const TokenSeq> reviews, const induction::InductionModel& ind,
                              const SummarizerModel& m) {
  return fuse(prepare_source(reviews, ind, m.config), m);
}

inline Vector combine_plan(const Vector& d_a, const Vector& d_s, const Vector& embedding,
                           const SummarizerModel& m) {
  Vector x(d_a.size() + d_s.size() + embedding.size());
  x << d_a, d_s, embedding;
  if (x.size() != m.combine_W.value.cols()) throw ValidationError("combine_plan: input size mismatch");
  return m.combine_W.value * x + m.combine_b.value.col(0);
}

struct DecoderState {
  Vector h, c;
};

struct StepResult {
  Vector dist;
  Vector attention;
  double gate = 0.0;
  DecoderState next;
};

namespace detail {

inline SourceGraph constant_source(ag::Tape& t, const FusedInput& f) {
  return {t.constant(f.fused_encodings), t.constant(f.keys), t.constant(f.plan_input), &f.unique_tokens};
}

}  // namespace detail

inline DecoderState initial_state(const FusedInput& f, const SummarizerModel& m) {
  ag::Tape t(false);
  auto s = initial_state_graph(t, m, detail::constant_source(t, f));
  return {s.h.value().col(0), s.c.value().col(0)};
}

inline StepResult decode_step(const Vector& y_prime, const DecoderState& state, const FusedInput& f,
                              const SummarizerModel& m, std::optional<double> gate = std::nullopt) {
  ag::Tape t(false);
  auto src = detail::constant_source(t, f);
  auto g = decode_graph(t, m, src, t.constant(y_prime), {t.constant(state.h), t.constant(state.c)}, gate);
  return {g.dist.value().col(0), g.attention.value().col(0), g.gate.scalar(),
          {g.next.h.value().col(0), g.next.c.value().col(0)}};
}

// Embeds `token`, combines with the plan and advances one step.
inline StepResult advance(int token, const DecoderState& state, const FusedInput& f, const SummarizerModel& m) {
  ag::Tape t(false);
  auto src = detail::constant_source(t, f);
  Var y = combine_graph(t, m, src.plan_input, token);
  auto g = decode_graph(t, m, src, y, {t.constant(state.h), t.constant(state.c)});
  return {g.dist.value().col(0), g.attention.value().col(0), g.gate.scalar(),
          {g.next.h.value().col(0), g.next.c.value().col(0)}};
}

inline TokenSeq greedy_decode(const FusedInput& f, const SummarizerModel& m, int max_len) {
  TokenSeq out;
  DecoderState s = initial_state(f, m);
  int prev = kBosId;
  for (int k = 0; k < max_len; ++k) {
    auto r = advance(prev, s, f, m);
    Eigen::Index arg;
    r.dist.maxCoeff(&arg);
    if (arg == kEosId) break;
    out.push_back(static_cast<int>(arg));
    prev = static_cast<int>(arg);
    s = r.next;
  }
  return out;
}

// Length-normalized beam search: hypotheses are ranked by total log-prob
// while open and by logp / len^penalty once closed; len counts EOS.
inline TokenSeq beam_search(const FusedInput& f, const SummarizerModel& m, int beam, int max_len,
                            double penalty) {
  if (beam < 1) throw ValidationError("beam_search: beam must be >= 1");
  struct Hyp {
    TokenSeq tokens;
    double logp;
    DecoderState state;
  };
  struct Cand {
    double logp;
    std::size_t hyp;
    int token;
  };
  auto normalized = [&](const Hyp& h, bool closed) {
    double len = static_cast<double>(h.tokens.size()) + (closed ? 1.0 : 0.0);
    return h.logp / std::pow(std::max(len, 1.0), penalty);
  };
  std::vector<Hyp> alive = {{{}, 0.0, initial_state(f, m)}};
  std::vector<std::pair<double, TokenSeq>> done;
  for (int step = 0; step < max_len && !alive.empty() && static_cast<int>(done.size()) < beam; ++step) {
    std::vector<Cand> cands;
    std::vector<DecoderState> next_states;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      int prev = alive[i].tokens.empty() ? kBosId : alive[i].tokens.back();
      auto r = advance(prev, alive[i].state, f, m);
      next_states.push_back(r.next);
      std::vector<int> ids(static_cast<std::size_t>(r.dist.size()));
      std::iota(ids.begin(), ids.end(), 0);
      auto k = std::min<std::size_t>(static_cast<std::size_t>(beam), ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                        [&](int a, int b) { return r.dist(a) > r.dist(b) || (r.dist(a) == r.dist(b) && a < b); });
      for (std::size_t j = 0; j < k; ++j)
        cands.push_back({alive[i].logp + std::log(r.dist(ids[j])), i, ids[j]});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.logp > b.logp; });
    std::vector<Hyp> next;
    for (std::size_t j = 0; j < cands.size() && static_cast<int>(j) < beam; ++j) {
      const auto& c = cands[j];
      Hyp h{alive[c.hyp].tokens, c.logp, next_states[c.hyp]};
      if (c.token == kEosId) {
        done.emplace_back(normalized(h, true), std::move(h.tokens));
      } else {
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }
  for (const auto& h : alive) done.emplace_back(normalized(h, false), h.tokens);
  if (done.empty()) return {};
  std::size_t best = 0;
  for (std::size_t i = 1; i < done.size(); ++i)
    if (done[i].first > done[best].first) best = i;
  return done[best].second;
}

struct SummaryOutput {
  TokenSeq tokens;
  ContentPlan plan;
};

inline SummaryOutput summarize(std::span<const TokenSeq> reviews, const induction::InductionModel& ind,
                               const SummarizerModel& m) {
  if (reviews.empty()) throw ValidationError("summarize: no input reviews");
  FusedInput f = fuse_tokens(reviews, ind, m);
  return {beam_search(f, m, m.config.beam_size, m.config.max_decode_len, m.config.length_penalty), f.plan};
}

// ---------------------------------------------------------------------------
// Training.

struct TrainingExample {
  std::string entity_id;
  SourceBundle source;
  TokenSeq target;              // summary tokens + EOS
  std::vector<PriorRef> priors;  // one per target position
};

// Caches encoder passes by review id, since synthetic instances share reviews.
class AnalysisCache {
 public:
  explicit AnalysisCache(const induction::InductionModel& ind, const Vocabulary& vocab)
      : ind_(ind), vocab_(vocab) {}

  const induction::ReviewAnalysis& get(const ReviewRecord& r, const TokenSeq** tokens = nullptr) {
    auto it = cache_.find(r.review_id);
    if (it == cache_.end()) {
      Entry e;
      e.tokens = tokenize(r.text, vocab_);
      if (e.tokens.empty()) throw ValidationError("review " + r.review_id + " has no tokens");
      e.analysis = induction::analyze(e.tokens, ind_);
      it = cache_.emplace(r.review_id, std::move(e)).first;
    }
    if (tokens) *tokens = &it->second.tokens;
    return it->second.analysis;
  }

 private:
  struct Entry {
    TokenSeq tokens;
    induction::ReviewAnalysis analysis;
  };
  const induction::InductionModel& ind_;
  const Vocabulary& vocab_;
  std::unordered_map<std::string, Entry> cache_;
};

inline TokenSeq summary_target(const std::string& text, const Vocabulary& vocab, int max_len) {
  TokenSeq t = tokenize(text, vocab);
  if (static_cast<int>(t.size()) > max_len - 1) t.resize(static_cast<std::size_t>(std::max(0, max_len - 1)));
  t.push_back(kEosId);
  return t;
}

inline std::vector<TrainingExample> prepare_examples(std::span<const SyntheticInstance> data,
                                                     const induction::InductionModel& ind,
                                                     const Vocabulary& vocab, const SummarizerConfig& config,
                                                     PriorProvider& prior) {
  config.validate();
  if (prior.size() != ind.vocab_size) throw ValidationError("prior size does not match the vocabulary");
  AnalysisCache cache(ind, vocab);
  std::vector<TrainingExample> out;
  for (const auto& inst : data) {
    std::vector<TokenSeq> toks;
    std::vector<Matrix> states;
    std::vector<ContentPlan> plans;
    for (const auto& r : inst.inputs) {
      const TokenSeq* tk;
      const auto& a = cache.get(r, &tk);
      toks.push_back(*tk);
      states.push_back(a.token_states);
      plans.push_back(a.plan);
    }
    TrainingExample ex;
    ex.entity_id = inst.summary.entity_id;
    ex.source = gather_sources(toks, states, plans, ind, config.fusion_mode(), config.use_plan);
    ex.target = summary_target(inst.summary.text, vocab, config.max_decode_len);
    for (std::size_t k = 0; k < ex.target.size(); ++k) ex.priors.push_back(prior.get(ex.target, static_cast<int>(k)));
    out.push_back(std::move(ex));
  }
  return out;
}

struct EvalStats {
  double loss = 0.0;      // mean per instance
  double accuracy = 0.0;  // teacher-forced token accuracy
};

inline EvalStats evaluate(const SummarizerModel& m, std::span<const TrainingExample> examples) {
  if (examples.empty()) throw ValidationError("summarizer evaluate: no examples");
  EvalStats s;
  SequenceStats counts;
  for (const auto& ex : examples) {
    ag::Tape t(false);
    s.loss += sequence_loss(t, m, ex.source, ex.target, ex.priors, m.config.delta, nullptr, &counts).scalar();
  }
  s.loss /= static_cast<double>(examples.size());
  s.accuracy = static_cast<double>(counts.correct) / std::max(1, counts.tokens);
  return s;
}

struct SummarizerTrainResult {
  SummarizerModel model;            // best epoch by dev token accuracy, then dev loss
  std::vector<double> step_losses;
  double initial_loss = 0.0;        // training-split evaluation loss before any step
  std::vector<double> epoch_loss;   // same measure after each epoch
  std::vector<double> dev_accuracy;
  int best_epoch = 0;
};

inline SummarizerTrainResult train_summarizer(std::span<const TrainingExample> examples,
                                              const SummarizerConfig& config,
                                              const induction::InductionModel& ind) {
  config.validate();
  if (examples.empty()) throw ValidationError("train_summarizer: dataset is empty");
  std::mt19937_64 rng(derive_seed(config.seed, 0x5b));
  // Dev entities are disjoint from training entities: synthetic instances
  // reuse summaries, so an instance-level split would reward memorization.
  std::vector<std::string> entities;
  for (const auto& ex : examples) entities.push_back(ex.entity_id);
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  std::shuffle(entities.begin(), entities.end(), rng);
  auto n_dev = static_cast<std::size_t>(config.dev_fraction * static_cast<double>(entities.size()));
  if (n_dev == entities.size()) n_dev = 0;
  std::set<std::string> dev_entities(entities.begin(), entities.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<TrainingExample> train, dev;
  for (const auto& ex : examples) (dev_entities.count(ex.entity_id) ? dev : train).push_back(ex);
  const auto& selection = dev.empty() ? train : dev;

  SummarizerTrainResult res;
  SummarizerModel model = SummarizerModel::create(config, ind);
  auto params = model.parameters();
  ag::Adam opt(params, ag::AdamConfig{.lr = config.lr, .warmup_steps = config.warmup_steps,
                                      .clip_norm = config.clip_norm});
  res.initial_loss = evaluate(model, train).loss;
  EvalStats start = evaluate(model, selection);
  double best = start.accuracy, best_loss = start.loss;
  res.model = model;
  log_info("summarizer start", "train", train.size(), "dev", dev.size(), "loss", res.initial_loss);

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 dropout_rng(derive_seed(config.seed, 0xd6));
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(config.batch_size));
      const double w = 1.0 / static_cast<double>(end - start);
      double batch = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train[idx[i]];
        ag::Tape t;
        Var loss = sequence_loss(t, model, ex.source, ex.target, ex.priors, config.delta,
                                 config.dropout > 0 ? &dropout_rng : nullptr);
        if (!std::isfinite(loss.scalar()))
          throw RuntimeError("train_summarizer: non-finite loss at step " + std::to_string(opt.steps()) +
                             " (target length " + std::to_string(ex.target.size()) + ", sources " +
                             std::to_string(ex.source.unique_tokens.size()) + ")");
        batch += loss.scalar() * w;
        t.backward(ag::scale(loss, w));
      }
      opt.step();
      res.step_losses.push_back(batch);
      if (res.step_losses.size() % 100 == 0)
        log_info("summarizer progress", "step", res.step_losses.size(), "loss", batch);
    }
    if (!ag::all_finite(params))
      throw RuntimeError("train_summarizer: parameters became non-finite in epoch " + std::to_string(epoch));
    res.epoch_loss.push_back(evaluate(model, train).loss);
    EvalStats sel = evaluate(model, selection);
    const double acc = sel.accuracy;
    res.dev_accuracy.push_back(acc);
    log_info("summarizer epoch", "epoch", epoch, "train_loss", res.epoch_loss.back(), "dev_acc", acc);
    // Ties on accuracy go to the lower selection loss.
    if (acc > best || (acc == best && sel.loss < best_loss)) {
      best = acc;
      best_loss = sel.loss;
      res.best_epoch = epoch;
      res.model = model;
      stale = 0;
    } else if (++stale >= config.patience) {
      log_info("early stop", "epoch", epoch, "best_epoch", res.best_epoch);
      break;
    }
  }
  return res;
}

// Builds the prior named in the config from the tokens of `data`.
inline PriorProvider make_prior(const SummarizerConfig& config, std::span<const SyntheticInstance> data,
                                const Vocabulary& vocab) {
  std::vector<TokenSeq> seqs;
  std::set<std::string> seen;
  for (const auto& inst : data) {
    if (seen.insert(inst.summary.review_id).second) seqs.push_back(tokenize(inst.summary.text, vocab));
    for (const auto& r : inst.inputs)
      if (seen.insert(r.review_id).second) seqs.push_back(tokenize(r.text, vocab));
  }
  switch (config.prior_mode()) {
    case PriorMode::kUniform: return PriorProvider::uniform(vocab.size());
    case PriorMode::kExternalMlm:
      return PriorProvider::external(config.mlm_endpoint, &vocab, unigram_table(seqs, vocab.size()));
    default: return PriorProvider::unigram(unigram_table(seqs, vocab.size()));
  }
}

// Surface text of a generated summary, with the entity placeholder restored.
inline std::string summary_text(std::span<const int> tokens, const Vocabulary& vocab,
                                const std::string& entity_name) {
  std::string text = detokenize(tokens, vocab);
  return entity_name.empty() ? text : restore_entity(text, entity_name);
}

}  // namespace opsum::summarizer

#endif  // OPSUM_SUMMARIZER_HPP_
