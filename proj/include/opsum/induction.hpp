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


// Content-plan induction: a BiLSTM review encoder whose mean-pooled output is
// split into an aspect half and a sentiment half. Each half feeds a softmax
// classifier (the plan), the plans re-weight learned aspect/sentiment
// memories to reconstruct the halves, and an adversarial head behind a
// gradient-reversal node strips rating information from the aspect half.

#ifndef OPSUM_INDUCTION_HPP_
#define OPSUM_INDUCTION_HPP_

#include <algorithm>
#include <map>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opsum/autograd.hpp"
#include "opsum/base.hpp"
#include "opsum/checkpoint.hpp"
#include "opsum/embeddings.hpp"
#include "opsum/optim.hpp"
#include "opsum/plan.hpp"
#include "opsum/tokenizer.hpp"

namespace opsum::induction {

using ag::Matrix;
using ag::Var;
using ag::Vector;

struct InductionConfig {
  int num_aspects = 10;     // K_a
  int num_sentiments = 5;   // K_s
  int hidden = 64;          // pooled encoding size d; each half is d / 2
  int embed_dim = 64;
  int negatives = 5;        // m
  double lambda = 1.0;      // orthogonality weight
  bool disentangle = true;  // false drops both cross-entropy terms
  // "cooccurrence" seeds the word embeddings with PPMI vectors computed on
  // the training reviews; "random" keeps the uniform initialization.
  std::string embedding_init = "cooccurrence";
  bool freeze_embeddings = true;
  // Evaluate the hinge on unit-length d, h and n.
  bool normalize_recon = true;
  double lr = 1e-2;
  int batch_size = 16;
  int warmup_steps = 100;
  double dropout = 0.1;
  double clip_norm = 3.0;
  int max_epochs = 60;
  double dev_fraction = 0.1;
  std::uint64_t seed = 7;

  void validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("induction." + m); };
    if (num_aspects < 2) fail("num_aspects must be >= 2");
    if (num_sentiments != 2 && num_sentiments != 5) fail("num_sentiments must be 2 or 5");
    if (hidden < 2 || hidden % 2 != 0) fail("hidden must be a positive even number");
    if (embed_dim < 1) fail("embed_dim must be >= 1");
    if (negatives < 1) fail("negatives must be >= 1");
    if (!(lambda >= 0.0)) fail("lambda must be >= 0");
    if (!(lr > 0.0)) fail("lr must be > 0");
    if (batch_size < 2) fail("batch_size must be >= 2");
    if (warmup_steps < 0) fail("warmup_steps must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
    if (max_epochs < 0) fail("max_epochs must be >= 0");
    if (dev_fraction < 0.0 || dev_fraction >= 1.0) fail("dev_fraction must be in [0, 1)");
    if (embedding_init != "cooccurrence" && embedding_init != "random")
      fail("embedding_init must be \"cooccurrence\" or \"random\"");
  }

  json to_json() const {
    return {{"num_aspects", num_aspects}, {"num_sentiments", num_sentiments},
            {"hidden", hidden},           {"embed_dim", embed_dim},
            {"negatives", negatives},     {"lambda", lambda},
            {"disentangle", disentangle}, {"embedding_init", embedding_init},
            {"freeze_embeddings", freeze_embeddings}, {"normalize_recon", normalize_recon},
            {"lr", lr},
            {"batch_size", batch_size},   {"warmup_steps", warmup_steps},
            {"dropout", dropout},         {"clip_norm", clip_norm},
            {"max_epochs", max_epochs},   {"dev_fraction", dev_fraction},
            {"seed", seed}};
  }

  static InductionConfig from_json(const json& j) { return from_json(j, InductionConfig()); }
  static InductionConfig from_json(const json& j, InductionConfig c) {
    constexpr std::string_view s = "induction";
    check_known_keys(j, {"num_aspects", "num_sentiments", "hidden", "embed_dim", "negatives",
                         "lambda", "disentangle", "embedding_init", "freeze_embeddings",
                         "normalize_recon", "lr", "batch_size", "warmup_steps", "dropout",
                         "clip_norm", "max_epochs", "dev_fraction", "seed"},
                     s);
    read_key(j, "num_aspects", c.num_aspects, s);
    read_key(j, "num_sentiments", c.num_sentiments, s);
    read_key(j, "hidden", c.hidden, s);
    read_key(j, "embed_dim", c.embed_dim, s);
    read_key(j, "negatives", c.negatives, s);
    read_key(j, "lambda", c.lambda, s);
    read_key(j, "disentangle", c.disentangle, s);
    read_key(j, "embedding_init", c.embedding_init, s);
    read_key(j, "freeze_embeddings", c.freeze_embeddings, s);
    read_key(j, "normalize_recon", c.normalize_recon, s);
    read_key(j, "lr", c.lr, s);
    read_key(j, "batch_size", c.batch_size, s);
    read_key(j, "warmup_steps", c.warmup_steps, s);
    read_key(j, "dropout", c.dropout, s);
    read_key(j, "clip_norm", c.clip_norm, s);
    read_key(j, "max_epochs", c.max_epochs, s);
    read_key(j, "dev_fraction", c.dev_fraction, s);
    read_key(j, "seed", c.seed, s);
    return c;
  }
};

struct InductionModel {
  InductionConfig config;
  int vocab_size = 0;
  ag::Parameter embedding;         // V x E
  ag::Parameter fwd_W, fwd_b;      // 4H x (E + H), 4H x 1
  ag::Parameter bwd_W, bwd_b;
  ag::Parameter aspect_W, aspect_b;        // K_a x H
  ag::Parameter sentiment_W, sentiment_b;  // K_s x H
  ag::Parameter aspect_memory;     // A: K_a x H
  ag::Parameter sentiment_memory;  // S: K_s x H
  ag::Parameter adv_W, adv_b;      // K_s x H

  int half() const { return config.hidden / 2; }

  // Every parameter is uniform in [-0.1, 0.1], drawn in declaration order.
  static InductionModel create(const InductionConfig& config, int vocab_size) {
    config.validate();
    if (vocab_size <= kNumSpecials) throw ValidationError("induction: vocabulary too small");
    InductionModel m;
    m.config = config;
    m.vocab_size = vocab_size;
    std::mt19937_64 rng(derive_seed(config.seed, 0x1d));
    const int H = config.hidden / 2, E = config.embed_dim;
    const int Ka = config.num_aspects, Ks = config.num_sentiments;
    auto init = [&](const char* name, int r, int c) {
      return ag::Parameter(name, ag::uniform_matrix(r, c, 0.1, rng));
    };
    m.embedding = init("embedding", vocab_size, E);
    m.fwd_W = init("fwd_W", 4 * H, E + H);
    m.fwd_b = init("fwd_b", 4 * H, 1);
    m.bwd_W = init("bwd_W", 4 * H, E + H);
    m.bwd_b = init("bwd_b", 4 * H, 1);
    m.aspect_W = init("aspect_W", Ka, H);
    m.aspect_b = init("aspect_b", Ka, 1);
    m.sentiment_W = init("sentiment_W", Ks, H);
    m.sentiment_b = init("sentiment_b", Ks, 1);
    m.aspect_memory = init("aspect_memory", Ka, H);
    m.sentiment_memory = init("sentiment_memory", Ks, H);
    m.adv_W = init("adv_W", Ks, H);
    m.adv_b = init("adv_b", Ks, 1);
    return m;
  }

  ag::ParameterRefs parameters() {
    return {&embedding,   &fwd_W,       &fwd_b,         &bwd_W,           &bwd_b,
            &aspect_W,    &aspect_b,    &sentiment_W,   &sentiment_b,     &aspect_memory,
            &sentiment_memory, &adv_W,  &adv_b};
  }

  json meta(const std::string& vocab_hash = "") const {
    return {{"kind", "induction"}, {"config", config.to_json()}, {"vocab_size", vocab_size},
            {"vocab_hash", vocab_hash}};
  }

  void save(const std::filesystem::path& dir, const std::string& vocab_hash = "") const {
    auto self = const_cast<InductionModel*>(this);
    ag::save_checkpoint(dir, self->parameters(), meta(vocab_hash));
  }

  static InductionModel load(const std::filesystem::path& dir) {
    json meta = ag::load_checkpoint_meta(dir);
    if (meta.value("kind", "") != "induction")
      throw ValidationError(dir.string() + ": not an induction checkpoint");
    auto config = InductionConfig::from_json(meta.at("config"));
    auto m = create(config, meta.at("vocab_size").get<int>());
    ag::load_parameters(dir, m.parameters());
    return m;
  }
};

// ---------------------------------------------------------------------------
// Graph builders.

struct EncoderGraph {
  std::vector<Var> forward;   // H x 1 per position
  std::vector<Var> backward;  // H x 1 per position, in token order
  Var h_a;                    // mean of forward states
  Var h_s;                    // mean of backward states
};

// `rng` enables dropout on the embeddings and pooled halves; pass nullptr for
// evaluation mode.
inline EncoderGraph encode_graph(ag::Tape& t, const InductionModel& m, std::span<const int> tokens,
                                 std::mt19937_64* rng = nullptr) {
  if (tokens.empty()) throw ValidationError("encode: empty token sequence");
  const int H = m.half();
  const double rate = rng ? m.config.dropout : 0.0;
  std::vector<Var> emb;
  emb.reserve(tokens.size());
  for (int id : tokens) {
    if (id < 0 || id >= m.vocab_size) throw ValidationError("encode: token id out of range");
    std::span<const int> one(&id, 1);
    Var e = m.config.freeze_embeddings ? t.gather_frozen(m.embedding, one) : t.gather(m.embedding, one);
    emb.push_back(rng ? ag::dropout(e, rate, *rng) : e);
  }
  EncoderGraph g;
  const std::size_t n = tokens.size();
  auto run = [&](const ag::Parameter& W, const ag::Parameter& b, bool reverse) {
    std::vector<Var> states(n);
    Var h = t.constant(Matrix::Zero(H, 1));
    Var c = t.constant(Matrix::Zero(H, 1));
    Var vW = t.parameter(W), vb = t.parameter(b);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t pos = reverse ? n - 1 - k : k;
      Var hc = ag::lstm_cell(emb[pos], h, c, vW, vb);
      h = ag::slice(hc, 0, H);
      c = ag::slice(hc, H, H);
      states[pos] = h;
    }
    return states;
  };
  g.forward = run(m.fwd_W, m.fwd_b, false);
  g.backward = run(m.bwd_W, m.bwd_b, true);
  const double inv_n = 1.0 / static_cast<double>(n);
  g.h_a = ag::scale(ag::add_n(g.forward), inv_n);
  g.h_s = ag::scale(ag::add_n(g.backward), inv_n);
  if (rng) {
    g.h_a = ag::dropout(g.h_a, rate, *rng);
    g.h_s = ag::dropout(g.h_s, rate, *rng);
  }
  return g;
}

struct PlanGraph {
  Var aspect_logits, sentiment_logits;
  Var p_a, p_s;
};

inline PlanGraph plan_graph(ag::Tape& t, const InductionModel& m, Var h_a, Var h_s) {
  PlanGraph g;
  g.aspect_logits = ag::matmul(t.parameter(m.aspect_W), h_a) + t.parameter(m.aspect_b);
  g.sentiment_logits = ag::matmul(t.parameter(m.sentiment_W), h_s) + t.parameter(m.sentiment_b);
  g.p_a = ag::softmax(g.aspect_logits);
  g.p_s = ag::softmax(g.sentiment_logits);
  return g;
}

// d = memoryᵀ p: the p-weighted sum of memory rows.
inline Var reconstruct_graph(Var memory, Var p) { return ag::matmul(ag::transpose(memory), p); }

// Σ_i max(0, 1 − d_a·h_a + d_a·n_a⁽ⁱ⁾) + Σ_i max(0, 1 − d_s·h_s + d_s·n_s⁽ⁱ⁾)
inline Var recon_loss_graph(Var d_a, Var d_s, Var h_a, Var h_s,
                            std::span<const std::pair<Var, Var>> negatives) {
  if (negatives.empty()) throw ValidationError("recon_loss: at least one negative is required");
  ag::Tape& t = *d_a.tape();
  Var one = t.scalar(1.0);
  Var pos_a = ag::dot(d_a, h_a), pos_s = ag::dot(d_s, h_s);
  std::vector<Var> terms;
  for (const auto& [n_a, n_s] : negatives) {
    terms.push_back(ag::relu(one - pos_a + ag::dot(d_a, n_a)));
    terms.push_back(ag::relu(one - pos_s + ag::dot(d_s, n_s)));
  }
  return ag::add_n(terms);
}

// ‖Â·Âᵀ − I‖_F + ‖Ŝ·Ŝᵀ − I‖_F with Â, Ŝ the row-normalized memories.
inline Var ortho_graph(Var A, Var S) {
  auto term = [](Var M) {
    Var n = ag::row_normalize(M);
    return ag::frobenius(ag::add_identity(ag::matmul(n, ag::transpose(n)), -1.0));
  };
  return term(A) + term(S);
}

// −log p_s[label] − log p_adv[label], with p_adv read through a
// gradient-reversal node placed between h_a and the adversarial head: the
// head itself trains normally, everything upstream of h_a is pushed to make
// the rating unpredictable.
//
// `reverse = false` swaps the reversal node for the identity, giving the
// true gradient of the loss value (used by finite-difference checks).
inline Var disentangle_graph(ag::Tape& t, const InductionModel& m, Var h_a, Var sentiment_logits,
                             int label, bool reverse = true) {
  if (label < 0 || label >= m.config.num_sentiments)
    throw ValidationError("disentangle_loss: label out of range");
  Var adv_logits =
      ag::matmul(t.parameter(m.adv_W), reverse ? ag::grad_reverse(h_a) : h_a) + t.parameter(m.adv_b);
  Var ce_s = ag::scale(ag::pick(ag::log_softmax(sentiment_logits), label), -1.0);
  Var ce_adv = ag::scale(ag::pick(ag::log_softmax(adv_logits), label), -1.0);
  return ce_s + ce_adv;
}

// ---------------------------------------------------------------------------
// Value-level API.

// Per-position encodings [forward; backward] (d x N), evaluation mode.
inline Matrix token_encodings(std::span<const int> tokens, const InductionModel& m) {
  ag::Tape t(false);
  auto g = encode_graph(t, m, tokens);
  const int H = m.half();
  Matrix out(2 * H, static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) << g.forward[k].value().col(0), g.backward[k].value().col(0);
  }
  return out;
}

// (h_a, h_s), each of size d / 2.
inline std::pair<Vector, Vector> encode(std::span<const int> tokens, const InductionModel& m) {
  ag::Tape t(false);
  auto g = encode_graph(t, m, tokens);
  return {g.h_a.value().col(0), g.h_s.value().col(0)};
}

inline ContentPlan plan_from_halves(const InductionModel& m, const Vector& h_a, const Vector& h_s) {
  ag::Tape t(false);
  auto g = plan_graph(t, m, t.constant(h_a), t.constant(h_s));
  return {g.p_a.value().col(0), g.p_s.value().col(0)};
}

inline ContentPlan infer_plan(std::span<const int> tokens, const InductionModel& m) {
  auto [h_a, h_s] = encode(tokens, m);
  return plan_from_halves(m, h_a, h_s);
}

// Everything the downstream stages need from one review, in one pass.
struct ReviewAnalysis {
  Matrix token_states;  // d x N
  Vector h_a, h_s;
  ContentPlan plan;
};

inline ReviewAnalysis analyze(std::span<const int> tokens, const InductionModel& m) {
  ag::Tape t(false);
  auto g = encode_graph(t, m, tokens);
  auto p = plan_graph(t, m, g.h_a, g.h_s);
  const int H = m.half();
  ReviewAnalysis a;
  a.token_states.resize(2 * H, static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    a.token_states.col(static_cast<Eigen::Index>(k)) << g.forward[k].value().col(0),
        g.backward[k].value().col(0);
  }
  a.h_a = g.h_a.value().col(0);
  a.h_s = g.h_s.value().col(0);
  a.plan = {p.p_a.value().col(0), p.p_s.value().col(0)};
  return a;
}

// (d_a, d_s) = (Aᵀ p_a, Sᵀ p_s).
inline std::pair<Vector, Vector> reconstruct(const ContentPlan& plan, const Matrix& A, const Matrix& S) {
  if (plan.aspect.size() != A.rows() || plan.sentiment.size() != S.rows())
    throw ValidationError("reconstruct: plan size does not match memory rows");
  return {A.transpose() * plan.aspect, S.transpose() * plan.sentiment};
}

inline std::pair<Vector, Vector> reconstruct(const ContentPlan& plan, const InductionModel& m) {
  return reconstruct(plan, m.aspect_memory.value, m.sentiment_memory.value);
}

inline double recon_loss(const Vector& d_a, const Vector& d_s, const Vector& h_a, const Vector& h_s,
                         std::span<const std::pair<Vector, Vector>> negatives) {
  ag::Tape t(false);
  std::vector<std::pair<Var, Var>> neg;
  for (const auto& [a, s] : negatives) neg.emplace_back(t.constant(a), t.constant(s));
  return recon_loss_graph(t.constant(d_a), t.constant(d_s), t.constant(h_a), t.constant(h_s), neg)
      .scalar();
}

inline double ortho_regularizer(const Matrix& A, const Matrix& S) {
  ag::Tape t(false);
  return ortho_graph(t.constant(A), t.constant(S)).scalar();
}

// Value of the disentanglement loss given the sentiment plan p_s directly.
inline double disentangle_loss(const Vector& h_a, const Vector& p_s, int label, const InductionModel& m) {
  if (label < 0 || label >= p_s.size()) throw ValidationError("disentangle_loss: label out of range");
  ag::Tape t(false);
  Var adv = ag::matmul(t.frozen(m.adv_W), t.constant(h_a)) + t.frozen(m.adv_b);
  double log_adv = ag::log_softmax(adv).value()(label, 0);
  return -std::log(p_s(label)) - log_adv;
}

// ---------------------------------------------------------------------------
// Training.

struct InductionExample {
  TokenSeq tokens;
  int label = 0;  // sentiment class
};

struct LossParts {
  double recon = 0.0;
  double disen = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

// negatives[i] lists batch positions used as negatives for example i.
using NegativePlan = std::vector<std::vector<int>>;

// m draws per example from the other batch members: without replacement
// when the batch is large enough, with replacement otherwise.
inline NegativePlan sample_negatives(int batch, int m, std::mt19937_64& rng) {
  if (batch < 2) throw ValidationError("negative sampling needs at least two reviews per batch");
  NegativePlan out(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    std::vector<int> others;
    for (int j = 0; j < batch; ++j)
      if (j != i) others.push_back(j);
    auto& picks = out[static_cast<std::size_t>(i)];
    if (static_cast<int>(others.size()) >= m) {
      for (int k = 0; k < m; ++k) {
        std::uniform_int_distribution<int> d(k, static_cast<int>(others.size()) - 1);
        std::swap(others[static_cast<std::size_t>(k)], others[static_cast<std::size_t>(d(rng))]);
        picks.push_back(others[static_cast<std::size_t>(k)]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> d(0, others.size() - 1);
      for (int k = 0; k < m; ++k) picks.push_back(others[d(rng)]);
    }
  }
  return out;
}

// Column vector scaled to unit length.
inline Var unit(Var v) { return ag::transpose(ag::row_normalize(ag::transpose(v))); }

// L_induce for one batch: mean over examples of (L_recon + L_disen), plus
// λ·R once. With λ == 0 the regularizer is not part of the graph at all.
inline Var batch_loss(ag::Tape& t, const InductionModel& m,
                      std::span<const InductionExample* const> batch, const NegativePlan& negatives,
                      std::mt19937_64* dropout_rng, LossParts* parts = nullptr,
                      bool reverse = true) {
  std::vector<EncoderGraph> enc;
  enc.reserve(batch.size());
  for (const auto* ex : batch) enc.push_back(encode_graph(t, m, ex->tokens, dropout_rng));
  Var A = t.parameter(m.aspect_memory), S = t.parameter(m.sentiment_memory);
  std::vector<Var> recon_terms, disen_terms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto p = plan_graph(t, m, enc[i].h_a, enc[i].h_s);
    Var d_a = reconstruct_graph(A, p.p_a);
    Var d_s = reconstruct_graph(S, p.p_s);
    std::vector<std::pair<Var, Var>> neg;
    for (int j : negatives.at(i)) neg.emplace_back(enc[static_cast<std::size_t>(j)].h_a, enc[static_cast<std::size_t>(j)].h_s);
    if (m.config.normalize_recon) {
      for (auto& [n_a, n_s] : neg) {
        n_a = unit(n_a);
        n_s = unit(n_s);
      }
      recon_terms.push_back(
          recon_loss_graph(unit(d_a), unit(d_s), unit(enc[i].h_a), unit(enc[i].h_s), neg));
    } else {
      recon_terms.push_back(recon_loss_graph(d_a, d_s, enc[i].h_a, enc[i].h_s, neg));
    }
    if (m.config.disentangle)
      disen_terms.push_back(disentangle_graph(t, m, enc[i].h_a, p.sentiment_logits, batch[i]->label, reverse));
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  Var recon = ag::scale(ag::add_n(recon_terms), inv);
  Var total = recon;
  LossParts lp;
  lp.recon = recon.scalar();
  if (!disen_terms.empty()) {
    Var disen = ag::scale(ag::add_n(disen_terms), inv);
    lp.disen = disen.scalar();
    total = total + disen;
  }
  if (m.config.lambda > 0.0) {
    Var reg = ortho_graph(A, S);
    lp.reg = reg.scalar();
    total = total + ag::scale(reg, m.config.lambda);
  }
  lp.total = total.scalar();
  if (parts) *parts = lp;
  return total;
}

// Consecutive batches over `order`; a trailing batch of one is folded into
// its predecessor so every batch can supply negatives.
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                          int batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.size() >= 2 && out.back().size() < 2) {
    auto last = out.back();
    out.pop_back();
    out.back().insert(out.back().end(), last.begin(), last.end());
  }
  return out;
}

// Evaluation-mode loss averaged over fixed batches with negatives drawn from
// a stream seeded by `seed`; comparable across calls.
inline LossParts evaluate_loss(const InductionModel& m, std::span<const InductionExample> examples,
                               std::uint64_t seed) {
  if (examples.size() < 2) throw ValidationError("evaluate_loss: need at least two reviews");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0xe7a1));
  LossParts sum;
  auto batches = make_batches(order, m.config.batch_size);
  for (const auto& b : batches) {
    std::vector<const InductionExample*> ptrs;
    for (auto i : b) ptrs.push_back(&examples[i]);
    auto neg = sample_negatives(static_cast<int>(ptrs.size()), m.config.negatives, rng);
    ag::Tape t(false);
    LossParts p;
    batch_loss(t, m, ptrs, neg, nullptr, &p);
    sum.recon += p.recon;
    sum.disen += p.disen;
    sum.reg += p.reg;
    sum.total += p.total;
  }
  double n = static_cast<double>(batches.size());
  return {sum.recon / n, sum.disen / n, sum.reg / n, sum.total / n};
}

struct InductionTrainResult {
  InductionModel model;             // best epoch by dev reconstruction loss
  std::vector<double> step_losses;  // training L_induce per optimizer step
  LossParts initial;                // evaluation loss on the training split
  LossParts final;                  // same measure for the returned model
  std::vector<double> dev_recon;    // per epoch
  int best_epoch = 0;               // 0 = the initial model
};

inline InductionTrainResult train_induction(std::span<const InductionExample> examples,
                                            const InductionConfig& config, int vocab_size) {
  config.validate();
  if (examples.size() < 2) throw ValidationError("train_induction: need at least two reviews");
  for (const auto& ex : examples) {
    if (ex.tokens.empty()) throw ValidationError("train_induction: review with no tokens");
    if (ex.label < 0 || ex.label >= config.num_sentiments)
      throw ValidationError("train_induction: sentiment label out of range");
  }

  std::mt19937_64 rng(derive_seed(config.seed, 0x7a1));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_dev = static_cast<std::size_t>(config.dev_fraction * static_cast<double>(examples.size()));
  if (n_dev < 2) n_dev = 0;
  std::vector<InductionExample> dev, train;
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_dev ? dev : train).push_back(examples[order[k]]);
  if (train.size() < 2) throw ValidationError("train_induction: training split too small");
  const auto& selection = dev.empty() ? train : dev;

  InductionTrainResult res;
  InductionModel model = InductionModel::create(config, vocab_size);
  if (config.embedding_init == "cooccurrence") {
    std::vector<std::vector<int>> seqs;
    for (const auto& ex : train) seqs.push_back(ex.tokens);
    model.embedding.value =
        cooccurrence_embeddings(seqs, vocab_size, config.embed_dim, derive_seed(config.seed, 0xeb));
  }
  auto trainable = model.parameters();
  if (config.freeze_embeddings) trainable.erase(trainable.begin());
  ag::Adam opt(trainable, ag::AdamConfig{.lr = config.lr,
                                                   .warmup_steps = config.warmup_steps,
                                                   .clip_norm = config.clip_norm});
  const std::uint64_t eval_seed = derive_seed(config.seed, 0xe0);
  res.initial = evaluate_loss(model, train, eval_seed);
  double best = evaluate_loss(model, selection, eval_seed).recon;
  res.model = model;
  log_info("induction start", "train", train.size(), "dev", dev.size(), "loss", res.initial.total);

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 dropout_rng(derive_seed(config.seed, 0xd5));
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (const auto& b : make_batches(idx, config.batch_size)) {
      std::vector<const InductionExample*> ptrs;
      for (auto i : b) ptrs.push_back(&train[i]);
      auto neg = sample_negatives(static_cast<int>(ptrs.size()), config.negatives, rng);
      LossParts parts;
      {
        ag::Tape t;
        Var loss = batch_loss(t, model, ptrs, neg, config.dropout > 0 ? &dropout_rng : nullptr, &parts);
        if (!std::isfinite(parts.total))
          throw RuntimeError("train_induction: non-finite loss at step " +
                             std::to_string(opt.steps()) + " (recon=" + std::to_string(parts.recon) +
                             " disen=" + std::to_string(parts.disen) +
                             " reg=" + std::to_string(parts.reg) + ")");
        t.backward(loss);
      }
      opt.step();
      res.step_losses.push_back(parts.total);
      if (res.step_losses.size() % 100 == 0)
        log_info("induction progress", "step", res.step_losses.size(), "loss", parts.total);
    }
    if (!ag::all_finite(trainable))
      throw RuntimeError("train_induction: parameters became non-finite in epoch " + std::to_string(epoch));
    double dev_recon = evaluate_loss(model, selection, eval_seed).recon;
    res.dev_recon.push_back(dev_recon);
    log_info("induction epoch", "epoch", epoch, "dev_recon", dev_recon);
    if (dev_recon < best) {
      best = dev_recon;
      res.best_epoch = epoch;
      res.model = model;
    }
  }
  res.final = evaluate_loss(res.model, train, eval_seed);
  return res;
}

// ---------------------------------------------------------------------------
// Diagnostics.

// Σ_clusters max_label count / total.
inline double cluster_purity(std::span<const int> clusters, std::span<const int> labels) {
  if (clusters.size() != labels.size() || clusters.empty())
    throw ValidationError("cluster_purity: size mismatch or empty input");
  std::map<int, std::map<int, int>> counts;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++counts[clusters[i]][labels[i]];
  int hit = 0;
  for (const auto& [c, by_label] : counts) {
    int best = 0;
    for (const auto& [l, n] : by_label) best = std::max(best, n);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(clusters.size());
}

// Held-out accuracy of a freshly trained multinomial logistic-regression
// probe. Features are standardized; half the (shuffled) data trains the
// probe by full-batch gradient descent, the other half scores it.
inline double probe_accuracy(const std::vector<Vector>& features, std::span<const int> labels,
                             int num_classes, std::uint64_t seed, int iterations = 500,
                             double lr = 0.5, double l2 = 1e-3) {
  if (features.size() != labels.size() || features.size() < 4)
    throw ValidationError("probe_accuracy: need at least four labelled vectors");
  const auto n = static_cast<Eigen::Index>(features.size());
  const auto dim = features[0].size();
  Matrix X(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = features[static_cast<std::size_t>(i)].transpose();
  Vector mu = X.colwise().mean();
  X.rowwise() -= mu.transpose();
  Vector sd = (X.array().square().colwise().mean()).sqrt().matrix().transpose();
  for (Eigen::Index c = 0; c < dim; ++c) X.col(c) /= std::max(sd(c), 1e-8);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x9b0));
  std::shuffle(order.begin(), order.end(), rng);
  const Eigen::Index n_train = n / 2;
  Matrix Xtr(n_train, dim + 1), Xte(n - n_train, dim + 1);
  Matrix Ytr = Matrix::Zero(n_train, num_classes);
  std::vector<int> yte;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index i = order[static_cast<std::size_t>(k)];
    int y = labels[static_cast<std::size_t>(i)];
    if (k < n_train) {
      Xtr.row(k) << X.row(i), 1.0;
      Ytr(k, y) = 1.0;
    } else {
      Xte.row(k - n_train) << X.row(i), 1.0;
      yte.push_back(y);
    }
  }
  Matrix W = Matrix::Zero(dim + 1, num_classes);
  for (int it = 0; it < iterations; ++it) {
    Matrix logits = Xtr * W;
    Matrix P = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().matrix();
    P = P.array().colwise() / P.rowwise().sum().array();
    Matrix grad = Xtr.transpose() * (P - Ytr) / static_cast<double>(n_train) + l2 * W;
    W -= lr * grad;
  }
  Matrix scores = Xte * W;
  int correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    correct += static_cast<int>(arg) == yte[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

}  // namespace opsum::induction

#endif  // OPSUM_INDUCTION_HPP_
