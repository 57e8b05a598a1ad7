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


#ifndef OPSUM_PRIOR_HPP_
#define OPSUM_PRIOR_HPP_

#include <Eigen/Dense>

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "opsum/base.hpp"
#include "opsum/tokenizer.hpp"

namespace opsum {

enum class PriorMode { kUnigram, kUniform, kExternalMlm };

inline PriorMode parse_prior_mode(std::string_view s) {
  if (s == "unigram") return PriorMode::kUnigram;
  if (s == "uniform") return PriorMode::kUniform;
  if (s == "external_mlm") return PriorMode::kExternalMlm;
  throw ValidationError("prior mode must be unigram, uniform or external_mlm, got \"" + std::string(s) + "\"");
}

inline std::string to_string(PriorMode m) {
  switch (m) {
    case PriorMode::kUnigram: return "unigram";
    case PriorMode::kUniform: return "uniform";
    default: return "external_mlm";
  }
}

// Add-one smoothed unigram frequencies over the whole vocabulary.
inline Eigen::VectorXd unigram_table(std::span<const TokenSeq> seqs, int vocab_size) {
  if (vocab_size < 1) throw ValidationError("unigram_table: empty vocabulary");
  Eigen::VectorXd counts = Eigen::VectorXd::Ones(vocab_size);
  for (const auto& s : seqs) {
    for (int id : s) {
      if (id < 0 || id >= vocab_size) throw ValidationError("unigram_table: token id out of range");
      counts(id) += 1.0;
    }
  }
  return counts / counts.sum();
}

// Maps a masked-LM response {"top_k": [{"token", "prob"}, ...]} onto the
// local vocabulary. Unknown surfaces and any mass the response leaves out go
// to UNK; a response summing above one is rescaled.
inline Eigen::VectorXd prior_from_response(const json& response, const Vocabulary& vocab) {
  if (!response.is_object() || !response.contains("top_k") || !response["top_k"].is_array())
    throw ValidationError("masked-LM response: expected {\"top_k\": [...]}");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(vocab.size());
  double total = 0.0;
  for (const auto& e : response["top_k"]) {
    double prob = e.at("prob").get<double>();
    if (!(prob >= 0.0) || !std::isfinite(prob)) throw ValidationError("masked-LM response: bad probability");
    auto id = vocab.find(e.at("token").get<std::string>());
    p(id && !Vocabulary::is_special(*id) ? *id : kUnkId) += prob;
    total += prob;
  }
  if (total > 1.0) {
    p /= total;
  } else {
    p(kUnkId) += 1.0 - total;
  }
  return p;
}

struct HttpEndpoint {
  std::string base;  // scheme://host:port
  std::string path;  // /predict

  static HttpEndpoint parse(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ValidationError("endpoint must look like http://host:port/path");
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
  }
};

// Source of the smoothing distribution for each target position.
class PriorProvider {
 public:
  static PriorProvider unigram(Eigen::VectorXd table) {
    PriorProvider p;
    p.mode_ = PriorMode::kUnigram;
    p.table_ = std::make_shared<const Eigen::VectorXd>(std::move(table));
    return p;
  }

  static PriorProvider uniform(int vocab_size) {
    PriorProvider p;
    p.mode_ = PriorMode::kUniform;
    p.table_ = std::make_shared<const Eigen::VectorXd>(
        Eigen::VectorXd::Constant(vocab_size, 1.0 / vocab_size));
    return p;
  }

  // `fallback` is the unigram table used once the endpoint stops answering.
  static PriorProvider external(const std::string& url, const Vocabulary* vocab,
                                Eigen::VectorXd fallback, double timeout_s = 5.0,
                                int backoff_ms = 100) {
    PriorProvider p;
    p.mode_ = PriorMode::kExternalMlm;
    p.endpoint_ = HttpEndpoint::parse(url);
    p.vocab_ = vocab;
    p.table_ = std::make_shared<const Eigen::VectorXd>(std::move(fallback));
    p.timeout_s_ = timeout_s;
    p.backoff_ms_ = backoff_ms;
    return p;
  }

  PriorMode mode() const { return mode_; }
  bool degraded() const { return degraded_; }
  int size() const { return static_cast<int>(table_->size()); }

  // Shared for context-free modes, so callers can keep one copy per run.
  std::shared_ptr<const Eigen::VectorXd> get(std::span<const int> context, int position) {
    if (mode_ != PriorMode::kExternalMlm || degraded_) return table_;
    if (position < 0 || position >= static_cast<int>(context.size()))
      throw ValidationError("prior: position out of range");
    json body = {{"mask_index", position}, {"tokens", json::array()}};
    for (int id : context) body["tokens"].push_back(vocab_->token(id));
    auto reply = query(body);
    if (!reply) {
      degraded_ = true;
      log_warn("masked-LM endpoint unreachable; falling back to unigram prior", "endpoint",
               endpoint_.base + endpoint_.path);
      return table_;
    }
    return std::make_shared<const Eigen::VectorXd>(prior_from_response(*reply, *vocab_));
  }

 private:
  // Three attempts with doubling backoff. nullopt when all of them fail.
  std::optional<json> query(const json& body) const {
    httplib::Client cli(endpoint_.base);
    auto secs = static_cast<time_t>(timeout_s_);
    auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    int wait = backoff_ms_;
    for (int attempt = 1; attempt <= 3; ++attempt) {
      auto res = cli.Post(endpoint_.path, body.dump(), "application/json");
      if (res && res->status == 200) {
        try {
          return json::parse(res->body);
        } catch (const json::parse_error&) {
          log_warn("masked-LM reply is not JSON", "attempt", attempt);
        }
      } else {
        log_warn("masked-LM request failed", "attempt", attempt,
                 "status", res ? std::to_string(res->status) : httplib::to_string(res.error()));
      }
      if (attempt < 3) std::this_thread::sleep_for(std::chrono::milliseconds(wait));
      wait *= 2;
    }
    return std::nullopt;
  }

  PriorMode mode_ = PriorMode::kUniform;
  std::shared_ptr<const Eigen::VectorXd> table_;
  HttpEndpoint endpoint_;
  const Vocabulary* vocab_ = nullptr;
  double timeout_s_ = 5.0;
  int backoff_ms_ = 100;
  bool degraded_ = false;
};

}  // namespace opsum

#endif  // OPSUM_PRIOR_HPP_
