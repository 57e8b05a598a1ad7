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


// F1 ROUGE-1/2/L. Text is lowercased and split on runs of non-alphanumeric
// characters; no stemming, no stopword removal.

#ifndef OPSUM_ROUGE_HPP_
#define OPSUM_ROUGE_HPP_

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "opsum/base.hpp"

namespace opsum {

inline constexpr std::string_view kRougeConvention =
    "lowercase; split on non-alphanumeric runs; no stemming; no stopwords; "
    "multi-reference = per-metric max F1; ROUGE-L = whole-summary LCS";

inline std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (const auto& ch : utf8_chars(text)) {
    if (is_alnum(utf8_codepoint(ch))) {
      cur += to_lower_ascii(ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct PRF {
  double p = 0.0, r = 0.0, f1 = 0.0;

  static PRF from_counts(double hits, double cand, double ref) {
    PRF s;
    if (cand <= 0.0 || ref <= 0.0) return s;
    s.p = hits / cand;
    s.r = hits / ref;
    s.f1 = s.p + s.r > 0.0 ? 2.0 * s.p * s.r / (s.p + s.r) : 0.0;
    return s;
  }

  json to_json() const { return {{"p", p}, {"r", r}, {"f1", f1}}; }
};

struct RougeScore {
  PRF r1, r2, rl;

  json to_json() const { return {{"r1", r1.to_json()}, {"r2", r2.to_json()}, {"rl", rl.to_json()}}; }
};

using Words = std::vector<std::string>;

inline PRF rouge_n(const Words& cand, const Words& ref, int n) {
  if (n < 1) throw ValidationError("rouge_n: n must be >= 1");
  auto grams = [n](const Words& w) {
    std::map<Words, int> out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= w.size(); ++i)
      ++out[Words(w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    return out;
  };
  auto c = grams(cand), r = grams(ref);
  double hits = 0, nc = 0, nr = 0;
  for (const auto& [g, k] : c) {
    nc += k;
    if (auto it = r.find(g); it != r.end()) hits += std::min(k, it->second);
  }
  for (const auto& [g, k] : r) nr += k;
  return PRF::from_counts(hits, nc, nr);
}

inline std::size_t lcs_length(const Words& a, const Words& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline PRF rouge_l(const Words& cand, const Words& ref) {
  return PRF::from_counts(static_cast<double>(lcs_length(cand, ref)), static_cast<double>(cand.size()),
                          static_cast<double>(ref.size()));
}

inline RougeScore rouge(const Words& cand, const Words& ref) {
  return {rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
}

inline RougeScore rouge(std::string_view cand, std::string_view ref) {
  return rouge(rouge_tokens(cand), rouge_tokens(ref));
}

// Per-metric maximum F1 over the references, carrying that reference's P/R.
inline RougeScore score_instance(std::string_view cand, std::span<const std::string> refs) {
  if (refs.empty()) throw ValidationError("score_instance: no references");
  RougeScore best;
  bool first = true;
  auto cw = rouge_tokens(cand);
  for (const auto& ref : refs) {
    auto s = rouge(cw, rouge_tokens(ref));
    if (first || s.r1.f1 > best.r1.f1) best.r1 = s.r1;
    if (first || s.r2.f1 > best.r2.f1) best.r2 = s.r2;
    if (first || s.rl.f1 > best.rl.f1) best.rl = s.rl;
    first = false;
  }
  return best;
}

}  // namespace opsum

#endif  // OPSUM_ROUGE_HPP_
