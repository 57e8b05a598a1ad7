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


// Byte-pair-encoding subword vocabulary with WordPiece-style "##" markers for
// word-internal pieces.
//
// Text is split on whitespace into words. Each word is cut into runs: a
// maximal run of alphanumeric characters, or a single non-alphanumeric
// character. Merges never cross run boundaries, so punctuation stays its own
// token. The first piece of a word is unmarked; every later piece carries the
// "##" prefix, which is how detokenize() knows where the spaces were.

#ifndef OPSUM_TOKENIZER_HPP_
#define OPSUM_TOKENIZER_HPP_

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "opsum/base.hpp"
#include "opsum/corpus.hpp"

namespace opsum {

using TokenSeq = std::vector<int>;

inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kEntityId = 4;
inline constexpr int kNumSpecials = 5;

inline constexpr std::array<std::string_view, kNumSpecials> kSpecialSurfaces = {
    "[PAD]", "[BOS]", "[EOS]", "[UNK]", kEntitySurface};
inline constexpr std::array<std::string_view, kNumSpecials> kSpecialNames = {
    "pad", "bos", "eos", "unk", "entity"};

inline constexpr std::string_view kContinuation = "##";

class Vocabulary {
 public:
  using Merge = std::pair<std::string, std::string>;

  Vocabulary() { reset({}, {}); }

  Vocabulary(std::vector<std::string> alphabet, std::vector<Merge> merges) {
    reset(std::move(alphabet), std::move(merges));
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  const std::vector<Merge>& merges() const { return merges_; }
  std::size_t max_piece_chars() const { return max_piece_chars_; }

  std::optional<int> find(std::string_view piece) const {
    auto it = index_.find(std::string(piece));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  static bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

  static bool is_continuation(std::string_view piece) {
    return piece.size() > kContinuation.size() && piece.substr(0, 2) == kContinuation;
  }

  json to_json() const {
    json specials = json::object();
    for (int i = 0; i < kNumSpecials; ++i)
      specials[std::string(kSpecialNames[static_cast<std::size_t>(i)])] = {
          {"id", i}, {"surface", kSpecialSurfaces[static_cast<std::size_t>(i)]}};
    json merges = json::array();
    for (const auto& [a, b] : merges_) merges.push_back({a, b});
    return {{"version", 1}, {"specials", specials}, {"alphabet", alphabet_}, {"merges", merges}};
  }

  static Vocabulary from_json(const json& j) {
    if (!j.is_object() || j.value("version", 0) != 1)
      throw ValidationError("vocabulary: unsupported or missing version");
    const json& specials = j.at("specials");
    for (int i = 0; i < kNumSpecials; ++i) {
      auto key = std::string(kSpecialNames[static_cast<std::size_t>(i)]);
      if (!specials.contains(key) || specials[key].at("id").get<int>() != i)
        throw ValidationError("vocabulary: special \"" + key + "\" missing or renumbered");
    }
    std::vector<Merge> merges;
    for (const auto& m : j.at("merges")) merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    return Vocabulary(j.at("alphabet").get<std::vector<std::string>>(), std::move(merges));
  }

  std::string serialize() const { return to_json().dump(1) + "\n"; }

  void save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

  static Vocabulary load(const std::filesystem::path& path) {
    try {
      return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }

  std::string hash() const { return hex64(fnv1a(serialize())); }

  static std::string merged(const Merge& m) {
    return m.first + (is_continuation(m.second) ? m.second.substr(2) : m.second);
  }

 private:
  void reset(std::vector<std::string> alphabet, std::vector<Merge> merges) {
    alphabet_ = std::move(alphabet);
    merges_ = std::move(merges);
    tokens_.clear();
    index_.clear();
    max_piece_chars_ = 1;
    for (auto s : kSpecialSurfaces) add(std::string(s));
    for (const auto& a : alphabet_) add(a);
    for (const auto& m : merges_) add(merged(m));
  }

  void add(std::string piece) {
    if (index_.count(piece)) return;
    auto stripped = is_continuation(piece) ? std::string_view(piece).substr(2) : std::string_view(piece);
    max_piece_chars_ = std::max(max_piece_chars_, utf8_chars(stripped).size());
    index_.emplace(piece, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(piece));
  }

  std::vector<std::string> alphabet_;
  std::vector<Merge> merges_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_piece_chars_ = 1;
};

namespace detail {

// A run of characters that merges may not cross. `continued` is true for runs
// that do not start a word.
struct Run {
  std::vector<std::string> chars;
  bool continued = false;
  bool entity = false;
};

inline std::vector<Run> split_runs(std::string_view text) {
  std::vector<Run> runs;
  auto chars = utf8_chars(text);
  bool in_word = false;
  std::size_t i = 0;
  while (i < chars.size()) {
    char32_t cp = utf8_codepoint(chars[i]);
    if (is_space(cp)) {
      in_word = false;
      ++i;
      continue;
    }
    // The entity placeholder is atomic.
    if (chars[i] == "[" && i + kEntitySurface.size() <= chars.size()) {
      std::string probe;
      for (std::size_t k = 0; k < kEntitySurface.size(); ++k) probe += chars[i + k];
      if (probe == kEntitySurface) {
        runs.push_back(Run{{}, in_word, true});
        in_word = true;
        i += kEntitySurface.size();
        continue;
      }
    }
    Run run;
    run.continued = in_word;
    if (is_alnum(cp)) {
      while (i < chars.size() && is_alnum(utf8_codepoint(chars[i]))) run.chars.push_back(chars[i++]);
    } else {
      run.chars.push_back(chars[i++]);
    }
    runs.push_back(std::move(run));
    in_word = true;
  }
  return runs;
}

inline std::vector<std::string> initial_symbols(const Run& run) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < run.chars.size(); ++k) {
    bool marked = run.continued || k > 0;
    out.push_back(marked ? std::string(kContinuation) + run.chars[k] : run.chars[k]);
  }
  return out;
}

}  // namespace detail

// Learns merges until the vocabulary holds `vocab_size` entries or no pair
// occurs at least twice. Ties in pair frequency go to the lexicographically
// smallest (left, right). A warning is logged when the corpus cannot fill
// the requested size.
inline Vocabulary train_tokenizer(std::span<const std::string> texts, int vocab_size) {
  if (texts.empty()) throw ValidationError("train_tokenizer: corpus is empty");
  if (vocab_size <= kNumSpecials) throw ValidationError("train_tokenizer: vocab_size too small");

  std::map<std::vector<std::string>, long> run_counts;
  std::map<std::string, long> char_counts;
  for (const auto& text : texts) {
    for (const auto& run : detail::split_runs(text)) {
      if (run.entity) continue;
      auto syms = detail::initial_symbols(run);
      ++run_counts[syms];
      for (const auto& c : run.chars) char_counts[c] += 1;
    }
  }

  // Both the word-initial and the "##" form of every observed character.
  std::vector<std::pair<long, std::string>> by_freq;
  for (const auto& [c, n] : char_counts) by_freq.emplace_back(n, c);
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t room = static_cast<std::size_t>(vocab_size - kNumSpecials);
  std::vector<std::string> alphabet;
  for (const auto& [n, c] : by_freq) {
    if (alphabet.size() + 2 > room) break;
    alphabet.push_back(c);
    alphabet.push_back(std::string(kContinuation) + c);
  }
  std::sort(alphabet.begin(), alphabet.end());
  if (alphabet.size() < 2 * char_counts.size())
    log_warn("alphabet truncated to fit vocab_size", "kept", alphabet.size(), "observed",
             2 * char_counts.size());

  std::vector<std::pair<std::vector<std::string>, long>> words(run_counts.begin(), run_counts.end());
  std::vector<Vocabulary::Merge> merges;
  std::set<std::string> known(alphabet.begin(), alphabet.end());
  for (auto s : kSpecialSurfaces) known.emplace(s);

  while (static_cast<int>(known.size()) < vocab_size) {
    std::map<std::pair<std::string, std::string>, long> pairs;
    for (const auto& [syms, n] : words) {
      for (std::size_t k = 0; k + 1 < syms.size(); ++k) pairs[{syms[k], syms[k + 1]}] += n;
    }
    const std::pair<std::string, std::string>* best = nullptr;
    long best_n = 1;
    for (const auto& [p, n] : pairs) {
      // Strict '>' over an ordered map keeps the smallest pair on ties.
      if (n > best_n) {
        best = &p;
        best_n = n;
      }
    }
    if (best == nullptr) break;
    Vocabulary::Merge m = *best;
    std::string joined = Vocabulary::merged(m);
    for (auto& [syms, n] : words) {
      std::vector<std::string> next;
      next.reserve(syms.size());
      for (std::size_t k = 0; k < syms.size(); ++k) {
        if (k + 1 < syms.size() && syms[k] == m.first && syms[k + 1] == m.second) {
          next.push_back(joined);
          ++k;
        } else {
          next.push_back(syms[k]);
        }
      }
      syms = std::move(next);
    }
    merges.push_back(m);
    known.insert(joined);
  }
  Vocabulary vocab(std::move(alphabet), std::move(merges));
  if (vocab.size() < vocab_size)
    log_warn("corpus too small to reach vocab_size; vocabulary reduced", "requested", vocab_size,
             "actual", vocab.size());
  return vocab;
}

// Greedy longest-match segmentation. Characters with no vocabulary entry map
// to UNK one character at a time.
inline TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq out;
  for (const auto& run : detail::split_runs(text)) {
    if (run.entity) {
      out.push_back(kEntityId);
      continue;
    }
    std::size_t pos = 0;
    while (pos < run.chars.size()) {
      bool marked = run.continued || pos > 0;
      std::size_t longest = std::min(vocab.max_piece_chars(), run.chars.size() - pos);
      int found = -1;
      std::size_t used = 1;
      for (std::size_t len = longest; len >= 1; --len) {
        std::string piece = marked ? std::string(kContinuation) : std::string();
        for (std::size_t k = 0; k < len; ++k) piece += run.chars[pos + k];
        if (auto id = vocab.find(piece); id && !Vocabulary::is_special(*id)) {
          found = *id;
          used = len;
          break;
        }
      }
      out.push_back(found >= 0 ? found : kUnkId);
      pos += used;
    }
  }
  return out;
}

// Inverse of tokenize() up to whitespace normalization. PAD/BOS/EOS are
// dropped; UNK and ENTITY render as their surfaces.
inline std::string detokenize(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    const std::string& piece = vocab.token(id);
    if (!Vocabulary::is_special(id) && Vocabulary::is_continuation(piece)) {
      out.append(piece, 2);
    } else {
      if (!out.empty()) out += ' ';
      out += piece;
    }
  }
  return out;
}

}  // namespace opsum

#endif  // OPSUM_TOKENIZER_HPP_
