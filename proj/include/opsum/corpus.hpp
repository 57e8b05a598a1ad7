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


// Review records, corpus files (UTF-8 JSONL) and entity-level splits.

#ifndef OPSUM_CORPUS_HPP_
#define OPSUM_CORPUS_HPP_

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opsum/base.hpp"

namespace opsum {

enum class RatingScale { kBinary, kFivePoint };

inline RatingScale parse_rating_scale(std::string_view s) {
  if (s == "binary") return RatingScale::kBinary;
  if (s == "1..5") return RatingScale::kFivePoint;
  throw ValidationError("rating_scale must be \"binary\" or \"1..5\", got \"" + std::string(s) + "\"");
}

inline std::string to_string(RatingScale s) {
  return s == RatingScale::kBinary ? "binary" : "1..5";
}

inline int num_sentiment_classes(RatingScale s) { return s == RatingScale::kBinary ? 2 : 5; }

inline bool rating_in_scale(int rating, RatingScale s) {
  return s == RatingScale::kBinary ? (rating == 0 || rating == 1) : (rating >= 1 && rating <= 5);
}

// Binary: 0 = negative, 1 = positive. Five-point: rating r -> class r - 1.
inline int rating_to_label(int rating, RatingScale s) {
  if (!rating_in_scale(rating, s))
    throw ValidationError("rating " + std::to_string(rating) + " outside scale " + to_string(s));
  return s == RatingScale::kBinary ? rating : rating - 1;
}

inline int label_to_rating(int label, RatingScale s) {
  if (label < 0 || label >= num_sentiment_classes(s))
    throw ValidationError("label " + std::to_string(label) + " outside scale " + to_string(s));
  return s == RatingScale::kBinary ? label : label + 1;
}

struct CorpusConfig {
  RatingScale rating_scale = RatingScale::kFivePoint;
  int vocab_size = 4000;
  bool mask_entities = false;

  void validate() const {
    if (vocab_size < 256)
      throw ValidationError("corpus.vocab_size must be >= 256, got " + std::to_string(vocab_size));
  }
};

struct ReviewRecord {
  std::string entity_id;
  std::string review_id;
  std::string text;
  int rating = 0;
  // Surface form used for entity masking; empty means "use entity_id".
  std::string entity_name;

  const std::string& display_name() const { return entity_name.empty() ? entity_id : entity_name; }

  json to_json() const {
    json j = {{"entity_id", entity_id}, {"review_id", review_id}, {"text", text}, {"rating", rating}};
    if (!entity_name.empty()) j["entity_name"] = entity_name;
    return j;
  }

  static ReviewRecord from_json(const json& j) {
    for (const char* key : {"entity_id", "review_id", "text", "rating"}) {
      if (!j.contains(key)) throw ValidationError(std::string("missing key \"") + key + "\"");
    }
    ReviewRecord r;
    try {
      r.entity_id = j.at("entity_id").get<std::string>();
      r.review_id = j.at("review_id").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.rating = j.at("rating").get<int>();
      if (j.contains("entity_name")) r.entity_name = j.at("entity_name").get<std::string>();
    } catch (const json::type_error& e) {
      throw ValidationError(std::string("wrong field type: ") + e.what());
    }
    return r;
  }

  bool operator==(const ReviewRecord&) const = default;
};

inline void validate_record(const ReviewRecord& r, RatingScale scale) {
  if (trim(r.text).empty()) throw ValidationError("review " + r.review_id + ": empty text");
  if (r.entity_id.empty() || r.review_id.empty())
    throw ValidationError("review with empty entity_id or review_id");
  if (!rating_in_scale(r.rating, scale))
    throw ValidationError("review " + r.review_id + ": rating " + std::to_string(r.rating) +
                          " outside scale " + to_string(scale));
}

// Loads and validates a JSONL corpus. Order is preserved. Errors name the
// offending 1-based line.
inline std::vector<ReviewRecord> load_corpus(const std::filesystem::path& path,
                                             const CorpusConfig& config = {}) {
  auto lines = read_lines(path);
  std::vector<ReviewRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    auto where = path.string() + ":" + std::to_string(i + 1) + ": ";
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw ParseError(where + "malformed JSON (" + e.what() + ")", i + 1);
    }
    ReviewRecord r;
    try {
      if (!j.is_object()) throw ValidationError("expected a JSON object");
      r = ReviewRecord::from_json(j);
      validate_record(r, config.rating_scale);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(where + e.what(), i + 1);
    }
    if (!seen.emplace(r.entity_id, r.review_id).second)
      throw ParseError(where + "duplicate (entity_id, review_id) (" + r.entity_id + ", " +
                           r.review_id + ")",
                       i + 1);
    out.push_back(std::move(r));
  }
  return out;
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<ReviewRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(r.to_json());
  write_jsonl(path, rows);
}

// entity_id -> indices into `records`, in corpus order.
inline std::map<std::string, std::vector<std::size_t>> group_by_entity(
    const std::vector<ReviewRecord>& records) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < records.size(); ++i) out[records[i].entity_id].push_back(i);
  return out;
}

struct EntitySplit {
  std::set<std::string> train;
  std::set<std::string> dev;
  std::set<std::string> test;
};

// Deterministic entity-level split: sorted ids are shuffled with `seed`, the
// first share goes to test, the next to dev, the rest to train.
inline EntitySplit split_entities(const std::vector<ReviewRecord>& records, double dev_fraction,
                                  double test_fraction, std::uint64_t seed) {
  if (dev_fraction < 0 || test_fraction < 0 || dev_fraction + test_fraction >= 1.0)
    throw ValidationError("split fractions must be >= 0 and sum to < 1");
  std::vector<std::string> ids;
  for (const auto& [id, _] : group_by_entity(records)) ids.push_back(id);
  std::mt19937_64 rng(derive_seed(seed, 0x5b11));
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(ids[i - 1], ids[pick(rng)]);
  }
  auto n = ids.size();
  auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  auto n_dev = static_cast<std::size_t>(std::floor(dev_fraction * static_cast<double>(n)));
  EntitySplit s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_test) s.test.insert(ids[i]);
    else if (i < n_test + n_dev) s.dev.insert(ids[i]);
    else s.train.insert(ids[i]);
  }
  return s;
}

inline std::vector<ReviewRecord> select_entities(const std::vector<ReviewRecord>& records,
                                                 const std::set<std::string>& entities) {
  std::vector<ReviewRecord> out;
  for (const auto& r : records) {
    if (entities.count(r.entity_id)) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entity masking. Exact, case-sensitive matches of the name are replaced by the
// placeholder surface, and restored verbatim after generation.

inline constexpr std::string_view kEntitySurface = "[ENT]";

inline std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
  if (from.empty()) return std::string(text);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = text.find(from, pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  out.append(text.substr(pos));
  return out;
}

inline std::string mask_entity(std::string_view text, std::string_view name) {
  return replace_all(text, name, kEntitySurface);
}

inline std::string restore_entity(std::string_view text, std::string_view name) {
  return replace_all(text, kEntitySurface, name);
}

}  // namespace opsum

#endif  // OPSUM_CORPUS_HPP_
