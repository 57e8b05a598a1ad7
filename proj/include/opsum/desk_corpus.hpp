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


// Template-generated review corpus with planted aspect and sentiment structure.
//
// Every entity has three salient aspects with a consensus polarity each and a
// base quality that drives review ratings. A review talks mostly about one
// dominant aspect, sometimes a second one, closes with a rating-dependent
// verdict and occasionally adds a first-person remark. The planted labels go
// to a sidecar; three consensus reference summaries per entity go to a
// references file.

#ifndef OPSUM_DESK_CORPUS_HPP_
#define OPSUM_DESK_CORPUS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "opsum/base.hpp"
#include "opsum/corpus.hpp"

namespace opsum {

struct DeskNoun {
  std::string word;
  bool plural = false;
};

// Frames use {N} noun, {A} adjective, {I} intensity adverb and {V} the
// copula agreeing with the noun. Each aspect has its own predicates, so the
// aspect shows up in the phrasing as well as in the nouns.
struct AspectLexicon {
  std::string name;
  std::vector<DeskNoun> nouns;
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> frames;
};

inline const std::vector<AspectLexicon>& desk_aspects() {
  static const std::vector<AspectLexicon> kAspects = {
      {"drinks",
       {{"beer", false}, {"cocktails", true}, {"wine", false}, {"coffee", false},
        {"drinks", true}, {"lemonade", false}},
       {"refreshing", "crisp", "smooth", "strong"},
       {"flat", "watery", "warm", "bitter"},
       {"{N} {V} {I} {A}.", "Sipped {A} {N} at the bar.", "{A} {N} from the bar.",
        "Glass after glass, the {N} tasted {A}."}},
      {"food",
       {{"burger", false}, {"pasta", false}, {"salad", false}, {"fries", true},
        {"pizza", false}, {"desserts", true}},
       {"delicious", "fresh", "tasty", "flavorful"},
       {"bland", "greasy", "soggy", "stale"},
       {"{N} {V} {I} {A}.", "Ate {A} {N} for dinner.", "{A} {N} on the menu.",
        "Plate after plate, the {N} came out {A}."}},
      {"staff",
       {{"staff", false}, {"waiter", false}, {"bartender", false}, {"servers", true},
        {"host", false}, {"manager", false}},
       {"friendly", "attentive", "helpful", "welcoming"},
       {"rude", "slow", "careless", "dismissive"},
       {"{N} {V} {I} {A}.", "Served by {A} {N} all night.", "{A} {N} took our order.",
        "Service from the {N} felt {A}."}},
      {"atmosphere",
       {{"atmosphere", false}, {"music", false}, {"decor", false}, {"patio", false},
        {"lighting", false}, {"vibe", false}},
       {"cozy", "lively", "charming", "relaxing"},
       {"noisy", "gloomy", "cramped", "dull"},
       {"{N} {V} {I} {A}.", "Sat among {A} {N} all evening.", "{A} {N} inside.",
        "Sitting there, the {N} felt {A}."}},
      {"price",
       {{"prices", true}, {"portions", true}, {"bill", false}, {"value", false},
        {"deals", true}, {"specials", true}},
       {"fair", "reasonable", "generous", "affordable"},
       {"steep", "unfair", "stingy", "expensive"},
       {"{N} {V} {I} {A}.", "Paid for {A} {N} at the end.", "{A} {N} for the area.",
        "For the money, the {N} seemed {A}."}},
      {"cleanliness",
       {{"tables", true}, {"bathrooms", true}, {"floors", true}, {"kitchen", false},
        {"dishes", true}, {"glasses", true}},
       {"spotless", "clean", "tidy", "polished"},
       {"dirty", "sticky", "filthy", "grimy"},
       {"{N} {V} {I} {A}.", "Noticed {A} {N} everywhere.", "{A} {N} throughout.",
        "On inspection, the {N} looked {A}."}},
  };
  return kAspects;
}

struct DeskLabel {
  std::string review_id;
  std::vector<std::string> planted_aspects;  // dominant aspect first
  int planted_sentiment = 0;

  json to_json() const {
    return {{"review_id", review_id}, {"planted_aspects", planted_aspects},
            {"planted_sentiment", planted_sentiment}};
  }
  static DeskLabel from_json(const json& j) {
    return {j.at("review_id").get<std::string>(),
            j.at("planted_aspects").get<std::vector<std::string>>(),
            j.at("planted_sentiment").get<int>()};
  }
};

struct ReferenceSet {
  std::string entity_id;
  std::vector<std::string> references;

  json to_json() const { return {{"entity_id", entity_id}, {"references", references}}; }
  static ReferenceSet from_json(const json& j) {
    return {j.at("entity_id").get<std::string>(),
            j.at("references").get<std::vector<std::string>>()};
  }
};

struct DeskCorpus {
  std::vector<ReviewRecord> records;
  std::vector<DeskLabel> labels;
  std::vector<ReferenceSet> references;
};

namespace detail {

template <typename T>
const T& choose(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string intensity(bool positive, int rating, std::mt19937_64& rng) {
  static const std::vector<std::string> strong = {"really", "very", "truly"};
  static const std::vector<std::string> mild = {"fairly", "mostly", "quite"};
  static const std::vector<std::string> soft = {"a bit", "somewhat", "slightly"};
  if (positive) return choose(rating >= 4 ? strong : mild, rng);
  return choose(rating <= 2 ? strong : soft, rng);
}

inline void replace_slot(std::string& text, std::string_view slot, const std::string& value) {
  for (auto pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos + value.size()))
    text.replace(pos, slot.size(), value);
}

inline std::string aspect_sentence(const AspectLexicon& a, bool positive, int rating,
                                   std::mt19937_64& rng) {
  const auto& adjs = positive ? a.positive : a.negative;
  const DeskNoun& n = choose(a.nouns, rng);
  const std::string& adj = choose(adjs, rng);
  std::string out = choose(a.frames, rng);
  const bool leading_noun = out.rfind("{N}", 0) == 0;
  const bool leading_adj = out.rfind("{A}", 0) == 0;
  replace_slot(out, "{N}", leading_noun ? capitalize(n.word) : n.word);
  replace_slot(out, "{A}", leading_adj ? capitalize(adj) : adj);
  replace_slot(out, "{V}", n.plural ? "were" : "was");
  if (out.find("{I}") != std::string::npos) replace_slot(out, "{I}", intensity(positive, rating, rng));
  return out;
}

inline std::string verdict_sentence(int rating, std::mt19937_64& rng) {
  static const std::vector<std::vector<std::string>> kVerdicts = {
      {"Overall a terrible place.", "Awful from start to finish.", "Avoid this place."},
      {"Overall rather disappointing.", "A mediocre place overall.", "Not worth the trip."},
      {"Overall it was okay.", "An average place overall.", "Decent but nothing special."},
      {"Overall a great spot.", "A good place overall.", "Worth a visit."},
      {"Overall an outstanding place.", "Absolutely fantastic overall.", "Highly recommended."},
  };
  return choose(kVerdicts[static_cast<std::size_t>(std::clamp(rating, 1, 5) - 1)], rng);
}

inline std::string first_person_sentence(int rating, std::mt19937_64& rng) {
  static const std::vector<std::string> good = {"I will definitely come back.",
                                                "My friends loved it.", "I would go again."};
  static const std::vector<std::string> mid = {"I might come back.", "My visit was fine."};
  static const std::vector<std::string> bad = {"I will not return.", "My evening was ruined."};
  return choose(rating >= 4 ? good : (rating == 3 ? mid : bad), rng);
}

inline std::string join_sentences(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

}  // namespace detail

// Pure in `seed`. Produces n_entities * reviews_per_entity records.
inline DeskCorpus generate_desk_corpus(int n_entities, int reviews_per_entity, std::uint64_t seed) {
  if (n_entities < 1) throw ValidationError("generate_desk_corpus: n_entities must be >= 1");
  if (reviews_per_entity < 1)
    throw ValidationError("generate_desk_corpus: reviews_per_entity must be >= 1");
  const auto& aspects = desk_aspects();
  const int n_aspects = static_cast<int>(aspects.size());
  DeskCorpus out;
  for (int e = 0; e < n_entities; ++e) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    char eid[32];
    std::snprintf(eid, sizeof(eid), "e%03d", e);

    std::uniform_real_distribution<double> base_dist(1.3, 4.7);
    double base = base_dist(rng);
    std::vector<int> order(static_cast<std::size_t>(n_aspects));
    for (int a = 0; a < n_aspects; ++a) order[static_cast<std::size_t>(a)] = a;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> salient(order.begin(), order.begin() + 3);
    const std::vector<double> weights = {0.5, 0.3, 0.2};
    std::normal_distribution<double> offset(0.0, 1.0);
    std::vector<bool> consensus;
    for (int k = 0; k < 3; ++k) consensus.push_back(1.5 * (base - 3.0) + offset(rng) > 0.0);

    std::discrete_distribution<int> pick_salient(weights.begin(), weights.end());
    std::uniform_int_distribution<int> any_aspect(0, n_aspects - 1);
    std::normal_distribution<double> rating_noise(0.0, 0.7);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // Salient aspects follow the entity consensus; others follow the rating.
    auto polarity = [&](int slot, int rating) {
      double p = 0.5;
      if (slot >= 0) p = consensus[static_cast<std::size_t>(slot)] ? 0.85 : 0.15;
      else p = rating >= 4 ? 0.8 : (rating <= 2 ? 0.2 : 0.5);
      p = std::clamp(p + 0.1 * (rating - base), 0.02, 0.98);
      return u01(rng) < p;
    };

    for (int r = 0; r < reviews_per_entity; ++r) {
      int rating = std::clamp(static_cast<int>(std::lround(base + rating_noise(rng))), 1, 5);
      int dom_slot = -1, dominant;
      if (u01(rng) < 0.85) {
        dom_slot = pick_salient(rng);
        dominant = salient[static_cast<std::size_t>(dom_slot)];
      } else {
        dominant = any_aspect(rng);
        auto it = std::find(salient.begin(), salient.end(), dominant);
        if (it != salient.end()) dom_slot = static_cast<int>(it - salient.begin());
      }
      std::vector<std::string> sentences;
      std::vector<std::string> planted = {aspects[static_cast<std::size_t>(dominant)].name};
      for (int k = 0; k < 2; ++k) {
        sentences.push_back(detail::aspect_sentence(aspects[static_cast<std::size_t>(dominant)],
                                                    polarity(dom_slot, rating), rating, rng));
      }
      if (u01(rng) < 0.6) {
        int sec_slot = -1, secondary;
        if (u01(rng) < 0.7) {
          sec_slot = pick_salient(rng);
          secondary = salient[static_cast<std::size_t>(sec_slot)];
        } else {
          secondary = any_aspect(rng);
          auto it = std::find(salient.begin(), salient.end(), secondary);
          if (it != salient.end()) sec_slot = static_cast<int>(it - salient.begin());
        }
        if (secondary != dominant) {
          sentences.push_back(detail::aspect_sentence(aspects[static_cast<std::size_t>(secondary)],
                                                      polarity(sec_slot, rating), rating, rng));
          planted.push_back(aspects[static_cast<std::size_t>(secondary)].name);
        }
      }
      sentences.push_back(detail::verdict_sentence(rating, rng));
      if (u01(rng) < 0.35) {
        sentences.push_back(detail::first_person_sentence(rating, rng));
      }

      char rid[48];
      std::snprintf(rid, sizeof(rid), "%s-r%02d", eid, r);
      out.records.push_back(ReviewRecord{eid, rid, detail::join_sentences(sentences), rating, {}});
      out.labels.push_back(DeskLabel{rid, planted, rating_to_label(rating, RatingScale::kFivePoint)});
    }

    ReferenceSet refs{eid, {}};
    int overall = std::clamp(static_cast<int>(std::lround(base)), 1, 5);
    for (int k = 0; k < 3; ++k) {
      std::vector<std::string> sentences;
      for (int s = 0; s < 3; ++s) {
        sentences.push_back(detail::aspect_sentence(aspects[static_cast<std::size_t>(salient[static_cast<std::size_t>(s)])],
                                                    consensus[static_cast<std::size_t>(s)], overall, rng));
      }
      sentences.push_back(detail::verdict_sentence(overall, rng));
      refs.references.push_back(detail::join_sentences(sentences));
    }
    out.references.push_back(std::move(refs));
  }
  return out;
}

inline void save_desk_labels(const std::filesystem::path& path, const std::vector<DeskLabel>& labels) {
  std::vector<json> rows;
  for (const auto& l : labels) rows.push_back(l.to_json());
  write_jsonl(path, rows);
}

inline std::vector<DeskLabel> load_desk_labels(const std::filesystem::path& path) {
  std::vector<DeskLabel> out;
  for (const auto& j : read_jsonl(path)) out.push_back(DeskLabel::from_json(j));
  return out;
}

inline void save_references(const std::filesystem::path& path, const std::vector<ReferenceSet>& refs) {
  std::vector<json> rows;
  for (const auto& r : refs) rows.push_back(r.to_json());
  write_jsonl(path, rows);
}

inline std::vector<ReferenceSet> load_references(const std::filesystem::path& path) {
  std::vector<ReferenceSet> out;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(ReferenceSet::from_json(j));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": record " + std::to_string(line) + ": " + e.what(), line);
    }
  }
  return out;
}

}  // namespace opsum

#endif  // OPSUM_DESK_CORPUS_HPP_
