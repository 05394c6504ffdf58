/*
 * Copyright (c) 2026, the mvp authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MVP_DATA_HPP_
#define MVP_DATA_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mvp/error.hpp"
#include "mvp/rng.hpp"
#include "mvp/vocab.hpp"

namespace mvp {

struct Candidate {
  std::int64_t pid = 0;
  std::vector<int> tokens;

  bool operator==(const Candidate& o) const { return pid == o.pid && tokens == o.tokens; }
};

/// One query, its n candidate passages, ground-truth ranks r_i (1 = most
/// relevant), and optional graded relevance.
struct RankingRecord {
  std::int64_t query_id = 0;
  std::vector<int> query;
  std::vector<Candidate> candidates;
  std::vector<int> ranks;
  std::vector<double> relevance;  // empty when absent

  bool operator==(const RankingRecord& o) const {
    return query_id == o.query_id && query == o.query && candidates == o.candidates &&
           ranks == o.ranks && relevance == o.relevance;
  }

  std::size_t candidate_count() const { return candidates.size(); }

  std::vector<std::vector<int>> candidate_tokens() const {
    std::vector<std::vector<int>> out;
    out.reserve(candidates.size());
    for (const Candidate& c : candidates) out.push_back(c.tokens);
    return out;
  }
};

enum class RelevanceRule { kSumOverlap, kMinOverlap };

inline std::string to_string(RelevanceRule r) {
  return r == RelevanceRule::kSumOverlap ? "sum-overlap" : "min-overlap";
}

inline RelevanceRule relevance_rule_from_string(const std::string& s) {
  if (s == "sum-overlap") return RelevanceRule::kSumOverlap;
  if (s == "min-overlap") return RelevanceRule::kMinOverlap;
  throw SpecError("unknown relevance rule: " + s);
}

/// Generator spec for the synthetic multi-aspect corpus. Queries draw tokens
/// from `aspects` disjoint pools; a candidate's true relevance is the rule
/// applied to its per-aspect token overlap with the query. min-overlap with
/// two or more aspects is the setting where one pooled similarity is provably
/// lossy, which is what gives multiple views something to learn.
struct CorpusSpec {
  int vocab_size = 64;
  int aspects = 2;             // A
  int tokens_per_aspect = 24;
  int query_len = 6;           // split evenly across aspects
  int passage_len = 8;
  int candidates_per_query = 8;  // n
  int records = 1000;
  RelevanceRule rule = RelevanceRule::kMinOverlap;
  std::uint64_t seed = 1;

  void validate() const {
    if (aspects < 1 || tokens_per_aspect < 1 || query_len < 1 || passage_len < 1 ||
        records < 0 || candidates_per_query < 2 || candidates_per_query > 100) {
      throw SpecError("corpus spec out of range (n must lie in [2, 100], counts positive)");
    }
    Vocab vocab(vocab_size);
    if (aspects * tokens_per_aspect > vocab.content_count()) {
      throw SpecError("vocab too small: " + std::to_string(aspects) + " aspects x " +
                      std::to_string(tokens_per_aspect) + " tokens exceed " +
                      std::to_string(vocab.content_count()) + " content ids");
    }
    if (query_len % aspects != 0) {
      throw SpecError("query_len must be divisible by the aspect count");
    }
    if (query_len / aspects > tokens_per_aspect) {
      throw SpecError("query draws more tokens per aspect than the aspect pool holds");
    }
  }

  int aspect_base(int a) const { return Vocab::kContentBase + a * tokens_per_aspect; }
};

namespace detail {

inline std::vector<int> sample_distinct(SplitMix64& rng, int base, int count, int take,
                                        const std::unordered_set<int>& exclude = {}) {
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int id = base + i;
    if (!exclude.count(id)) pool.push_back(id);
  }
  if (static_cast<int>(pool.size()) < take) {
    throw SpecError("token pool exhausted while sampling");
  }
  rng.shuffle(pool);
  pool.resize(static_cast<std::size_t>(take));
  return pool;
}

}  // namespace detail

/// Recompute a candidate's per-aspect overlap with the query and apply the
/// relevance rule. This is the ground truth the generator plants and the
/// consistency check recomputes.
inline double planted_relevance(const CorpusSpec& spec, const std::vector<int>& query,
                                const std::vector<int>& passage) {
  std::vector<double> overlap(static_cast<std::size_t>(spec.aspects), 0.0);
  std::set<int> qset(query.begin(), query.end());
  std::set<int> seen;
  for (int id : passage) {
    if (!qset.count(id) || seen.count(id)) continue;
    seen.insert(id);
    const int a = (id - Vocab::kContentBase) / spec.tokens_per_aspect;
    if (a >= 0 && a < spec.aspects) overlap[static_cast<std::size_t>(a)] += 1.0;
  }
  if (spec.rule == RelevanceRule::kSumOverlap) {
    return std::accumulate(overlap.begin(), overlap.end(), 0.0);
  }
  return *std::min_element(overlap.begin(), overlap.end());
}

/// Ranks = descending relevance, ties broken by ascending candidate index.
inline std::vector<int> ranks_from_relevance(const std::vector<double>& relevance) {
  std::vector<std::size_t> order(relevance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return relevance[a] > relevance[b]; });
  std::vector<int> ranks(relevance.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ranks[order[pos]] = static_cast<int>(pos) + 1;
  }
  return ranks;
}

/// Deterministic corpus generation: record i draws from the per-index stream
/// of (seed, i), so identical (spec, seed) produce byte-identical corpora and
/// parallel generation cannot reorder records. With the min-overlap rule and
/// at least two aspects, at least 10% of records must order differently under
/// sum-overlap, or generation fails loudly.
inline std::vector<RankingRecord> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const int per_aspect = spec.query_len / spec.aspects;
  std::vector<RankingRecord> out;
  out.reserve(static_cast<std::size_t>(spec.records));
  std::size_t divergent = 0;
  for (int idx = 0; idx < spec.records; ++idx) {
    SplitMix64 rng = SplitMix64::stream(spec.seed, static_cast<std::uint64_t>(idx));
    RankingRecord rec;
    rec.query_id = idx + 1;
    std::vector<std::vector<int>> query_aspect(static_cast<std::size_t>(spec.aspects));
    for (int a = 0; a < spec.aspects; ++a) {
      query_aspect[static_cast<std::size_t>(a)] =
          detail::sample_distinct(rng, spec.aspect_base(a), spec.tokens_per_aspect, per_aspect);
      for (int id : query_aspect[static_cast<std::size_t>(a)]) rec.query.push_back(id);
    }
    std::unordered_set<int> query_tokens(rec.query.begin(), rec.query.end());

    for (int i = 0; i < spec.candidates_per_query; ++i) {
      Candidate cand;
      cand.pid = static_cast<std::int64_t>(idx) * spec.candidates_per_query + i + 1;
      std::vector<int> tokens;
      int used = 0;
      for (int a = 0; a < spec.aspects; ++a) {
        const int limit = std::min(per_aspect, spec.passage_len - used);
        const int want = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(limit + 1)));
        std::vector<int> pick = query_aspect[static_cast<std::size_t>(a)];
        rng.shuffle(pick);
        for (int t = 0; t < want; ++t) tokens.push_back(pick[static_cast<std::size_t>(t)]);
        used += want;
      }
      // fill with distractors drawn across all aspect pools, excluding the query
      const int fill = spec.passage_len - static_cast<int>(tokens.size());
      if (fill > 0) {
        std::vector<int> distractors;
        for (int a = 0; a < spec.aspects; ++a) {
          for (int t = 0; t < spec.tokens_per_aspect; ++t) {
            const int id = spec.aspect_base(a) + t;
            if (!query_tokens.count(id)) distractors.push_back(id);
          }
        }
        if (static_cast<int>(distractors.size()) < fill) {
          throw SpecError("not enough distractor tokens for passage_len " +
                          std::to_string(spec.passage_len));
        }
        rng.shuffle(distractors);
        tokens.insert(tokens.end(), distractors.begin(), distractors.begin() + fill);
      }
      rng.shuffle(tokens);
      cand.tokens = std::move(tokens);
      rec.candidates.push_back(std::move(cand));
    }

    rec.relevance.reserve(rec.candidates.size());
    for (const Candidate& c : rec.candidates) {
      rec.relevance.push_back(planted_relevance(spec, rec.query, c.tokens));
    }
    rec.ranks = ranks_from_relevance(rec.relevance);

    if (spec.rule == RelevanceRule::kMinOverlap && spec.aspects >= 2) {
      CorpusSpec sum_spec = spec;
      sum_spec.rule = RelevanceRule::kSumOverlap;
      std::vector<double> sum_rel;
      sum_rel.reserve(rec.candidates.size());
      for (const Candidate& c : rec.candidates) {
        sum_rel.push_back(planted_relevance(sum_spec, rec.query, c.tokens));
      }
      if (ranks_from_relevance(sum_rel) != rec.ranks) ++divergent;
    }
    out.push_back(std::move(rec));
  }
  if (spec.rule == RelevanceRule::kMinOverlap && spec.aspects >= 2 && spec.records > 0) {
    const double frac = static_cast<double>(divergent) / static_cast<double>(spec.records);
    if (frac < 0.10) {
      throw SpecError("only " + std::to_string(100.0 * frac) +
                      "% of records order differently under sum-overlap; the multi-view signal "
                      "is too weak (need at least 10%)");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON-lines serialization, versioned by the header line "#mvp-records v1".
// ---------------------------------------------------------------------------

inline constexpr const char* kRecordsHeader = "#mvp-records v1";

inline nlohmann::ordered_json record_to_json(const RankingRecord& rec) {
  nlohmann::ordered_json j;
  j["query_id"] = rec.query_id;
  j["query"] = rec.query;
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const Candidate& c : rec.candidates) {
    cands.push_back({{"pid", c.pid}, {"tokens", c.tokens}});
  }
  j["candidates"] = std::move(cands);
  j["ranks"] = rec.ranks;
  if (!rec.relevance.empty()) {
    nlohmann::ordered_json rels = nlohmann::ordered_json::array();
    for (double r : rec.relevance) {
      if (r == std::floor(r) && std::abs(r) < 1e15) {
        rels.push_back(static_cast<std::int64_t>(r));
      } else {
        rels.push_back(r);
      }
    }
    j["relevance"] = std::move(rels);
  }
  return j;
}

inline RankingRecord record_from_json(const nlohmann::ordered_json& j) {
  RankingRecord rec;
  rec.query_id = j.at("query_id").get<std::int64_t>();
  rec.query = j.at("query").get<std::vector<int>>();
  for (const auto& cj : j.at("candidates")) {
    Candidate c;
    c.pid = cj.at("pid").get<std::int64_t>();
    c.tokens = cj.at("tokens").get<std::vector<int>>();
    rec.candidates.push_back(std::move(c));
  }
  rec.ranks = j.at("ranks").get<std::vector<int>>();
  if (j.contains("relevance")) rec.relevance = j.at("relevance").get<std::vector<double>>();
  const int n = static_cast<int>(rec.candidates.size());
  if (static_cast<int>(rec.ranks.size()) != n) {
    throw ParseError("ranks length does not match candidate count");
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int r : rec.ranks) {
    if (r < 1 || r > n || seen[static_cast<std::size_t>(r - 1)]) {
      throw ParseError("ranks are not a permutation of 1.." + std::to_string(n) +
                       " (offending value " + std::to_string(r) + ")");
    }
    seen[static_cast<std::size_t>(r - 1)] = true;
  }
  if (!rec.relevance.empty() && rec.relevance.size() != rec.candidates.size()) {
    throw ParseError("relevance length does not match candidate count");
  }
  return rec;
}

inline void write_records(const std::string& path, const std::vector<RankingRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IntegrityError("cannot open for writing: " + path);
  os << kRecordsHeader << "\n";
  for (const RankingRecord& rec : records) {
    os << record_to_json(rec).dump() << "\n";
  }
  if (!os) throw IntegrityError("short write to " + path);
}

inline std::vector<RankingRecord> read_records(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IntegrityError("cannot open for reading: " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<RankingRecord> out;
  std::unordered_set<std::int64_t> seen_ids;
  bool saw_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line_no == 1) {
        if (line != kRecordsHeader) {
          throw ParseError("line 1: unsupported header \"" + line + "\"");
        }
        saw_header = true;
      }
      continue;
    }
    if (!saw_header) throw ParseError("line 1: missing header " + std::string(kRecordsHeader));
    try {
      auto j = nlohmann::ordered_json::parse(line);
      RankingRecord rec = record_from_json(j);
      if (!seen_ids.insert(rec.query_id).second) {
        throw IntegrityError("line " + std::to_string(line_no) + ": duplicate query_id " +
                             std::to_string(rec.query_id));
      }
      out.push_back(std::move(rec));
    } catch (const IntegrityError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Deterministic split, disjoint by query_id. Fractions must sum to 1.
inline std::array<std::vector<RankingRecord>, 3> split(const std::vector<RankingRecord>& corpus,
                                                       const std::array<double, 3>& fractions,
                                                       std::uint64_t seed) {
  double total = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions) {
    if (f < 0.0) throw SpecError("split fractions must be non-negative");
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw SpecError("split fractions sum to " + std::to_string(total) + ", expected 1");
  }
  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  rng.shuffle(order);
  const auto n0 = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n1 = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  if (n0 + n1 > n) throw SpecError("split rounding exceeded corpus size");
  std::array<std::vector<RankingRecord>, 3> parts;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bucket = i < n0 ? 0 : (i < n0 + n1 ? 1 : 2);
    parts[bucket].push_back(corpus[order[i]]);
  }
  return parts;
}

}  // namespace mvp

#endif  // MVP_DATA_HPP_
