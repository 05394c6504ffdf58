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
#ifndef MVP_AUDIT_HPP_
#define MVP_AUDIT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mvp/data.hpp"
#include "mvp/metrics.hpp"
#include "mvp/model.hpp"
#include "mvp/trainer.hpp"

namespace mvp {

/// Scores within this band are treated as tied before rankings are compared,
/// so floating-point reassociation noise cannot flip an audit verdict.
inline constexpr double kScoreTieThreshold = 1e-6;

enum class PermutationMode { kOriginal, kShuffle, kReverse };

inline std::string to_string(PermutationMode m) {
  switch (m) {
    case PermutationMode::kOriginal: return "orig";
    case PermutationMode::kShuffle: return "shuffle";
    case PermutationMode::kReverse: return "reverse";
  }
  return "?";
}

struct PermutationAuditRow {
  PermutationMode mode = PermutationMode::kOriginal;
  double mean_ndcg = 0.0;
  double delta_vs_orig = 0.0;
  double max_score_deviation = 0.0;  // max over queries and passages, vs orig
  double mean_tau = 1.0;             // vs orig ranking, tie-banded
  double min_tau = 1.0;
};

namespace detail {

/// Kendall tau between two score-induced rankings over the same pids,
/// counting only pairs separated by more than the tie threshold in the
/// reference scores.
inline double banded_tau(const std::vector<double>& ref_scores,
                         const std::vector<double>& other_scores) {
  const std::size_t n = ref_scores.size();
  long long concordant = 0, discordant = 0, counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(ref_scores[i] - ref_scores[j]) <= kScoreTieThreshold) continue;
      ++counted;
      const bool ref_less = ref_scores[i] < ref_scores[j];
      const bool other_less = other_scores[i] < other_scores[j];
      if (ref_less == other_less) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  if (counted == 0) return 1.0;
  return static_cast<double>(concordant - discordant) / static_cast<double>(counted);
}

}  // namespace detail

/// Generic scoring hook for the permutation audit: given a record with its
/// candidates in some order, produce one score per candidate in that order.
using RecordScorer = std::function<std::vector<double>(const RankingRecord&)>;

inline RecordScorer model_record_scorer(const Reranker& reranker,
                                        AggregationStrategy strategy = AggregationStrategy::Mean()) {
  return [&reranker, strategy](const RankingRecord& rec) {
    return reranker.rerank(rec.query, rec.candidate_tokens(), strategy).scores;
  };
}

/// Order-sensitive mock (score = negated input position). The audit harness
/// must flag this one; if it does not, the harness is vacuous.
inline RecordScorer position_sensitive_record_scorer() {
  return [](const RankingRecord& rec) {
    std::vector<double> s(rec.candidate_count());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = -static_cast<double>(i);
    return s;
  };
}

/// Rerank each record under original / shuffled / reversed candidate order
/// and compare scores and rankings against the original run. Shuffle rows are
/// averaged over `shuffle_seeds` seeds.
inline std::vector<PermutationAuditRow> candidate_permutation_audit(
    const RecordScorer& scorer, const std::vector<RankingRecord>& records,
    const std::vector<PermutationMode>& modes, int shuffle_seeds = 3, std::size_t ndcg_k = 10) {
  struct PerRecord {
    std::vector<double> scores_by_pid;  // aligned to original candidate order
    std::vector<double> judgments;
  };
  std::vector<PerRecord> original(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    original[i].scores_by_pid = scorer(records[i]);
    original[i].judgments = records[i].relevance;
    if (original[i].judgments.empty()) {
      for (int r : records[i].ranks) {
        original[i].judgments.push_back(1.0 / static_cast<double>(r));
      }
    }
  }
  auto mean_ndcg_of = [&](const std::vector<std::vector<double>>& scores_by_record) {
    double total = 0.0;
    int counted = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      try {
        total += ndcg_at_k(rank(scores_by_record[i]), original[i].judgments, ndcg_k);
        ++counted;
      } catch (const UndefinedMetricError&) {
      }
    }
    return counted ? total / counted : 0.0;
  };

  std::vector<std::vector<double>> orig_scores;
  orig_scores.reserve(records.size());
  for (auto& pr : original) orig_scores.push_back(pr.scores_by_pid);
  const double orig_ndcg = mean_ndcg_of(orig_scores);

  // run one permuted variant of every record, mapping scores back to the
  // original candidate positions
  auto run_permuted = [&](const std::function<std::vector<std::size_t>(std::size_t, std::size_t)>&
                              permutation_of) {
    std::vector<std::vector<double>> scores(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const RankingRecord& rec = records[i];
      const std::size_t n = rec.candidate_count();
      const std::vector<std::size_t> perm = permutation_of(i, n);
      RankingRecord shuffled;
      shuffled.query_id = rec.query_id;
      shuffled.query = rec.query;
      for (std::size_t pos = 0; pos < n; ++pos) {
        shuffled.candidates.push_back(rec.candidates[perm[pos]]);
      }
      shuffled.ranks.resize(n);
      for (std::size_t pos = 0; pos < n; ++pos) shuffled.ranks[pos] = rec.ranks[perm[pos]];
      const std::vector<double> permuted_scores = scorer(shuffled);
      scores[i].resize(n);
      for (std::size_t pos = 0; pos < n; ++pos) scores[i][perm[pos]] = permuted_scores[pos];
    }
    return scores;
  };

  std::vector<PermutationAuditRow> rows;
  for (PermutationMode mode : modes) {
    PermutationAuditRow row;
    row.mode = mode;
    row.min_tau = 1.0;
    if (mode == PermutationMode::kOriginal) {
      row.mean_ndcg = orig_ndcg;
      rows.push_back(row);
      continue;
    }
    std::vector<std::vector<std::vector<double>>> trials;
    if (mode == PermutationMode::kReverse) {
      trials.push_back(run_permuted([](std::size_t, std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        std::reverse(p.begin(), p.end());
        return p;
      }));
    } else {
      for (int seed = 0; seed < shuffle_seeds; ++seed) {
        trials.push_back(run_permuted([seed](std::size_t rec_idx, std::size_t n) {
          std::vector<std::size_t> p(n);
          std::iota(p.begin(), p.end(), 0);
          SplitMix64 rng = SplitMix64::stream(static_cast<std::uint64_t>(seed) + 1, rec_idx);
          rng.shuffle(p);
          return p;
        }));
      }
    }
    double ndcg_sum = 0.0, tau_sum = 0.0;
    std::size_t tau_count = 0;
    for (const auto& trial : trials) {
      ndcg_sum += mean_ndcg_of(trial);
      for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t c = 0; c < trial[i].size(); ++c) {
          row.max_score_deviation = std::max(
              row.max_score_deviation, std::abs(trial[i][c] - original[i].scores_by_pid[c]));
        }
        const double tau = detail::banded_tau(original[i].scores_by_pid, trial[i]);
        tau_sum += tau;
        row.min_tau = std::min(row.min_tau, tau);
        ++tau_count;
      }
    }
    row.mean_ndcg = ndcg_sum / static_cast<double>(trials.size());
    row.delta_vs_orig = row.mean_ndcg - orig_ndcg;
    row.mean_tau = tau_count ? tau_sum / static_cast<double>(tau_count) : 1.0;
    rows.push_back(row);
  }
  return rows;
}

inline std::string permutation_audit_tsv(const std::vector<PermutationAuditRow>& rows,
                                         const std::string& corpus_name) {
  std::ostringstream os;
  os << "#schema\tmode\tcorpus\tndcg\tdelta\tmax_score_dev\tmean_tau\tmin_tau\n";
  for (const auto& r : rows) {
    os << to_string(r.mode) << '\t' << corpus_name << '\t' << r.mean_ndcg << '\t'
       << r.delta_vs_orig << '\t' << r.max_score_deviation << '\t' << r.mean_tau << '\t'
       << r.min_tau << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Identifier audit
// ---------------------------------------------------------------------------

struct IdentifierAuditReport {
  bool identifiers_found = false;
  std::string verdict;      // "identifier permutation inapplicable" when clean
  std::string layout_dump;  // evidence
};

/// Assert that the prompt layout assigns no per-passage distinct identifier
/// tokens. Probe: the same passage content must produce byte-identical
/// prompts at every candidate ordinal, and the prompt prefix must be the same
/// token ids across 100 varied passages.
inline IdentifierAuditReport identifier_audit(const PromptLayout& layout, const Vocab& vocab) {
  IdentifierAuditReport report;
  report.layout_dump = layout.describe(vocab);

  std::vector<int> query{Vocab::kContentBase, Vocab::kContentBase + 1};
  std::vector<int> passage{Vocab::kContentBase + 2, Vocab::kContentBase + 3};
  const std::vector<int> reference = build_prompt(query, passage, vocab, layout, 0);
  for (int ordinal = 1; ordinal < 100; ++ordinal) {
    if (build_prompt(query, passage, vocab, layout, ordinal) != reference) {
      report.identifiers_found = true;
      report.verdict = "per-passage identifier tokens detected at ordinal " +
                       std::to_string(ordinal);
      return report;
    }
  }
  // prefix id-set equality across varied passages
  const std::size_t prefix_len =
      layout.mode == ViewTokenMode::kDedicated ? static_cast<std::size_t>(layout.views) : 0;
  for (int ordinal = 0; ordinal < 100; ++ordinal) {
    std::vector<int> varied{Vocab::kContentBase + 2 + ordinal % (vocab.content_count() - 2)};
    const std::vector<int> prompt = build_prompt(query, varied, vocab, layout, ordinal);
    for (std::size_t i = 0; i < prefix_len; ++i) {
      if (prompt[i] != reference[i]) {
        report.identifiers_found = true;
        report.verdict = "prompt prefix differs across passages at index " + std::to_string(i);
        return report;
      }
    }
  }
  report.verdict = "identifier permutation inapplicable";
  return report;
}

// ---------------------------------------------------------------------------
// Anchor similarity statistics
// ---------------------------------------------------------------------------

struct SimilarityStats {
  double mean = 0.0;
  double stddev = 0.0;
  double mean_abs = 0.0;
  std::size_t pairs = 0;
};

namespace detail {

inline double row_cosine(const Tensor& m, std::size_t a, std::size_t b) {
  const std::size_t d = m.dim(1);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    ab += m.at(a, j) * m.at(b, j);
    aa += m.at(a, j) * m.at(a, j);
    bb += m.at(b, j) * m.at(b, j);
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na <= 1e-12 || nb <= 1e-12) {
    throw DegenerateVectorError("cosine over near-zero row");
  }
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0, sum_abs = 0.0;
  std::size_t count = 0;
  void push(double v) {
    sum += v;
    sum_sq += v * v;
    sum_abs += std::abs(v);
    ++count;
  }
  SimilarityStats stats() const {
    SimilarityStats s;
    s.pairs = count;
    if (count == 0) return s;
    s.mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - s.mean * s.mean);
    s.stddev = std::sqrt(var);
    s.mean_abs = sum_abs / static_cast<double>(count);
    return s;
  }
};

inline void push_pairwise(Accumulator& acc, const Tensor& rows) {
  for (std::size_t a = 0; a < rows.dim(0); ++a) {
    for (std::size_t b = a + 1; b < rows.dim(0); ++b) {
      acc.push(row_cosine(rows, a, b));
    }
  }
}

}  // namespace detail

struct AnchorSimilarityReport {
  SimilarityStats anchors;            // over m(m-1)/2 pairs per query
  SimilarityStats relevance_vectors;  // over view pairs per query-passage
};

/// Pairwise cosine statistics over anchors (per query) and relevance vectors
/// (per query-passage), aggregated over records. Needs m >= 2.
inline AnchorSimilarityReport anchor_similarity_stats(const Reranker& reranker,
                                                      const std::vector<RankingRecord>& records) {
  if (reranker.params().config().views < 2) {
    throw AuditError("anchor similarity needs at least two views");
  }
  detail::Accumulator anchor_acc, rel_acc;
  for (const RankingRecord& rec : records) {
    const RerankResult run = reranker.rerank(rec.query, rec.candidate_tokens());
    detail::push_pairwise(anchor_acc, run.anchors);
    for (const Tensor& passage_views : run.relevance) {
      detail::push_pairwise(rel_acc, passage_views);
    }
  }
  AnchorSimilarityReport report;
  report.anchors = anchor_acc.stats();
  report.relevance_vectors = rel_acc.stats();
  return report;
}

}  // namespace mvp

#endif  // MVP_AUDIT_HPP_
