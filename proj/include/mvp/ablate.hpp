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
#ifndef MVP_ABLATE_HPP_
#define MVP_ABLATE_HPP_

#include <sstream>
#include <string>
#include <vector>

#include "mvp/audit.hpp"
#include "mvp/data.hpp"
#include "mvp/trainer.hpp"

namespace mvp {

struct ViewAblationRow {
  int views = 0;
  double test_ndcg = 0.0;
  double final_rank_loss = 0.0;
};

/// Train one model per view count on the same data and seed; report test
/// nDCG@k per row.
inline std::vector<ViewAblationRow> view_count_ablation(
    const TrainConfig& base, const std::vector<RankingRecord>& train_records,
    const std::vector<RankingRecord>& test_records, const std::vector<int>& view_counts,
    std::size_t k = 10) {
  std::vector<ViewAblationRow> rows;
  for (int m : view_counts) {
    TrainConfig cfg = base;
    cfg.views = m;
    const TrainResult r = train(cfg, train_records);
    ViewAblationRow row;
    row.views = m;
    row.test_ndcg = evaluate(r.params, test_records, k).mean_ndcg;
    row.final_rank_loss = r.history.empty() ? 0.0 : r.history.back().mean_rank_loss;
    rows.push_back(row);
  }
  return rows;
}

inline std::string view_ablation_tsv(const std::vector<ViewAblationRow>& rows) {
  std::ostringstream os;
  os << "#schema\tviews\ttest_ndcg\tfinal_rank_loss\n";
  for (const auto& r : rows) {
    os << r.views << '\t' << r.test_ndcg << '\t' << r.final_rank_loss << '\n';
  }
  return os.str();
}

struct OrthogonalAblationResult {
  double ndcg_with = 0.0;
  double ndcg_without = 0.0;
  AnchorSimilarityReport stats_with;
  AnchorSimilarityReport stats_without;
};

/// Train the identical config with and without the orthogonality term; report
/// test nDCG and pairwise-cosine statistics for both runs.
inline OrthogonalAblationResult orthogonal_ablation(const TrainConfig& base,
                                                    const std::vector<RankingRecord>& train_records,
                                                    const std::vector<RankingRecord>& test_records,
                                                    std::size_t k = 10) {
  TrainConfig with_cfg = base;
  with_cfg.orthogonal_weight = base.orthogonal_weight > 0.0 ? base.orthogonal_weight : 1.0;
  TrainConfig without_cfg = base;
  without_cfg.orthogonal_weight = 0.0;

  OrthogonalAblationResult out;
  {
    const TrainResult r = train(with_cfg, train_records);
    out.ndcg_with = evaluate(r.params, test_records, k).mean_ndcg;
    Reranker reranker(r.params);
    out.stats_with = anchor_similarity_stats(reranker, test_records);
  }
  {
    const TrainResult r = train(without_cfg, train_records);
    out.ndcg_without = evaluate(r.params, test_records, k).mean_ndcg;
    Reranker reranker(r.params);
    out.stats_without = anchor_similarity_stats(reranker, test_records);
  }
  return out;
}

inline std::string orthogonal_ablation_tsv(const OrthogonalAblationResult& r) {
  std::ostringstream os;
  os << "#schema\tvariant\ttest_ndcg\tanchor_cos_mean\tanchor_cos_std\tanchor_abs_cos_mean\t"
        "relevance_cos_mean\trelevance_cos_std\n";
  os << "with-orthogonal\t" << r.ndcg_with << '\t' << r.stats_with.anchors.mean << '\t'
     << r.stats_with.anchors.stddev << '\t' << r.stats_with.anchors.mean_abs << '\t'
     << r.stats_with.relevance_vectors.mean << '\t' << r.stats_with.relevance_vectors.stddev
     << '\n';
  os << "without-orthogonal\t" << r.ndcg_without << '\t' << r.stats_without.anchors.mean << '\t'
     << r.stats_without.anchors.stddev << '\t' << r.stats_without.anchors.mean_abs << '\t'
     << r.stats_without.relevance_vectors.mean << '\t' << r.stats_without.relevance_vectors.stddev
     << '\n';
  return os.str();
}

struct AggregationSweepRow {
  std::string strategy;
  double test_ndcg = 0.0;
};

/// Evaluate one trained model under Mean, Max, and every SingleView strategy.
inline std::vector<AggregationSweepRow> aggregation_sweep(const ModelParams& params,
                                                          const std::vector<RankingRecord>& records,
                                                          std::size_t k = 10) {
  std::vector<AggregationSweepRow> rows;
  rows.push_back({"mean", evaluate(params, records, k, AggregationStrategy::Mean()).mean_ndcg});
  rows.push_back({"max", evaluate(params, records, k, AggregationStrategy::Max()).mean_ndcg});
  for (int v = 1; v <= params.config().views; ++v) {
    rows.push_back({"view:" + std::to_string(v),
                    evaluate(params, records, k, AggregationStrategy::SingleView(v)).mean_ndcg});
  }
  return rows;
}

inline std::string aggregation_sweep_tsv(const std::vector<AggregationSweepRow>& rows) {
  std::ostringstream os;
  os << "#schema\tstrategy\ttest_ndcg\n";
  for (const auto& r : rows) os << r.strategy << '\t' << r.test_ndcg << '\n';
  return os.str();
}

}  // namespace mvp

#endif  // MVP_ABLATE_HPP_
