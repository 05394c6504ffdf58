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
#ifndef MVP_METRICS_HPP_
#define MVP_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "mvp/error.hpp"

namespace mvp {

/// DCG@k with exponential gain and log2 discount:
///   sum_{j=1..min(k,n)} (2^rel_j - 1) / log2(j + 1)
/// over the given ranked order. `ranking` lists item indices (0-based),
/// best first; `rel` is indexed by item.
inline double dcg_at_k(const std::vector<std::size_t>& ranking, const std::vector<double>& rel,
                       std::size_t k) {
  if (k < 1) throw ParameterError("dcg cutoff must be at least 1");
  const std::size_t n = std::min(k, ranking.size());
  double dcg = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double gain = std::pow(2.0, rel.at(ranking[j])) - 1.0;
    dcg += gain / std::log2(static_cast<double>(j) + 2.0);
  }
  return dcg;
}

/// nDCG@k in [0, 1]. The ideal order sorts by descending relevance with
/// stable ties. All-zero relevance leaves the metric undefined and raises,
/// never silently returns 0.
inline double ndcg_at_k(const std::vector<std::size_t>& ranking, const std::vector<double>& rel,
                        std::size_t k) {
  bool any_positive = false;
  for (double r : rel) {
    if (r > 0.0) {
      any_positive = true;
      break;
    }
  }
  if (!any_positive) throw UndefinedMetricError("ndcg undefined: no positive relevance");
  std::vector<std::size_t> ideal(rel.size());
  std::iota(ideal.begin(), ideal.end(), 0);
  std::stable_sort(ideal.begin(), ideal.end(),
                   [&](std::size_t a, std::size_t b) { return rel[a] > rel[b]; });
  const double idcg = dcg_at_k(ideal, rel, k);
  return dcg_at_k(ranking, rel, k) / idcg;
}

/// Kendall rank correlation between two orderings of the same id set:
/// (concordant - discordant) / (n(n-1)/2) over all item pairs.
inline double kendall_tau(const std::vector<std::size_t>& rank_a,
                          const std::vector<std::size_t>& rank_b) {
  if (rank_a.size() != rank_b.size()) {
    throw ParameterError("kendall_tau length mismatch: " + std::to_string(rank_a.size()) + " vs " +
                         std::to_string(rank_b.size()));
  }
  const std::size_t n = rank_a.size();
  if (n < 2) return 1.0;
  // position of each id in either ordering
  auto positions = [n](const std::vector<std::size_t>& order) {
    std::vector<std::size_t> pos;
    std::size_t mx = 0;
    for (std::size_t id : order) mx = std::max(mx, id);
    pos.assign(mx + 1, static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] >= pos.size() || pos[order[i]] != static_cast<std::size_t>(-1)) {
        throw ParameterError("kendall_tau input is not a permutation");
      }
      pos[order[i]] = i;
    }
    return pos;
  };
  const auto pa = positions(rank_a);
  const auto pb = positions(rank_b);
  if (pa.size() != pb.size()) throw ParameterError("kendall_tau id sets differ");
  for (std::size_t id = 0; id < pa.size(); ++id) {
    if ((pa[id] == static_cast<std::size_t>(-1)) != (pb[id] == static_cast<std::size_t>(-1))) {
      throw ParameterError("kendall_tau id sets differ");
    }
  }
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t a = rank_a[i], b = rank_a[j];  // a precedes b in ordering A
      if (pb[a] < pb[b]) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

}  // namespace mvp

#endif  // MVP_METRICS_HPP_
