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
#ifndef MVP_PIPELINE_HPP_
#define MVP_PIPELINE_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mvp/error.hpp"

namespace mvp {

/// Scores for a block of candidate ids, in block order. Pipelines only ever
/// see candidates through this interface.
using Scorer = std::function<std::vector<double>(const std::vector<std::size_t>&)>;

inline Scorer oracle_scorer(const std::vector<double>& relevance) {
  return [relevance](const std::vector<std::size_t>& ids) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) out.push_back(relevance.at(id));
    return out;
  };
}

/// Position-sensitive mock: the score is the position inside the block. Used
/// by audits to prove the harness detects order sensitivity.
inline Scorer position_sensitive_scorer() {
  return [](const std::vector<std::size_t>& ids) {
    std::vector<double> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = -static_cast<double>(i);
    return out;
  };
}

struct WindowConfig {
  int window = 20;  // w
  int stride = 10;  // s

  void validate() const {
    if (stride < 1 || stride > window) {
      throw ParameterError("window config requires 1 <= stride <= window");
    }
  }
};

/// Prompt / decode-step accounting for one reranking run. Decode steps for
/// generative baselines count one step per in-window identifier, times the
/// per-identifier token multiplier.
struct PipelineCost {
  std::uint64_t prompt_count = 0;
  std::uint64_t decode_steps = 0;
  std::uint64_t passages_encoded = 0;
  double modeled_flops = 0.0;
};

struct RerankRun {
  std::vector<std::size_t> order;  // best first
  PipelineCost cost;
};

namespace detail {

inline void sort_block_by_score(std::vector<std::size_t>& block, const Scorer& scorer) {
  const std::vector<double> s = scorer(block);
  if (s.size() != block.size()) throw ParameterError("scorer returned wrong arity");
  std::vector<std::size_t> idx(block.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  std::vector<std::size_t> sorted;
  sorted.reserve(block.size());
  for (std::size_t i : idx) sorted.push_back(block[i]);
  block = std::move(sorted);
}

}  // namespace detail

/// Sliding-window reranking: back-to-front passes over windows of size w with
/// stride s, each window reordered by the scorer. One pass moves the true top
/// (w - s) of the unresolved suffix to its front, so resolving the top k takes
/// ceil(k / (w - s)) passes; the resolved prefix is frozen between passes.
/// Cost: one prompt per window, window-size decode steps per prompt.
inline RerankRun sliding_window_rerank(const Scorer& scorer, std::size_t n,
                                       const WindowConfig& cfg, std::size_t top_k,
                                       std::uint64_t decode_multiplier = 1) {
  cfg.validate();
  if (n < 1) throw ParameterError("sliding_window_rerank needs at least one candidate");
  const auto w = static_cast<std::size_t>(cfg.window);
  const auto s = static_cast<std::size_t>(cfg.stride);
  RerankRun run;
  run.order.resize(n);
  std::iota(run.order.begin(), run.order.end(), 0);
  top_k = std::min(top_k, n);

  std::size_t resolved = 0;
  while (resolved < top_k) {
    const std::size_t remaining = n - resolved;
    std::vector<std::size_t> starts;
    if (remaining <= w) {
      starts.push_back(resolved);
    } else {
      for (std::size_t st = n - w; st > resolved; st -= std::min(s, st - resolved)) {
        starts.push_back(st);
      }
      starts.push_back(resolved);
    }
    for (std::size_t st : starts) {
      const std::size_t en = std::min(st + w, n);
      std::vector<std::size_t> block(run.order.begin() + static_cast<std::ptrdiff_t>(st),
                                     run.order.begin() + static_cast<std::ptrdiff_t>(en));
      detail::sort_block_by_score(block, scorer);
      std::copy(block.begin(), block.end(), run.order.begin() + static_cast<std::ptrdiff_t>(st));
      run.cost.prompt_count += 1;
      run.cost.decode_steps += (en - st) * decode_multiplier;
      run.cost.passages_encoded += en - st;
    }
    if (remaining <= w) break;     // the whole suffix is now sorted
    if (w == s) break;             // disjoint windows carry nothing forward
    resolved += w - s;
  }
  return run;
}

/// Tournament reranking in the ListT5 style: fixed leaf blocks over the input
/// order, rounds promote the top r of each block of m_t, the final block's
/// winner is extracted, and extraction repeats with the winner removed from
/// its leaf. Block rankings are memoized on their ordered membership, so one
/// prompt is paid per distinct block scored. Blocks no larger than r promote
/// for free. Decode steps count m_t per prompt times the multiplier.
inline RerankRun tournament_rerank(const Scorer& scorer, std::size_t n, int group, int promote,
                                   std::size_t top_k, std::uint64_t decode_multiplier = 1) {
  if (group < 2 || promote < 1 || promote >= group) {
    throw ParameterError("tournament requires 1 <= r < m_t and m_t >= 2");
  }
  if (n < 1) throw ParameterError("tournament_rerank needs at least one candidate");
  const auto mt = static_cast<std::size_t>(group);
  const auto r = static_cast<std::size_t>(promote);
  top_k = std::min(top_k, n);

  std::vector<std::vector<std::size_t>> leaves;
  for (std::size_t at = 0; at < n; at += mt) {
    leaves.emplace_back();
    for (std::size_t i = at; i < std::min(at + mt, n); ++i) leaves.back().push_back(i);
  }

  RerankRun run;
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> memo;
  auto rank_block = [&](const std::vector<std::size_t>& block) -> const std::vector<std::size_t>& {
    auto it = memo.find(block);
    if (it == memo.end()) {
      std::vector<std::size_t> ranked = block;
      detail::sort_block_by_score(ranked, scorer);
      run.cost.prompt_count += 1;
      run.cost.decode_steps += mt * decode_multiplier;
      run.cost.passages_encoded += block.size();
      it = memo.emplace(block, std::move(ranked)).first;
    }
    return it->second;
  };
  auto promote_block = [&](const std::vector<std::size_t>& block) {
    if (block.size() <= r) return block;
    const std::vector<std::size_t>& ranked = rank_block(block);
    return std::vector<std::size_t>(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(r));
  };

  std::size_t alive = n;
  while (run.order.size() < top_k) {
    std::vector<std::size_t> pool;
    if (alive > mt) {
      for (const auto& leaf : leaves) {
        const auto promoted = promote_block(leaf);
        pool.insert(pool.end(), promoted.begin(), promoted.end());
      }
      while (pool.size() > mt) {
        std::vector<std::size_t> next;
        for (std::size_t at = 0; at < pool.size(); at += mt) {
          const std::vector<std::size_t> block(
              pool.begin() + static_cast<std::ptrdiff_t>(at),
              pool.begin() + static_cast<std::ptrdiff_t>(std::min(at + mt, pool.size())));
          const auto promoted = promote_block(block);
          next.insert(next.end(), promoted.begin(), promoted.end());
        }
        pool = std::move(next);
      }
    } else {
      for (const auto& leaf : leaves) pool.insert(pool.end(), leaf.begin(), leaf.end());
    }
    const std::size_t winner = pool.size() == 1 ? pool[0] : rank_block(pool)[0];
    run.order.push_back(winner);
    for (auto& leaf : leaves) {
      auto it = std::find(leaf.begin(), leaf.end(), winner);
      if (it != leaf.end()) {
        leaf.erase(it);
        break;
      }
    }
    --alive;
  }
  // eliminated candidates follow in leaf order
  for (const auto& leaf : leaves) {
    run.order.insert(run.order.end(), leaf.begin(), leaf.end());
  }
  return run;
}

/// One prompt per passage, one decode step per query, whatever n is.
inline PipelineCost single_pass_cost(std::size_t n) {
  if (n < 1) throw ParameterError("single_pass_cost needs at least one candidate");
  PipelineCost c;
  c.prompt_count = n;
  c.decode_steps = 1;
  c.passages_encoded = n;
  return c;
}

inline RerankRun single_pass_rerank(const Scorer& scorer, std::size_t n) {
  RerankRun run;
  run.order.resize(n);
  std::iota(run.order.begin(), run.order.end(), 0);
  detail::sort_block_by_score(run.order, scorer);
  run.cost = single_pass_cost(n);
  return run;
}

// ---------------------------------------------------------------------------
// Cost report
// ---------------------------------------------------------------------------

/// Closed-form per-prompt transformer cost model (multiply-add = 2 FLOPs):
///   encoder(L, d, layers, ff) = layers * (8 L d^2 + 4 L^2 d + 4 L d ff)
///   decoder(d, n_keys, ff)    = views * dec_layers *
///                               (4 d^2 + 4 n_keys d^2 + 4 n_keys d + 4 d ff)
/// A model of cost shape, not a measurement.
struct CostModelConfig {
  std::size_t max_len = 64;  // L
  std::size_t d = 32;
  std::size_t layers = 2;
  std::size_t ff = 64;
  std::size_t views = 4;
  std::size_t dec_layers = 1;

  double encoder_flops() const {
    const double L = static_cast<double>(max_len);
    const double dd = static_cast<double>(d);
    const double f = static_cast<double>(ff);
    return static_cast<double>(layers) * (8.0 * L * dd * dd + 4.0 * L * L * dd + 4.0 * L * dd * f);
  }

  double decoder_flops(std::size_t n_keys) const {
    const double dd = static_cast<double>(d);
    const double f = static_cast<double>(ff);
    const double nk = static_cast<double>(n_keys);
    return static_cast<double>(views) * static_cast<double>(dec_layers) *
           (4.0 * dd * dd + 4.0 * nk * dd * dd + 4.0 * nk * dd + 4.0 * dd * f);
  }
};

struct CostRow {
  std::string strategy;
  std::size_t n = 0;
  PipelineCost cost;
  double decode_ratio_vs_single = 0.0;
};

struct CostReportConfig {
  WindowConfig window;
  int group = 5;    // m_t
  int promote = 2;  // r
  std::size_t top_k = 10;
  std::uint64_t decode_multiplier = 1;
  CostModelConfig flops;
};

/// Tabulate all strategies over an n grid. The reference arrangement scores
/// candidates by descending input position (relevance = n - position), the
/// BM25-like case where input order already approximates the truth.
inline std::vector<CostRow> cost_report(const std::vector<std::size_t>& grid,
                                        const CostReportConfig& cfg) {
  std::vector<CostRow> rows;
  for (std::size_t n : grid) {
    std::vector<double> reference(n);
    for (std::size_t i = 0; i < n; ++i) reference[i] = static_cast<double>(n - i);
    const Scorer scorer = oracle_scorer(reference);

    RerankRun sliding = sliding_window_rerank(scorer, n, cfg.window, cfg.top_k, cfg.decode_multiplier);
    sliding.cost.modeled_flops =
        static_cast<double>(sliding.cost.passages_encoded) * cfg.flops.encoder_flops() +
        static_cast<double>(sliding.cost.decode_steps) *
            cfg.flops.decoder_flops(static_cast<std::size_t>(cfg.window.window));
    RerankRun tournament =
        tournament_rerank(scorer, n, cfg.group, cfg.promote, cfg.top_k, cfg.decode_multiplier);
    tournament.cost.modeled_flops =
        static_cast<double>(tournament.cost.passages_encoded) * cfg.flops.encoder_flops() +
        static_cast<double>(tournament.cost.decode_steps) *
            cfg.flops.decoder_flops(static_cast<std::size_t>(cfg.group));
    PipelineCost single = single_pass_cost(n);
    single.modeled_flops = static_cast<double>(single.passages_encoded) * cfg.flops.encoder_flops() +
                           static_cast<double>(single.decode_steps) * cfg.flops.decoder_flops(n);

    const double single_decode = static_cast<double>(single.decode_steps);
    rows.push_back({"sliding-window", n, sliding.cost,
                    static_cast<double>(sliding.cost.decode_steps) / single_decode});
    rows.push_back({"tournament", n, tournament.cost,
                    static_cast<double>(tournament.cost.decode_steps) / single_decode});
    rows.push_back({"single-pass", n, single, 1.0});
  }
  return rows;
}

inline std::string cost_report_tsv(const std::vector<CostRow>& rows) {
  std::ostringstream os;
  os << "#schema\tstrategy\tn\tprompt_count\tdecode_steps\tpassages_encoded\tmodeled_flops\t"
        "decode_ratio_vs_single\n";
  for (const CostRow& r : rows) {
    os << r.strategy << '\t' << r.n << '\t' << r.cost.prompt_count << '\t' << r.cost.decode_steps
       << '\t' << r.cost.passages_encoded << '\t' << r.cost.modeled_flops << '\t'
       << r.decode_ratio_vs_single << '\n';
  }
  return os.str();
}

}  // namespace mvp

#endif  // MVP_PIPELINE_HPP_
