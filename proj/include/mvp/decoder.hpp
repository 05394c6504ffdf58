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
#ifndef MVP_DECODER_HPP_
#define MVP_DECODER_HPP_

#include <algorithm>
#include <numeric>
#include <vector>

#include "mvp/attention.hpp"
#include "mvp/autodiff.hpp"
#include "mvp/config.hpp"
#include "mvp/encoder.hpp"
#include "mvp/params.hpp"

namespace mvp {

/// One anchor vector per view, row k = a_k.
struct AnchorSet {
  std::vector<Var> anchors;  // each [1 x d]

  int views() const { return static_cast<int>(anchors.size()); }

  Tensor matrix() const {
    if (anchors.empty()) return Tensor();
    const std::size_t d = anchors[0].value().dim(1);
    Tensor out({anchors.size(), d});
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      std::copy_n(anchors[k].value().data().data(), d, &out.data()[k * d]);
    }
    return out;
  }
};

struct ScoreVector {
  std::vector<double> scores;
  AggregationStrategy strategy;
};

/// E_k = [e_1k; e_2k; ...; e_nk]: the k-th view's relevance vectors stacked
/// over candidates. k is 1-based.
inline Var stack_view(const RelevanceMatrix& rel, int k) {
  if (k < 1 || k > rel.views) {
    throw ParameterError("view index " + std::to_string(k) + " out of range [1, " +
                         std::to_string(rel.views) + "]");
  }
  std::vector<Var> rows;
  rows.reserve(rel.passages.size());
  for (const Var& p : rel.passages) {
    rows.push_back(slice_rows(p, static_cast<std::size_t>(k - 1), 1));
  }
  return concat_rows(rows);
}

/// Cross-attend a single learned BOS query over one view's relevance vectors,
/// then MLP and normalization. Keys and values carry no positional terms, so
/// the anchor is invariant to candidate order up to floating-point summation
/// noise.
inline Var decode_anchor(const Var& e_k, const DecoderVars& dec, const ModelConfig& cfg,
                         AttentionProbe* probe = nullptr) {
  if (e_k.value().rank() != 2 || e_k.value().dim(0) < 1) {
    throw ParameterError("decode_anchor needs at least one candidate row");
  }
  Var x = dec.bos;
  for (const DecoderLayerVars& layer : dec.layers) {
    x = add(x, multi_head_attention(layer_norm(x, layer.cross_norm_gain), e_k, layer.cross,
                                    cfg.heads, probe));
    x = add(x, mlp_block(layer_norm(x, layer.mlp_norm_gain), layer.mlp));
  }
  return layer_norm(x, dec.final_norm_gain);
}

/// All m anchors. The views form a batch dimension over one decoder
/// invocation; this counts as a single decode step.
inline AnchorSet decode_anchors(const RelevanceMatrix& rel, const DecoderVars& dec,
                                const ModelConfig& cfg, AttentionProbe* probe = nullptr) {
  AnchorSet anchors;
  anchors.anchors.reserve(static_cast<std::size_t>(rel.views));
  for (int k = 1; k <= rel.views; ++k) {
    anchors.anchors.push_back(decode_anchor(stack_view(rel, k), dec, cfg, probe));
  }
  return anchors;
}

/// Per-candidate scores as graph nodes (training path). Raw dot products
/// <a_k, e_ik>; Mean averages over views, Max takes the best view,
/// SingleView(k) reads one view.
inline std::vector<Var> score_vars(const AnchorSet& anchors, const RelevanceMatrix& rel,
                                   const AggregationStrategy& strategy) {
  const int m = rel.views;
  if (anchors.views() != m) {
    throw DimensionError("anchor views " + std::to_string(anchors.views()) +
                         " != relevance views " + std::to_string(m));
  }
  if (m >= 1 && !rel.passages.empty() &&
      anchors.anchors[0].value().dim(1) != rel.passages[0].value().dim(1)) {
    throw DimensionError("anchor width " +
                         std::to_string(anchors.anchors[0].value().dim(1)) +
                         " != relevance width " + std::to_string(rel.passages[0].value().dim(1)));
  }
  if (strategy.kind == AggregationStrategy::Kind::kSingleView &&
      (strategy.view < 1 || strategy.view > m)) {
    throw ParameterError("SingleView(" + std::to_string(strategy.view) + ") out of range [1, " +
                         std::to_string(m) + "]");
  }
  std::vector<Var> out;
  out.reserve(rel.passages.size());
  for (const Var& passage : rel.passages) {
    std::vector<Var> per_view;
    per_view.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      per_view.push_back(dot(anchors.anchors[static_cast<std::size_t>(k)],
                             slice_rows(passage, static_cast<std::size_t>(k), 1)));
    }
    switch (strategy.kind) {
      case AggregationStrategy::Kind::kMean: {
        Var acc = per_view[0];
        for (int k = 1; k < m; ++k) acc = add(acc, per_view[static_cast<std::size_t>(k)]);
        out.push_back(scale(acc, 1.0 / static_cast<double>(m)));
        break;
      }
      case AggregationStrategy::Kind::kMax:
        out.push_back(vmax(per_view));
        break;
      case AggregationStrategy::Kind::kSingleView:
        out.push_back(per_view[static_cast<std::size_t>(strategy.view - 1)]);
        break;
    }
  }
  return out;
}

inline ScoreVector score(const AnchorSet& anchors, const RelevanceMatrix& rel,
                         const AggregationStrategy& strategy) {
  ScoreVector sv;
  sv.strategy = strategy;
  for (const Var& s : score_vars(anchors, rel, strategy)) sv.scores.push_back(s.value()[0]);
  return sv;
}

/// Candidate indices sorted by descending score; ties broken by ascending
/// original index. 0-based.
inline std::vector<std::size_t> rank(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

inline std::vector<std::size_t> rank(const ScoreVector& sv) { return rank(sv.scores); }

}  // namespace mvp

#endif  // MVP_DECODER_HPP_
