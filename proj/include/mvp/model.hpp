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
#ifndef MVP_MODEL_HPP_
#define MVP_MODEL_HPP_

#include <atomic>
#include <cstdint>
#include <vector>

#include "mvp/decoder.hpp"
#include "mvp/encoder.hpp"
#include "mvp/params.hpp"
#include "mvp/vocab.hpp"

namespace mvp {

struct RerankResult {
  std::vector<double> scores;       // by input candidate position
  std::vector<std::size_t> order;   // 0-based, best first
  Tensor anchors;                   // [m x d]
  std::vector<Tensor> relevance;    // per candidate [m x d]
};

/// Inference session over a trained parameter set. Scoring all candidates of
/// one query costs exactly one decode step, independent of candidate count;
/// concurrent rerank calls on separate queries are safe.
class Reranker {
 public:
  explicit Reranker(ModelParams params)
      : params_(std::move(params)),
        vocab_(params_.config().vocab_size),
        layout_(PromptLayout::from_config(params_.config())) {}

  Reranker(ModelParams params, PromptLayout layout)
      : params_(std::move(params)), vocab_(params_.config().vocab_size), layout_(layout) {}

  const ModelParams& params() const { return params_; }
  const Vocab& vocab() const { return vocab_; }
  const PromptLayout& layout() const { return layout_; }

  RerankResult rerank(const std::vector<int>& query,
                      const std::vector<std::vector<int>>& candidates,
                      const AggregationStrategy& strategy = AggregationStrategy::Mean()) const {
    const ModelGraph graph = ModelGraph::bind(params_, /*requires_grad=*/false);
    const RelevanceMatrix rel =
        encode_candidates(query, candidates, graph.enc, graph.config, vocab_, layout_);
    const AnchorSet anchors = decode_anchors(rel, graph.dec, graph.config);
    decode_steps_.fetch_add(1, std::memory_order_relaxed);
    RerankResult result;
    result.scores = score(anchors, rel, strategy).scores;
    result.order = rank(result.scores);
    result.anchors = anchors.matrix();
    result.relevance.reserve(rel.passages.size());
    for (const Var& p : rel.passages) result.relevance.push_back(p.value());
    return result;
  }

  std::uint64_t decode_steps() const { return decode_steps_.load(std::memory_order_relaxed); }
  void reset_decode_steps() { decode_steps_.store(0, std::memory_order_relaxed); }

 private:
  ModelParams params_;
  Vocab vocab_;
  PromptLayout layout_;
  mutable std::atomic<std::uint64_t> decode_steps_{0};
};

}  // namespace mvp

#endif  // MVP_MODEL_HPP_
