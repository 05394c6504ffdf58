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
#ifndef MVP_ATTENTION_HPP_
#define MVP_ATTENTION_HPP_

#include <cmath>
#include <vector>

#include "mvp/autodiff.hpp"
#include "mvp/params.hpp"

namespace mvp {

/// Captured attention weight matrices, one [Tq x Tk] tensor per head in
/// layer-major order. Used by tests and audits.
struct AttentionProbe {
  std::vector<Tensor> weights;
};

/// Scaled-dot multi-head attention. Queries come from q_in [Tq x d]; keys and
/// values from kv_in [Tk x d]. No biases, no positional terms on keys or
/// values; attention sums accumulate in key index order.
inline Var multi_head_attention(const Var& q_in, const Var& kv_in, const AttentionVars& w,
                                int heads, AttentionProbe* probe = nullptr) {
  const std::size_t d = q_in.value().dim(1);
  if (d % static_cast<std::size_t>(heads) != 0) {
    throw DimensionError("attention width not divisible by head count");
  }
  const std::size_t dh = d / static_cast<std::size_t>(heads);
  Var q = matmul(q_in, w.wq);
  Var k = matmul(kv_in, w.wk);
  Var v = matmul(kv_in, w.wv);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var logits = scale(matmul(qh, transpose(kh)), scale_factor);
    Var weights = softmax_rows(logits);
    if (probe) probe->weights.push_back(weights.value());
    head_outputs.push_back(matmul(weights, vh));
  }
  return matmul(concat_cols(head_outputs), w.wo);
}

/// Two-layer MLP with GELU.
inline Var mlp_block(const Var& x, const MlpVars& w) {
  return matmul(gelu(matmul(x, w.w1)), w.w2);
}

}  // namespace mvp

#endif  // MVP_ATTENTION_HPP_
