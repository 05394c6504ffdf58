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
#ifndef MVP_ENCODER_HPP_
#define MVP_ENCODER_HPP_

#include <string>
#include <vector>

#include "mvp/attention.hpp"
#include "mvp/autodiff.hpp"
#include "mvp/config.hpp"
#include "mvp/params.hpp"
#include "mvp/vocab.hpp"

namespace mvp {

/// Prompt construction rules. View tokens always occupy indices 0..m-1 so that
/// view k receives the same position embedding in every prompt, for every
/// passage. `inject_passage_identifiers` is a test fixture that deliberately
/// violates this design (it inserts a per-passage content token after the
/// views) so the identifier audit has something real to catch.
struct PromptLayout {
  int views = 4;      // m
  int max_len = 64;   // L
  ViewTokenMode mode = ViewTokenMode::kDedicated;
  bool inject_passage_identifiers = false;

  static PromptLayout from_config(const ModelConfig& cfg) {
    return PromptLayout{cfg.views, cfg.max_len, cfg.view_token_mode, false};
  }

  std::string describe(const Vocab& vocab) const {
    std::string out = "views=" + std::to_string(views) + " mode=" + to_string(mode) +
                      " max_len=" + std::to_string(max_len) + " prefix=[";
    if (mode == ViewTokenMode::kDedicated) {
      for (int k = 0; k < views; ++k) out += (k ? " " : "") + vocab.token_name(vocab.view_id(k));
    } else {
      out += "first-" + std::to_string(views) + " positions";
    }
    out += "]";
    if (inject_passage_identifiers) out += " +per-passage-identifier";
    return out;
  }
};

/// Build the encoder input for one passage:
///   <v1>..<vm> <q> query <p> passage          (dedicated mode)
///   <q> query <p> passage                      (first-k mode)
/// The passage tail is truncated first when the prompt exceeds max_len; view
/// tokens and markers are never dropped. A query that does not fit on its own
/// is an input-too-long error.
inline std::vector<int> build_prompt(const std::vector<int>& query, const std::vector<int>& passage,
                                     const Vocab& vocab, const PromptLayout& layout,
                                     int passage_ordinal = -1) {
  if (layout.views < 1 || layout.views > Vocab::kMaxViews) {
    throw ParameterError("view count " + std::to_string(layout.views) + " outside [1, " +
                         std::to_string(Vocab::kMaxViews) + "]");
  }
  for (int id : query) {
    vocab.check(id);
    if (vocab.is_reserved(id)) throw VocabError("reserved id " + std::to_string(id) + " in query text");
  }
  for (int id : passage) {
    vocab.check(id);
    if (vocab.is_reserved(id)) throw VocabError("reserved id " + std::to_string(id) + " in passage text");
  }
  std::vector<int> prompt;
  prompt.reserve(static_cast<std::size_t>(layout.max_len));
  if (layout.mode == ViewTokenMode::kDedicated) {
    for (int k = 0; k < layout.views; ++k) prompt.push_back(vocab.view_id(k));
  }
  if (layout.inject_passage_identifiers && passage_ordinal >= 0) {
    // Fixture: a per-passage "identifier" drawn from the content range,
    // mimicking natural-language identifier tokens.
    prompt.push_back(Vocab::kContentBase + passage_ordinal % vocab.content_count());
  }
  prompt.push_back(Vocab::kQueryMark);
  const std::size_t fixed = prompt.size() + 1 + query.size();  // +1 passage marker
  if (fixed > static_cast<std::size_t>(layout.max_len)) {
    throw InputTooLongError("query of " + std::to_string(query.size()) +
                            " tokens exceeds prompt budget " + std::to_string(layout.max_len));
  }
  prompt.insert(prompt.end(), query.begin(), query.end());
  prompt.push_back(Vocab::kPassageMark);
  const std::size_t room = static_cast<std::size_t>(layout.max_len) - prompt.size();
  const std::size_t keep = std::min(room, passage.size());
  prompt.insert(prompt.end(), passage.begin(), passage.begin() + static_cast<std::ptrdiff_t>(keep));
  return prompt;
}

namespace detail {

/// Token embedding lookup. View-token ids resolve to rows of the dedicated
/// view embedding table; everything else to rows of the token table.
inline Var embed_tokens(const Var& table, const Var& view_table, const std::vector<int>& ids,
                        const Vocab& vocab, int views) {
  const std::size_t d = table.value().dim(1);
  for (int id : ids) {
    vocab.check(id);
    if (vocab.is_view(id) && id - Vocab::kViewBase >= views) {
      throw VocabError("view token " + vocab.token_name(id) + " beyond configured views");
    }
  }
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    const Tensor& src = vocab.is_view(id) ? view_table.value() : table.value();
    const std::size_t row = vocab.is_view(id) ? static_cast<std::size_t>(id - Vocab::kViewBase)
                                              : static_cast<std::size_t>(id);
    std::copy_n(&src.data()[row * d], d, &out.data()[i * d]);
  }
  Vocab vcopy = vocab;
  return mvp::detail::make_op(std::move(out), {table, view_table}, [ids, d, vcopy](Node& n) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int id = ids[i];
      const bool view = vcopy.is_view(id);
      Node& parent = view ? *n.parents[1] : *n.parents[0];
      if (!parent.requires_grad) continue;
      const std::size_t row =
          view ? static_cast<std::size_t>(id - Vocab::kViewBase) : static_cast<std::size_t>(id);
      Tensor& pg = parent.grad_buffer();
      const double* g = &n.grad.data()[i * d];
      double* dst = &pg.data()[row * d];
      for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
    }
  });
}

}  // namespace detail

/// Transformer encoder over one prompt: token + learned absolute position
/// embeddings, then pre-norm blocks (self-attention, MLP) with residuals and
/// a final normalization. Returns the hidden states H [T x d].
inline Var encode(const std::vector<int>& prompt, const EncoderVars& enc, const ModelConfig& cfg,
                  const Vocab& vocab, AttentionProbe* probe = nullptr) {
  if (prompt.empty()) throw DimensionError("encode on empty prompt");
  if (prompt.size() > static_cast<std::size_t>(cfg.max_len)) {
    throw DimensionError("prompt length " + std::to_string(prompt.size()) + " exceeds max_len " +
                         std::to_string(cfg.max_len));
  }
  Var x = add(detail::embed_tokens(enc.token_embedding, enc.view_embeddings, prompt, vocab, cfg.views),
              slice_rows(enc.pos_embedding, 0, prompt.size()));
  for (const EncoderLayerVars& layer : enc.layers) {
    Var normed = layer_norm(x, layer.attn_norm_gain);
    x = add(x, multi_head_attention(normed, normed, layer.attn, cfg.heads, probe));
    x = add(x, mlp_block(layer_norm(x, layer.mlp_norm_gain), layer.mlp));
  }
  return layer_norm(x, enc.final_norm_gain);
}

/// Rows 0..m-1 of the hidden states, in view order.
inline Var extract_views(const Var& hidden, int views) {
  if (hidden.value().rank() != 2 || hidden.value().dim(0) < static_cast<std::size_t>(views)) {
    throw DimensionError("cannot extract " + std::to_string(views) + " views from " +
                         hidden.value().shape_string());
  }
  return slice_rows(hidden, 0, static_cast<std::size_t>(views));
}

/// The n x m x d grid of relevance vectors e_ik, held per passage.
struct RelevanceMatrix {
  std::vector<Var> passages;  // each [m x d]
  int views = 0;
  int width = 0;

  std::size_t candidate_count() const { return passages.size(); }

  Tensor values() const {
    Tensor out({passages.size(), static_cast<std::size_t>(views), static_cast<std::size_t>(width)});
    for (std::size_t i = 0; i < passages.size(); ++i) {
      const Tensor& p = passages[i].value();
      std::copy_n(p.data().data(), p.size(),
                  &out.data()[i * static_cast<std::size_t>(views) * static_cast<std::size_t>(width)]);
    }
    return out;
  }
};

/// Encode every candidate independently (no cross-passage attention) and
/// extract its view vectors. Row i is exactly the single-passage path for
/// candidate i, so candidate order cannot influence any row.
inline RelevanceMatrix encode_candidates(const std::vector<int>& query,
                                         const std::vector<std::vector<int>>& candidates,
                                         const EncoderVars& enc, const ModelConfig& cfg,
                                         const Vocab& vocab, const PromptLayout& layout) {
  if (candidates.empty()) throw ParameterError("encode_candidates needs at least one candidate");
  RelevanceMatrix rel;
  rel.views = layout.views;
  rel.width = cfg.d;
  rel.passages.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      const std::vector<int> prompt = build_prompt(query, candidates[i], vocab, layout,
                                                   static_cast<int>(i));
      rel.passages.push_back(extract_views(encode(prompt, enc, cfg, vocab), layout.views));
    } catch (const Error& e) {
      throw Error("candidate " + std::to_string(i) + ": " + e.what());
    }
  }
  return rel;
}

}  // namespace mvp

#endif  // MVP_ENCODER_HPP_
