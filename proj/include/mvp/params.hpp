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
#ifndef MVP_PARAMS_HPP_
#define MVP_PARAMS_HPP_

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mvp/autodiff.hpp"
#include "mvp/config.hpp"
#include "mvp/error.hpp"
#include "mvp/rng.hpp"
#include "mvp/tensor.hpp"

namespace mvp {

/// All learnable weights as an ordered, named tensor store. Order is fixed by
/// construction and shared with the checkpoint manifest.
class ModelParams {
 public:
  ModelParams() = default;

  /// Seeded init: weights and embeddings from N(0, 0.02^2), gains at 1.
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SplitMix64 rng(seed);
    ModelParams p;
    p.cfg_ = cfg;
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto ff = static_cast<std::size_t>(cfg.ff);
    p.add("encoder.token_embedding", Tensor::randn({static_cast<std::size_t>(cfg.vocab_size), d}, rng));
    p.add("encoder.view_embeddings", Tensor::randn({static_cast<std::size_t>(cfg.views), d}, rng));
    p.add("encoder.pos_embedding", Tensor::randn({static_cast<std::size_t>(cfg.max_len), d}, rng));
    for (int i = 0; i < cfg.encoder_layers; ++i) {
      const std::string base = "encoder.layer" + std::to_string(i) + ".";
      p.add(base + "attn_norm_gain", Tensor::full({d}, 1.0));
      p.add(base + "attn.wq", Tensor::randn({d, d}, rng));
      p.add(base + "attn.wk", Tensor::randn({d, d}, rng));
      p.add(base + "attn.wv", Tensor::randn({d, d}, rng));
      p.add(base + "attn.wo", Tensor::randn({d, d}, rng));
      p.add(base + "mlp_norm_gain", Tensor::full({d}, 1.0));
      p.add(base + "mlp.w1", Tensor::randn({d, ff}, rng));
      p.add(base + "mlp.w2", Tensor::randn({ff, d}, rng));
    }
    p.add("encoder.final_norm_gain", Tensor::full({d}, 1.0));
    p.add("decoder.bos", Tensor::randn({1, d}, rng));
    for (int i = 0; i < cfg.decoder_layers; ++i) {
      const std::string base = "decoder.layer" + std::to_string(i) + ".";
      p.add(base + "cross_norm_gain", Tensor::full({d}, 1.0));
      p.add(base + "cross.wq", Tensor::randn({d, d}, rng));
      p.add(base + "cross.wk", Tensor::randn({d, d}, rng));
      p.add(base + "cross.wv", Tensor::randn({d, d}, rng));
      p.add(base + "cross.wo", Tensor::randn({d, d}, rng));
      p.add(base + "mlp_norm_gain", Tensor::full({d}, 1.0));
      p.add(base + "mlp.w1", Tensor::randn({d, ff}, rng));
      p.add(base + "mlp.w2", Tensor::randn({ff, d}, rng));
    }
    p.add("decoder.final_norm_gain", Tensor::full({d}, 1.0));
    return p;
  }

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& config() { return cfg_; }

  void add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw IntegrityError("duplicate parameter name: " + name);
    index_[name] = tensors_.size();
    tensors_.emplace_back(name, std::move(t));
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& tensor(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IntegrityError("unknown parameter: " + name);
    return tensors_[it->second].second;
  }

  const Tensor& tensor(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IntegrityError("unknown parameter: " + name);
    return tensors_[it->second].second;
  }

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return tensors_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return tensors_; }
  std::size_t count() const { return tensors_.size(); }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors_) n += t.size();
    return n;
  }

 private:
  ModelConfig cfg_;
  std::vector<std::pair<std::string, Tensor>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AttentionVars {
  Var wq, wk, wv, wo;
};

struct MlpVars {
  Var w1, w2;
};

struct EncoderLayerVars {
  Var attn_norm_gain;
  AttentionVars attn;
  Var mlp_norm_gain;
  MlpVars mlp;
};

struct DecoderLayerVars {
  Var cross_norm_gain;
  AttentionVars cross;
  Var mlp_norm_gain;
  MlpVars mlp;
};

struct EncoderVars {
  Var token_embedding, view_embeddings, pos_embedding;
  std::vector<EncoderLayerVars> layers;
  Var final_norm_gain;
};

struct DecoderVars {
  Var bos;
  std::vector<DecoderLayerVars> layers;
  Var final_norm_gain;
};

/// Per-forward leaf binding of a parameter store. The tape is rebuilt per
/// forward pass; a binding is confined to one thread.
struct ModelGraph {
  ModelConfig config;
  EncoderVars enc;
  DecoderVars dec;
  std::vector<std::pair<std::string, Var>> leaves;

  static ModelGraph bind(const ModelParams& params, bool requires_grad) {
    ModelGraph g;
    g.config = params.config();
    std::unordered_map<std::string, Var> byname;
    g.leaves.reserve(params.count());
    for (const auto& [name, t] : params.entries()) {
      Var v = Var::leaf(t, requires_grad);
      g.leaves.emplace_back(name, v);
      byname.emplace(name, v);
    }
    auto at = [&byname](const std::string& n) {
      auto it = byname.find(n);
      if (it == byname.end()) throw IntegrityError("missing parameter: " + n);
      return it->second;
    };
    g.enc.token_embedding = at("encoder.token_embedding");
    g.enc.view_embeddings = at("encoder.view_embeddings");
    g.enc.pos_embedding = at("encoder.pos_embedding");
    for (int i = 0; i < g.config.encoder_layers; ++i) {
      const std::string base = "encoder.layer" + std::to_string(i) + ".";
      EncoderLayerVars layer;
      layer.attn_norm_gain = at(base + "attn_norm_gain");
      layer.attn = {at(base + "attn.wq"), at(base + "attn.wk"), at(base + "attn.wv"),
                    at(base + "attn.wo")};
      layer.mlp_norm_gain = at(base + "mlp_norm_gain");
      layer.mlp = {at(base + "mlp.w1"), at(base + "mlp.w2")};
      g.enc.layers.push_back(std::move(layer));
    }
    g.enc.final_norm_gain = at("encoder.final_norm_gain");
    g.dec.bos = at("decoder.bos");
    for (int i = 0; i < g.config.decoder_layers; ++i) {
      const std::string base = "decoder.layer" + std::to_string(i) + ".";
      DecoderLayerVars layer;
      layer.cross_norm_gain = at(base + "cross_norm_gain");
      layer.cross = {at(base + "cross.wq"), at(base + "cross.wk"), at(base + "cross.wv"),
                     at(base + "cross.wo")};
      layer.mlp_norm_gain = at(base + "mlp_norm_gain");
      layer.mlp = {at(base + "mlp.w1"), at(base + "mlp.w2")};
      g.dec.layers.push_back(std::move(layer));
    }
    g.dec.final_norm_gain = at("decoder.final_norm_gain");
    return g;
  }
};

}  // namespace mvp

#endif  // MVP_PARAMS_HPP_
