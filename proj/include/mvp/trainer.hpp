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
#ifndef MVP_TRAINER_HPP_
#define MVP_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mvp/checkpoint.hpp"
#include "mvp/data.hpp"
#include "mvp/metrics.hpp"
#include "mvp/model.hpp"
#include "mvp/objectives.hpp"
#include "mvp/params.hpp"

namespace mvp {

/// Flat training configuration. Serialized as key=value lines; unknown keys
/// are rejected on parse. The learning-rate default targets the desk-scale
/// model; the 1e-4 / 1e-5 presets used for 220M / 3B backbones are documented
/// in the README, not defaults.
struct TrainConfig {
  // optimization
  int epochs = 4;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double warmup_ratio = 0.05;  // linear warm-up over the first 5% of steps
  // objective
  double tau = 0.8;
  double orthogonal_weight = 1.0;
  // data
  int n_per_record = 5;  // candidates per training query (corpus generation)
  std::uint64_t seed = 42;
  // model
  int d = 32;
  int encoder_layers = 2;
  int decoder_layers = 1;
  int heads = 4;
  int ff = 64;
  int max_len = 64;
  int views = 4;
  int vocab_size = 64;
  std::string view_token_mode = "dedicated";

  ModelConfig model_config() const {
    ModelConfig mc;
    mc.d = d;
    mc.encoder_layers = encoder_layers;
    mc.decoder_layers = decoder_layers;
    mc.heads = heads;
    mc.ff = ff;
    mc.max_len = max_len;
    mc.views = views;
    mc.vocab_size = vocab_size;
    mc.view_token_mode = view_token_mode_from_string(view_token_mode);
    return mc;
  }

  void validate() const {
    if (epochs < 0 || batch_size < 1 || learning_rate <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 ||
        beta2 <= 0.0 || beta2 >= 1.0 || epsilon <= 0.0 || warmup_ratio < 0.0 ||
        warmup_ratio > 1.0 || tau <= 0.0 || orthogonal_weight < 0.0 || n_per_record < 1) {
      throw ConfigError("train config value out of range");
    }
    model_config().validate();
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "epochs=" << epochs << "\n"
       << "batch_size=" << batch_size << "\n"
       << "learning_rate=" << learning_rate << "\n"
       << "beta1=" << beta1 << "\n"
       << "beta2=" << beta2 << "\n"
       << "epsilon=" << epsilon << "\n"
       << "warmup_ratio=" << warmup_ratio << "\n"
       << "tau=" << tau << "\n"
       << "orthogonal_weight=" << orthogonal_weight << "\n"
       << "n_per_record=" << n_per_record << "\n"
       << "seed=" << seed << "\n"
       << "d=" << d << "\n"
       << "encoder_layers=" << encoder_layers << "\n"
       << "decoder_layers=" << decoder_layers << "\n"
       << "heads=" << heads << "\n"
       << "ff=" << ff << "\n"
       << "max_len=" << max_len << "\n"
       << "views=" << views << "\n"
       << "vocab_size=" << vocab_size << "\n"
       << "view_token_mode=" << view_token_mode << "\n";
    return os.str();
  }
};

inline TrainConfig parse_train_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  auto to_int = [](const std::string& v) { return std::stoi(v); };
  auto to_u64 = [](const std::string& v) { return std::stoull(v); };
  auto to_dbl = [](const std::string& v) { return std::stod(v); };
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "epochs") cfg.epochs = to_int(value);
      else if (key == "batch_size") cfg.batch_size = to_int(value);
      else if (key == "learning_rate") cfg.learning_rate = to_dbl(value);
      else if (key == "beta1") cfg.beta1 = to_dbl(value);
      else if (key == "beta2") cfg.beta2 = to_dbl(value);
      else if (key == "epsilon") cfg.epsilon = to_dbl(value);
      else if (key == "warmup_ratio") cfg.warmup_ratio = to_dbl(value);
      else if (key == "tau") cfg.tau = to_dbl(value);
      else if (key == "orthogonal_weight") cfg.orthogonal_weight = to_dbl(value);
      else if (key == "n_per_record") cfg.n_per_record = to_int(value);
      else if (key == "seed") cfg.seed = to_u64(value);
      else if (key == "d") cfg.d = to_int(value);
      else if (key == "encoder_layers") cfg.encoder_layers = to_int(value);
      else if (key == "decoder_layers") cfg.decoder_layers = to_int(value);
      else if (key == "heads") cfg.heads = to_int(value);
      else if (key == "ff") cfg.ff = to_int(value);
      else if (key == "max_len") cfg.max_len = to_int(value);
      else if (key == "views") cfg.views = to_int(value);
      else if (key == "vocab_size") cfg.vocab_size = to_int(value);
      else if (key == "view_token_mode") cfg.view_token_mode = value;
      else throw ConfigError("line " + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad value for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig parse_train_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_train_config_text(text);
}

/// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double epsilon)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(ModelParams& params, const std::vector<Tensor>& grads, double lr_scale = 1.0) {
    auto& entries = params.entries();
    if (m_.empty()) {
      for (const auto& [name, t] : entries) {
        m_.push_back(Tensor::zeros(t.shape()));
        v_.push_back(Tensor::zeros(t.shape()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double lr = lr_ * lr_scale;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      Tensor& theta = entries[i].second;
      const Tensor& g = grads[i];
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        theta[j] -= lr * mhat / (std::sqrt(vhat) + epsilon_);
      }
    }
  }

  std::uint64_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct EpochStats {
  double mean_rank_loss = 0.0;
  double mean_orthogonal_loss = 0.0;
  double valid_ndcg = -1.0;  // -1 when no validation set was given

  bool operator==(const EpochStats& o) const {
    return mean_rank_loss == o.mean_rank_loss &&
           mean_orthogonal_loss == o.mean_orthogonal_loss && valid_ndcg == o.valid_ndcg;
  }
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
  std::uint64_t steps = 0;
  std::uint64_t rng_state = 0;
};

struct EvalResult {
  double mean_ndcg = 0.0;
  int evaluated = 0;
  int skipped = 0;  // records whose nDCG is undefined (no positive relevance)
};

/// Mean nDCG@k over records, scoring with the model and judging with the
/// planted relevance (reciprocal ranks when no relevance is stored).
inline EvalResult evaluate(const ModelParams& params, const std::vector<RankingRecord>& records,
                           std::size_t k,
                           const AggregationStrategy& strategy = AggregationStrategy::Mean()) {
  const Vocab vocab(params.config().vocab_size);
  const PromptLayout layout = PromptLayout::from_config(params.config());
  const ModelGraph graph = ModelGraph::bind(params, /*requires_grad=*/false);
  EvalResult out;
  double total = 0.0;
  for (const RankingRecord& rec : records) {
    const RelevanceMatrix rel = encode_candidates(rec.query, rec.candidate_tokens(), graph.enc,
                                                  graph.config, vocab, layout);
    const AnchorSet anchors = decode_anchors(rel, graph.dec, graph.config);
    const ScoreVector sv = score(anchors, rel, strategy);
    std::vector<double> judgments = rec.relevance;
    if (judgments.empty()) {
      judgments.reserve(rec.ranks.size());
      for (int r : rec.ranks) judgments.push_back(1.0 / static_cast<double>(r));
    }
    try {
      total += ndcg_at_k(rank(sv), judgments, k);
      ++out.evaluated;
    } catch (const UndefinedMetricError&) {
      ++out.skipped;
    }
  }
  out.mean_ndcg = out.evaluated > 0 ? total / out.evaluated : 0.0;
  return out;
}

/// Deterministic end-to-end training: per step, forward
/// (encoder -> decoder -> scores), combined loss, backward, Adam update with
/// linear warm-up. (seed, config, corpus) fully determine every logged number.
inline TrainResult train(const TrainConfig& cfg, const std::vector<RankingRecord>& train_records,
                         const std::vector<RankingRecord>& valid_records = {}) {
  cfg.validate();
  if (train_records.empty()) throw ParameterError("training corpus is empty");
  const ModelConfig mc = cfg.model_config();
  const Vocab vocab(mc.vocab_size);
  const PromptLayout layout = PromptLayout::from_config(mc);

  TrainResult result;
  result.params = ModelParams::init(mc, cfg.seed);
  Adam opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  SplitMix64 shuffle_rng(cfg.seed ^ 0x7454cb4db1a8d9e3ULL);

  const std::size_t n = train_records.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
  const std::size_t warmup_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.warmup_ratio * static_cast<double>(total_steps))));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_rank = 0.0, epoch_orth = 0.0;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t batch_end = std::min(n, at + static_cast<std::size_t>(cfg.batch_size));
      const ModelGraph graph = ModelGraph::bind(result.params, /*requires_grad=*/true);
      Var batch_loss;
      for (std::size_t b = at; b < batch_end; ++b) {
        const RankingRecord& rec = train_records[order[b]];
        const std::vector<double> targets = reciprocal_targets(rec.ranks);
        const RelevanceMatrix rel = encode_candidates(rec.query, rec.candidate_tokens(), graph.enc,
                                                      graph.config, vocab, layout);
        const AnchorSet anchors = decode_anchors(rel, graph.dec, graph.config);
        const std::vector<Var> scores = score_vars(anchors, rel, AggregationStrategy::Mean());
        LossValue lv = total_loss(targets, scores, anchors, cfg.tau, cfg.orthogonal_weight);
        lv.check_finite("step " + std::to_string(global_step));
        epoch_rank += lv.rank_loss;
        epoch_orth += lv.orthogonal_loss;
        ++seen;
        batch_loss = batch_loss.defined() ? add(batch_loss, lv.node) : lv.node;
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(batch_end - at));
      backward(batch_loss);
      std::vector<Tensor> grads;
      grads.reserve(graph.leaves.size());
      for (const auto& [name, leaf] : graph.leaves) {
        grads.push_back(leaf.grad().size() == leaf.value().size() ? leaf.grad()
                                                                  : Tensor::zeros(leaf.shape()));
      }
      ++global_step;
      const double warm =
          std::min(1.0, static_cast<double>(global_step) / static_cast<double>(warmup_steps));
      opt.step(result.params, grads, warm);
    }
    EpochStats stats;
    stats.mean_rank_loss = seen ? epoch_rank / static_cast<double>(seen) : 0.0;
    stats.mean_orthogonal_loss = seen ? epoch_orth / static_cast<double>(seen) : 0.0;
    if (!valid_records.empty()) {
      stats.valid_ndcg = evaluate(result.params, valid_records, 10).mean_ndcg;
    }
    result.history.push_back(stats);
  }
  result.steps = global_step;
  result.rng_state = shuffle_rng.state();
  return result;
}

struct LoadedModel {
  TrainConfig config;
  ModelParams params;
  std::uint64_t step = 0;
  std::uint64_t rng_state = 0;
};

inline void save_model(const std::string& path, const ModelParams& params, const TrainConfig& cfg,
                       std::uint64_t step, std::uint64_t rng_state) {
  save_checkpoint(path, params, cfg.to_text(), step, rng_state);
}

inline LoadedModel load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  LoadedModel out;
  out.config = parse_train_config_text(ck.config_echo);
  out.params = std::move(ck.params);
  out.params.config() = out.config.model_config();
  out.step = ck.step;
  out.rng_state = ck.rng_state;
  validate_checkpoint_shapes(out.params, out.params.config());
  return out;
}

}  // namespace mvp

#endif  // MVP_TRAINER_HPP_
