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
#ifndef MVP_OBJECTIVES_HPP_
#define MVP_OBJECTIVES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "mvp/autodiff.hpp"
#include "mvp/decoder.hpp"
#include "mvp/error.hpp"
#include "mvp/tensor.hpp"

namespace mvp {

/// y_i = 1 / r_i for ground-truth ranks r_i (a permutation of 1..n,
/// rank 1 = most relevant).
inline std::vector<double> reciprocal_targets(const std::vector<int>& ranks) {
  const int n = static_cast<int>(ranks.size());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int r : ranks) {
    if (r < 1 || r > n || seen[static_cast<std::size_t>(r - 1)]) {
      throw LabelError("ranks are not a permutation of 1.." + std::to_string(n) +
                       " (offending value " + std::to_string(r) + ")");
    }
    seen[static_cast<std::size_t>(r - 1)] = true;
  }
  std::vector<double> y(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) y[i] = 1.0 / static_cast<double>(ranks[i]);
  return y;
}

struct ListNetValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d s = (P(s) - P(y)) / tau
};

/// ListNet cross-entropy between temperature-scaled softmax distributions of
/// targets y and scores s:  L = -sum_i P(y_i) log P(s_i).
inline ListNetValue listnet_loss(const std::vector<double>& y, const std::vector<double>& s,
                                 double tau) {
  if (tau <= 0.0) throw ParameterError("listnet temperature must be positive");
  if (y.size() != s.size() || y.empty()) {
    throw DimensionError("listnet_loss lengths: y " + std::to_string(y.size()) + ", s " +
                         std::to_string(s.size()));
  }
  const std::size_t n = y.size();
  std::vector<double> py(n), ps(n);
  detail::softmax_row(y.data(), py.data(), n, tau);
  detail::softmax_row(s.data(), ps.data(), n, tau);
  // log P(s) via the numerically stable log-sum-exp
  double mx = s[0];
  for (double v : s) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : s) z += std::exp((v - mx) / tau);
  const double log_z = std::log(z);
  ListNetValue out;
  out.grad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_ps = (s[i] - mx) / tau - log_z;
    out.loss -= py[i] * log_ps;
    out.grad[i] = (ps[i] - py[i]) / tau;
  }
  return out;
}

/// Graph version: scalar node whose backward applies (P(s) - P(y)) / tau.
inline Var listnet_loss(const std::vector<double>& y, const Var& s, double tau) {
  const Tensor& sv = s.value();
  if (sv.rank() != 1) throw DimensionError("listnet_loss expects a score vector");
  const ListNetValue v = listnet_loss(y, sv.data(), tau);
  return detail::make_op(Tensor::scalar(v.loss), {s}, [grad = v.grad](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < grad.size(); ++i) pg[i] += n.grad[0] * grad[i];
  });
}

/// Entropy of the temperature-scaled target distribution; the global minimum
/// of the ListNet loss over s.
inline double listnet_entropy(const std::vector<double>& y, double tau) {
  if (tau <= 0.0) throw ParameterError("listnet temperature must be positive");
  std::vector<double> py(y.size());
  detail::softmax_row(y.data(), py.data(), y.size(), tau);
  double h = 0.0;
  for (double p : py) h -= p * std::log(p);
  return h;
}

/// Orthogonality regularizer over anchors: the squared pairwise cosine
/// similarity summed over ordered pairs (each unordered pair counts twice).
/// m = 1 gives the empty sum.
inline double orthogonal_loss_value(const Tensor& anchors) {
  if (anchors.rank() != 2) throw DimensionError("orthogonal_loss expects [m x d] anchors");
  const std::size_t m = anchors.dim(0), d = anchors.dim(1);
  std::vector<double> norms(m);
  for (std::size_t k = 0; k < m; ++k) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += anchors.at(k, j) * anchors.at(k, j);
    norms[k] = std::sqrt(sq);
    if (norms[k] <= 1e-12) {
      throw DegenerateVectorError("orthogonal_loss anchor " + std::to_string(k + 1) +
                                  " has near-zero norm");
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      double dotv = 0.0;
      for (std::size_t j = 0; j < d; ++j) dotv += anchors.at(k, j) * anchors.at(l, j);
      const double c = dotv / (norms[k] * norms[l]);
      total += c * c;
    }
  }
  return total;
}

/// Graph version built from cosine nodes, so the gradient flows to the
/// anchors (and through them to the whole model).
inline Var orthogonal_loss(const AnchorSet& anchors) {
  const int m = anchors.views();
  if (m < 1) throw ParameterError("orthogonal_loss needs at least one anchor");
  Var total = Var::constant(Tensor::scalar(0.0));
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      if (l == k) continue;
      total = add(total, square(cosine_similarity(anchors.anchors[static_cast<std::size_t>(k)],
                                                  anchors.anchors[static_cast<std::size_t>(l)])));
    }
  }
  return total;
}

/// Combined objective for one query (ranking term plus orthogonality term).
struct LossValue {
  double rank_loss = 0.0;
  double orthogonal_loss = 0.0;
  double total = 0.0;
  Var node;  // scalar graph node for backward

  void check_finite(const std::string& where) const {
    if (!std::isfinite(rank_loss)) {
      throw TrainingDivergenceError(where + ": rank_loss is non-finite");
    }
    if (!std::isfinite(orthogonal_loss)) {
      throw TrainingDivergenceError(where + ": orthogonal_loss is non-finite");
    }
    if (!std::isfinite(total)) throw TrainingDivergenceError(where + ": total loss is non-finite");
  }
};

/// L = L_rank + orthogonal_weight * L_orthogonal. The weight exists for the
/// ablation harness and defaults to 1 (the plain unweighted sum).
inline LossValue total_loss(const std::vector<double>& targets, const std::vector<Var>& scores,
                            const AnchorSet& anchors, double tau, double orthogonal_weight = 1.0) {
  Var s = stack_scalars(scores);
  Var rank_term = listnet_loss(targets, s, tau);
  Var orth_term = orthogonal_loss(anchors);
  LossValue out;
  out.rank_loss = rank_term.value()[0];
  out.orthogonal_loss = orthogonal_weight * orth_term.value()[0];
  out.node = orthogonal_weight == 0.0
                 ? rank_term
                 : add(rank_term, scale(orth_term, orthogonal_weight));
  out.total = out.node.value()[0];
  return out;
}

}  // namespace mvp

#endif  // MVP_OBJECTIVES_HPP_
