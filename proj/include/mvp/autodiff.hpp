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
#ifndef MVP_AUTODIFF_HPP_
#define MVP_AUTODIFF_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mvp/error.hpp"
#include "mvp/tensor.hpp"

namespace mvp {

// ---------------------------------------------------------------------------
// Reverse-mode tape. The graph is rebuilt on every forward pass; a node owns
// its value, its accumulated gradient, and a closure that pushes the gradient
// into its parents. Backward visits nodes in reverse topological order exactly
// once, so a leaf's gradient is the sum of all chain-rule contributions.
// A graph is confined to one thread.
// ---------------------------------------------------------------------------

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;

  Tensor& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

/// Value-semantic handle on a graph node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  /// Leaf from a tensor; tracked iff t.requires_grad.
  static Var leaf(Tensor t) {
    auto n = std::make_shared<Node>();
    n->requires_grad = t.requires_grad;
    n->value = std::move(t);
    return Var(std::move(n));
  }

  static Var leaf(Tensor t, bool requires_grad) {
    t.requires_grad = requires_grad;
    return leaf(std::move(t));
  }

  static Var constant(Tensor t) { return leaf(std::move(t), false); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const NodePtr& node() const { return node_; }

  std::size_t size() const { return value().size(); }
  const std::vector<std::size_t>& shape() const { return value().shape(); }

 private:
  NodePtr node_;
};

namespace detail {

inline Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
  value.validate_finite();
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const Var& v : inputs) {
    if (v.requires_grad()) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) {
    n->parents.reserve(inputs.size());
    for (const Var& v : inputs) n->parents.push_back(v.node());
    n->backprop = std::move(backprop);
  }
  return Var(std::move(n));
}

}  // namespace detail

/// Backpropagate from a scalar root. Gradients accumulate into every tracked
/// node reachable from the root; leaf gradients are read via Var::grad().
inline void backward(const Var& root) {
  if (!root.defined()) throw EvaluationError("backward on an undefined variable");
  if (root.size() != 1) {
    throw DimensionError("backward root must be scalar, got shape " + root.value().shape_string());
  }
  if (!root.requires_grad()) return;

  // Iterative post-order topological sort (graphs can be deep).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("add shapes differ: " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    const Tensor& g = n.grad;
    for (int p = 0; p < 2; ++p) {
      Node& parent = *n.parents[p];
      if (!parent.requires_grad) continue;
      Tensor& pg = parent.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("sub shapes differ: " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    const Tensor& g = n.grad;
    if (n.parents[0]->requires_grad) {
      Tensor& pg = n.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& pg = n.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] -= g[i];
    }
  });
}

inline Var mul(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("mul shapes differ: " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    const Tensor& g = n.grad;
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& pg = n.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * bv[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& pg = n.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * av[i];
    }
  });
}

inline Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (double& x : out.data()) x *= c;
  return detail::make_op(std::move(out), {a}, [c](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < n.grad.size(); ++i) pg[i] += c * n.grad[i];
  });
}

inline Var square(const Var& a) { return mul(a, a); }

/// matmul(a[p x q], b[q x r]) -> [p x r].  d a = g b^T,  d b = a^T g.
inline Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2) {
    throw DimensionError("matmul expects rank-2 operands, got " + av.shape_string() + " and " +
                         bv.shape_string());
  }
  const std::size_t p = av.dim(0), q = av.dim(1), r = bv.dim(1);
  if (bv.dim(0) != q) {
    throw DimensionError("matmul inner dimensions disagree: " + av.shape_string() + " x " +
                         bv.shape_string());
  }
  Tensor out({p, r});
  for (std::size_t i = 0; i < p; ++i) {
    const double* arow = &av.data()[i * q];
    double* orow = &out.data()[i * r];
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &bv.data()[k * r];
      for (std::size_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
    }
  }
  return detail::make_op(std::move(out), {a, b}, [p, q, r](Node& n) {
    const Tensor& g = n.grad;
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& ga = n.parents[0]->grad_buffer();  // g [p x r] * b^T [r x q]
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
          const double gij = g.data()[i * r + j];
          if (gij == 0.0) continue;
          const double* brow = &bv.data()[0];
          for (std::size_t k = 0; k < q; ++k) {
            ga.data()[i * q + k] += gij * brow[k * r + j];
          }
        }
      }
    }
    if (n.parents[1]->requires_grad) {
      Tensor& gb = n.parents[1]->grad_buffer();  // a^T [q x p] * g [p x r]
      for (std::size_t i = 0; i < p; ++i) {
        const double* arow = &av.data()[i * q];
        const double* grow = &g.data()[i * r];
        for (std::size_t k = 0; k < q; ++k) {
          const double aik = arow[k];
          if (aik == 0.0) continue;
          double* gbrow = &gb.data()[k * r];
          for (std::size_t j = 0; j < r; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

inline Var transpose(const Var& a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw DimensionError("transpose expects rank-2, got " + av.shape_string());
  const std::size_t p = av.dim(0), q = av.dim(1);
  Tensor out({q, p});
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) out.at(j, i) = av.at(i, j);
  return detail::make_op(std::move(out), {a}, [p, q](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) pg.at(i, j) += n.grad.at(j, i);
  });
}

namespace detail {

/// Stable softmax of one row in place: y = softmax(x / temperature).
inline void softmax_row(const double* x, double* y, std::size_t n, double temperature) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::exp((x[i] - mx) / temperature);
    z += y[i];
  }
  for (std::size_t i = 0; i < n; ++i) y[i] /= z;
}

/// d x = (y ∘ (g − <g, y>)) / temperature for one row.
inline void softmax_row_backward(const double* y, const double* g, double* gx, std::size_t n,
                                 double temperature) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - dot) / temperature;
}

}  // namespace detail

/// Temperature-scaled softmax over a vector. Output sums to 1 within 1e-12;
/// invariant to adding a constant to all inputs.
inline Var softmax(const Var& v, double temperature) {
  if (temperature <= 0.0) {
    throw ParameterError("softmax temperature must be positive, got " + std::to_string(temperature));
  }
  const Tensor& x = v.value();
  if (x.rank() != 1 || x.size() == 0) {
    throw DimensionError("softmax expects a non-empty vector, got " + x.shape_string());
  }
  Tensor out(x.shape());
  detail::softmax_row(x.data().data(), out.data().data(), x.size(), temperature);
  return detail::make_op(std::move(out), {v}, [temperature](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    detail::softmax_row_backward(n.value.data().data(), n.grad.data().data(), pg.data().data(),
                                 n.value.size(), temperature);
  });
}

/// Row-wise softmax of a rank-2 tensor (attention weights).
inline Var softmax_rows(const Var& v, double temperature = 1.0) {
  if (temperature <= 0.0) {
    throw ParameterError("softmax temperature must be positive, got " + std::to_string(temperature));
  }
  const Tensor& x = v.value();
  if (x.rank() != 2) throw DimensionError("softmax_rows expects rank-2, got " + x.shape_string());
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    detail::softmax_row(&x.data()[i * cols], &out.data()[i * cols], cols, temperature);
  }
  return detail::make_op(std::move(out), {v}, [rows, cols, temperature](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i) {
      detail::softmax_row_backward(&n.value.data()[i * cols], &n.grad.data()[i * cols],
                                   &pg.data()[i * cols], cols, temperature);
    }
  });
}

/// Per-row normalization: remove the row mean, scale the centered row to unit
/// RMS, multiply by a learnable gain. Accepts rank-1 [d] or rank-2 [T x d].
inline Var layer_norm(const Var& x, const Var& gain) {
  constexpr double kEps = 1e-12;
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  if (xv.rank() == 0 || xv.size() == 0) throw DimensionError("layer_norm on empty tensor");
  const std::size_t d = xv.rank() == 1 ? xv.dim(0) : xv.dim(xv.rank() - 1);
  if (d == 0) throw DimensionError("layer_norm feature dimension is zero");
  if (gv.rank() != 1 || gv.dim(0) != d) {
    throw DimensionError("layer_norm gain shape " + gv.shape_string() + " does not match width " +
                         std::to_string(d));
  }
  const std::size_t rows = xv.size() / d;
  Tensor out(xv.shape());
  for (std::size_t rix = 0; rix < rows; ++rix) {
    const double* xr = &xv.data()[rix * d];
    double* yr = &out.data()[rix * d];
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double msq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      msq += c * c;
    }
    const double sigma = std::sqrt(msq / static_cast<double>(d) + kEps);
    for (std::size_t j = 0; j < d; ++j) yr[j] = (xr[j] - mean) / sigma * gv[j];
  }
  return detail::make_op(std::move(out), {x, gain}, [rows, d](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& gv = n.parents[1]->value;
    const bool need_x = n.parents[0]->requires_grad;
    const bool need_g = n.parents[1]->requires_grad;
    Tensor* gx = need_x ? &n.parents[0]->grad_buffer() : nullptr;
    Tensor* gg = need_g ? &n.parents[1]->grad_buffer() : nullptr;
    for (std::size_t rix = 0; rix < rows; ++rix) {
      const double* xr = &xv.data()[rix * d];
      const double* gr = &n.grad.data()[rix * d];
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += xr[j];
      mean /= static_cast<double>(d);
      double msq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double c = xr[j] - mean;
        msq += c * c;
      }
      const double sigma = std::sqrt(msq / static_cast<double>(d) + 1e-12);
      // u_j = (x_j - mean)/sigma; ghat_j = g_j * gain_j
      double ghat_mean = 0.0, ghat_dot_u = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double u = (xr[j] - mean) / sigma;
        const double ghat = gr[j] * gv[j];
        ghat_mean += ghat;
        ghat_dot_u += ghat * u;
        if (need_g) gg->data()[j] += gr[j] * u;
      }
      ghat_mean /= static_cast<double>(d);
      ghat_dot_u /= static_cast<double>(d);
      if (need_x) {
        for (std::size_t j = 0; j < d; ++j) {
          const double u = (xr[j] - mean) / sigma;
          const double ghat = gr[j] * gv[j];
          gx->data()[rix * d + j] += (ghat - ghat_mean - u * ghat_dot_u) / sigma;
        }
      }
    }
  });
}

/// Smooth GELU (tanh approximation); the exact derivative of the same
/// approximation is used in backward, so gradient checks are clean.
inline Var gelu(const Var& a) {
  constexpr double kRoot2OverPi = 0.7978845608028653558798921198687;
  constexpr double kCubic = 0.044715;
  Tensor out = a.value();
  for (double& x : out.data()) {
    const double z = kRoot2OverPi * (x + kCubic * x * x * x);
    x = 0.5 * x * (1.0 + std::tanh(z));
  }
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    constexpr double kRoot2OverPi = 0.7978845608028653558798921198687;
    constexpr double kCubic = 0.044715;
    const Tensor& xv = n.parents[0]->value;
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double x = xv[i];
      const double z = kRoot2OverPi * (x + kCubic * x * x * x);
      const double t = std::tanh(z);
      const double dz = kRoot2OverPi * (1.0 + 3.0 * kCubic * x * x);
      const double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dz;
      pg[i] += n.grad[i] * d;
    }
  });
}

/// Row gather: out[i, :] = table[ids[i], :]. Backward scatter-adds.
inline Var gather_rows(const Var& table, const std::vector<int>& ids) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("gather_rows expects rank-2 table");
  const std::size_t d = tv.dim(1);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tv.dim(0)) {
      throw VocabError("row index " + std::to_string(id) + " out of range for table " +
                       tv.shape_string());
    }
  }
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(&tv.data()[static_cast<std::size_t>(ids[i]) * d], d, &out.data()[i * d]);
  }
  return detail::make_op(std::move(out), {table}, [ids, d](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double* g = &n.grad.data()[i * d];
      double* dst = &pg.data()[static_cast<std::size_t>(ids[i]) * d];
      for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
    }
  });
}

inline Var slice_rows(const Var& a, std::size_t start, std::size_t count) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw DimensionError("slice_rows expects rank-2, got " + av.shape_string());
  if (start + count > av.dim(0)) {
    throw DimensionError("slice_rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " + av.shape_string());
  }
  const std::size_t d = av.dim(1);
  Tensor out({count, d});
  std::copy_n(&av.data()[start * d], count * d, out.data().data());
  return detail::make_op(std::move(out), {a}, [start, count, d](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < count * d; ++i) pg.data()[start * d + i] += n.grad.data()[i];
  });
}

inline Var slice_cols(const Var& a, std::size_t start, std::size_t count) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw DimensionError("slice_cols expects rank-2, got " + av.shape_string());
  const std::size_t rows = av.dim(0), cols = av.dim(1);
  if (start + count > cols) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " + av.shape_string());
  }
  Tensor out({rows, count});
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(&av.data()[i * cols + start], count, &out.data()[i * count]);
  }
  return detail::make_op(std::move(out), {a}, [rows, cols, start, count](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < count; ++j)
        pg.data()[i * cols + start + j] += n.grad.data()[i * count + j];
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t d = parts[0].value().dim(1);
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.value().rank() != 2 || p.value().dim(1) != d) {
      throw DimensionError("concat_rows column mismatch: " + p.value().shape_string());
    }
    rows += p.value().dim(0);
  }
  Tensor out({rows, d});
  std::size_t at = 0;
  std::vector<std::size_t> offsets(parts.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    offsets[k] = at;
    const Tensor& pv = parts[k].value();
    std::copy_n(pv.data().data(), pv.size(), &out.data()[at * d]);
    at += pv.dim(0);
  }
  return detail::make_op(std::move(out), parts, [offsets, d](Node& n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      Node& parent = *n.parents[k];
      if (!parent.requires_grad) continue;
      Tensor& pg = parent.grad_buffer();
      const std::size_t count = parent.value.size();
      for (std::size_t i = 0; i < count; ++i) pg.data()[i] += n.grad.data()[offsets[k] * d + i];
    }
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t rows = parts[0].value().dim(0);
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.value().rank() != 2 || p.value().dim(0) != rows) {
      throw DimensionError("concat_cols row mismatch: " + p.value().shape_string());
    }
    cols += p.value().dim(1);
  }
  Tensor out({rows, cols});
  std::vector<std::size_t> offsets(parts.size());
  std::size_t at = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    offsets[k] = at;
    const Tensor& pv = parts[k].value();
    const std::size_t pc = pv.dim(1);
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(&pv.data()[i * pc], pc, &out.data()[i * cols + at]);
    }
    at += pc;
  }
  return detail::make_op(std::move(out), parts, [offsets, rows, cols](Node& n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      Node& parent = *n.parents[k];
      if (!parent.requires_grad) continue;
      Tensor& pg = parent.grad_buffer();
      const std::size_t pc = parent.value.dim(1);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < pc; ++j)
          pg.data()[i * pc + j] += n.grad.data()[i * cols + offsets[k] + j];
    }
  });
}

/// Flat dot product of two equally sized tensors -> scalar.
inline Var dot(const Var& a, const Var& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot sizes differ: " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.value()[i] * b.value()[i];
  return detail::make_op(Tensor::scalar(s), {a, b}, [](Node& n) {
    const double g = n.grad[0];
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& pg = n.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < av.size(); ++i) pg.data()[i] += g * bv[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& pg = n.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < bv.size(); ++i) pg.data()[i] += g * av[i];
    }
  });
}

inline Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  return detail::make_op(Tensor::scalar(s), {a}, [](Node& n) {
    Tensor& pg = n.parents[0]->grad_buffer();
    const double g = n.grad[0];
    for (double& x : pg.data()) x += g;
  });
}

/// Pack scalar Vars into one vector Var.
inline Var stack_scalars(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw DimensionError("stack_scalars of nothing");
  Tensor out({scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].size() != 1) throw DimensionError("stack_scalars expects scalars");
    out[i] = scalars[i].value()[0];
  }
  return detail::make_op(std::move(out), scalars, [](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      Node& parent = *n.parents[i];
      if (parent.requires_grad) parent.grad_buffer()[0] += n.grad[i];
    }
  });
}

/// Maximum of scalar Vars; gradient routes to the first argmax.
inline Var vmax(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw DimensionError("vmax of nothing");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scalars.size(); ++i) {
    if (scalars[i].value()[0] > scalars[best].value()[0]) best = i;
  }
  return detail::make_op(Tensor::scalar(scalars[best].value()[0]), scalars, [best](Node& n) {
    Node& parent = *n.parents[best];
    if (parent.requires_grad) parent.grad_buffer()[0] += n.grad[0];
  });
}

/// Cosine similarity of two equally sized tensors, clamped to [-1, 1].
/// Norms below 1e-12 are degenerate.
inline Var cosine_similarity(const Var& a, const Var& b) {
  constexpr double kNormEps = 1e-12;
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity sizes differ: " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a.value()[i] * b.value()[i];
    aa += a.value()[i] * a.value()[i];
    bb += b.value()[i] * b.value()[i];
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na <= kNormEps || nb <= kNormEps) {
    throw DegenerateVectorError("cosine_similarity on a near-zero vector (norms " +
                                std::to_string(na) + ", " + std::to_string(nb) + ")");
  }
  const double cosv = std::clamp(ab / (na * nb), -1.0, 1.0);
  return detail::make_op(Tensor::scalar(cosv), {a, b}, [na, nb, cosv](Node& n) {
    const double g = n.grad[0];
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& pg = n.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < av.size(); ++i) {
        pg.data()[i] += g * (bv[i] / (na * nb) - cosv * av[i] / (na * na));
      }
    }
    if (n.parents[1]->requires_grad) {
      Tensor& pg = n.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < bv.size(); ++i) {
        pg.data()[i] += g * (av[i] / (na * nb) - cosv * bv[i] / (nb * nb));
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

/// Max over coordinates of |analytic - central difference| /
/// (|analytic| + |central| + 1e-12) for a scalar function of one tensor.
inline double grad_check(const std::function<Var(const Var&)>& f, const Tensor& theta, double h) {
  if (h < 1e-6 || h > 1e-4) {
    throw ParameterError("grad_check step must lie in [1e-6, 1e-4], got " + std::to_string(h));
  }
  Var leaf = Var::leaf(theta, true);
  Var loss = f(leaf);
  if (loss.size() != 1) throw EvaluationError("grad_check target is not scalar");
  if (!std::isfinite(loss.value()[0])) throw EvaluationError("grad_check loss is non-finite");
  backward(loss);
  Tensor analytic = leaf.grad();
  if (analytic.size() != theta.size()) analytic = Tensor::zeros(theta.shape());

  auto eval = [&](const Tensor& t) {
    Var v = Var::leaf(t, false);
    Var out = f(v);
    const double y = out.value()[0];
    if (!std::isfinite(y)) throw EvaluationError("grad_check loss is non-finite");
    return y;
  };

  double worst = 0.0;
  Tensor probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = eval(probe);
    probe[i] = orig - h;
    const double fm = eval(probe);
    probe[i] = orig;
    const double central = (fp - fm) / (2.0 * h);
    const double rel = std::abs(analytic[i] - central) /
                       (std::abs(analytic[i]) + std::abs(central) + 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace mvp

#endif  // MVP_AUTODIFF_HPP_
