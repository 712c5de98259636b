// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with reverse-mode automatic differentiation over a
// dynamically built graph. A Tensor is a shared handle to a graph node; ops
// are free functions that record a backward closure when gradients are being
// tracked. Gradients accumulate (add-into-grad) until zero_grad().

#ifndef EGT_TENSOR_HPP_
#define EGT_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "egt/error.hpp"
#include "egt/rng.hpp"

namespace egt {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d < 1) {
      throw ShapeError("extent " + std::to_string(d) + " in " +
                       shape_str(shape) + " (all extents must be >= 1)");
    }
  }
}

// Thread-local gradient tracking mode, on by default.
class GradMode {
 public:
  static bool enabled() { return flag(); }
  static void set(bool on) { flag() = on; }

 private:
  static bool& flag() {
    thread_local bool on = true;
    return on;
  }
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename S>
struct TensorNode {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool tracked = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode<S>>> parents;
  std::function<void(TensorNode<S>&)> backward_fn;

  std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }

  std::vector<S>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), S(0));
    return grad;
  }

  void accumulate_grad(const S* g, std::int64_t n) {
    auto& dst = ensure_grad();
    for (std::int64_t i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i];
  }
};

template <typename S>
class Tensor {
 public:
  using Node = TensorNode<S>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape) { return full(std::move(shape), S(0)); }

  static Tensor full(Shape shape, S fill) {
    check_shape(shape);
    auto node = std::make_shared<Node>();
    node->value.assign(static_cast<std::size_t>(shape_numel(shape)), fill);
    node->shape = std::move(shape);
    return Tensor(std::move(node));
  }

  static Tensor from(Shape shape, std::vector<S> data) {
    check_shape(shape);
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    return Tensor(std::move(node));
  }

  static Tensor uniform(Shape shape, S lo, S hi, std::uint64_t seed) {
    check_shape(shape);
    Rng rng(seed);
    std::vector<S> data(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : data) v = static_cast<S>(rng.uniform(lo, hi));
    return from(std::move(shape), std::move(data));
  }

  static Tensor normal(Shape shape, S mean, S stddev, std::uint64_t seed) {
    check_shape(shape);
    Rng rng(seed);
    std::vector<S> data(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : data) v = static_cast<S>(rng.normal(mean, stddev));
    return from(std::move(shape), std::move(data));
  }

  // Fan-in scaled normal init for layers followed by ReLU.
  static Tensor kaiming_normal(Shape shape, std::int64_t fan_in,
                               std::uint64_t seed) {
    if (fan_in < 1) throw ShapeError("kaiming fan_in must be >= 1");
    const S stddev = static_cast<S>(std::sqrt(2.0 / static_cast<double>(fan_in)));
    return normal(std::move(shape), S(0), stddev, seed);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return node_->numel(); }

  const std::vector<S>& value() const { return node_->value; }
  // Direct mutation is reserved for leaves (optimizer updates, test probes).
  std::vector<S>& mutable_value() { return node_->value; }

  S item() const {
    if (numel() != 1) {
      throw ContractError("item() requires a scalar tensor, got shape " +
                          shape_str(shape()));
    }
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    node_->requires_grad = on;
    node_->tracked = on || !node_->parents.empty();
    return *this;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<S>& grad() const {
    if (node_->grad.empty()) {
      throw ContractError("tensor has no gradient (op=" +
                          std::string(node_->op) + ")");
    }
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  // Detached view of the same values; never part of a graph.
  Tensor detach() const {
    auto node = std::make_shared<Node>();
    node->shape = node_->shape;
    node->value = node_->value;
    return Tensor(std::move(node));
  }

  std::shared_ptr<Node> node() const { return node_; }

  void backward() const;

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

// Creates an op result node; parents/backward are recorded only when some
// input is tracked and grad mode is on.
template <typename S>
Tensor<S> make_op(Shape shape, std::vector<S> value, const char* op,
                  std::initializer_list<Tensor<S>> inputs,
                  std::function<void(TensorNode<S>&)> backward_fn) {
  auto node = std::make_shared<TensorNode<S>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (GradMode::enabled()) {
    bool any_tracked = false;
    for (const auto& t : inputs) any_tracked = any_tracked || t.node()->tracked;
    if (any_tracked) {
      node->tracked = true;
      node->parents.reserve(inputs.size());
      for (const auto& t : inputs) node->parents.push_back(t.node());
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor<S>(std::move(node));
}

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": operand shapes " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                     " differ");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops (equal shapes, or scalar broadcast via the 1-element form).

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (b.numel() == 1 && a.numel() != 1) {
    const S bv = b.value()[0];
    std::vector<S> out(a.value());
    for (auto& v : out) v += bv;
    return detail::make_op<S>(
        a.shape(), std::move(out), "add", {a, b},
        [](TensorNode<S>& self) {
          auto& ga = *self.parents[0];
          auto& gb = *self.parents[1];
          if (ga.tracked) ga.accumulate_grad(self.grad.data(), self.numel());
          if (gb.tracked) {
            S total = S(0);
            for (auto g : self.grad) total += g;
            gb.accumulate_grad(&total, 1);
          }
        });
  }
  if (a.numel() == 1 && b.numel() != 1) return add(b, a);
  detail::require_same_shape(a, b, "add");
  std::vector<S> out(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return detail::make_op<S>(
      a.shape(), std::move(out), "add", {a, b},
      [](TensorNode<S>& self) {
        for (auto& parent : self.parents) {
          if (parent->tracked)
            parent->accumulate_grad(self.grad.data(), self.numel());
        }
      });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<S> out(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return detail::make_op<S>(
      a.shape(), std::move(out), "sub", {a, b},
      [](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        auto& gb = *self.parents[1];
        if (ga.tracked) ga.accumulate_grad(self.grad.data(), self.numel());
        if (gb.tracked) {
          auto& dst = gb.ensure_grad();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= self.grad[i];
        }
      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (b.numel() == 1 && a.numel() != 1) {
    const S bv = b.value()[0];
    std::vector<S> out(a.value());
    for (auto& v : out) v *= bv;
    return detail::make_op<S>(
        a.shape(), std::move(out), "mul", {a, b},
        [](TensorNode<S>& self) {
          auto& ga = *self.parents[0];
          auto& gb = *self.parents[1];
          const S bval = gb.value[0];
          if (ga.tracked) {
            auto& dst = ga.ensure_grad();
            for (std::size_t i = 0; i < dst.size(); ++i)
              dst[i] += self.grad[i] * bval;
          }
          if (gb.tracked) {
            S total = S(0);
            for (std::size_t i = 0; i < self.grad.size(); ++i)
              total += self.grad[i] * ga.value[i];
            gb.accumulate_grad(&total, 1);
          }
        });
  }
  if (a.numel() == 1 && b.numel() != 1) return mul(b, a);
  detail::require_same_shape(a, b, "mul");
  std::vector<S> out(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return detail::make_op<S>(
      a.shape(), std::move(out), "mul", {a, b},
      [](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        auto& gb = *self.parents[1];
        if (ga.tracked) {
          auto& dst = ga.ensure_grad();
          for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += self.grad[i] * gb.value[i];
        }
        if (gb.tracked) {
          auto& dst = gb.ensure_grad();
          for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += self.grad[i] * ga.value[i];
        }
      });
}

// t * c for a plain scalar constant.
template <typename S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  std::vector<S> out(a.value());
  for (auto& v : out) v *= c;
  return detail::make_op<S>(
      a.shape(), std::move(out), "scale", {a},
      [c](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        for (std::size_t i = 0; i < dst.size(); ++i)
          dst[i] += self.grad[i] * c;
      });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  std::vector<S> out(a.value());
  for (auto& v : out) v = v > S(0) ? v : S(0);
  return detail::make_op<S>(
      a.shape(), std::move(out), "relu", {a},
      [](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        for (std::size_t i = 0; i < dst.size(); ++i) {
          if (ga.value[i] > S(0)) dst[i] += self.grad[i];
        }
      });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  std::vector<S> out(a.value());
  for (auto& v : out) {
    // Split on sign to avoid overflow in exp.
    v = v >= S(0) ? S(1) / (S(1) + std::exp(-v))
                  : std::exp(v) / (S(1) + std::exp(v));
  }
  return detail::make_op<S>(
      a.shape(), std::move(out), "sigmoid", {a},
      [](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        for (std::size_t i = 0; i < dst.size(); ++i) {
          const S s = self.value[i];
          dst[i] += self.grad[i] * s * (S(1) - s);
        }
      });
}

template <typename S>
Tensor<S> sum_all(const Tensor<S>& a) {
  S total = S(0);
  for (auto v : a.value()) total += v;
  return detail::make_op<S>(
      Shape{1}, std::vector<S>{total}, "sum", {a},
      [](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        const S g = self.grad[0];
        for (auto& v : dst) v += g;
      });
}

template <typename S>
Tensor<S> mean_all(const Tensor<S>& a) {
  S total = S(0);
  for (auto v : a.value()) total += v;
  const S inv = S(1) / static_cast<S>(a.numel());
  return detail::make_op<S>(
      Shape{1}, std::vector<S>{total * inv}, "mean", {a},
      [inv](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        const S g = self.grad[0] * inv;
        for (auto& v : dst) v += g;
      });
}

// Same values under a new shape (numel preserved).
template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
  check_shape(shape);
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape " + shape_str(a.shape()) + " -> " +
                     shape_str(shape) + " changes element count");
  }
  return detail::make_op<S>(
      std::move(shape), std::vector<S>(a.value()), "reshape", {a},
      [](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (ga.tracked) ga.accumulate_grad(self.grad.data(), self.numel());
      });
}

// ---------------------------------------------------------------------------
// softmax / cross-entropy

// Row softmax with max-subtraction. logits: [N,K], K >= 2.
template <typename S>
Tensor<S> softmax(const Tensor<S>& logits) {
  if (logits.rank() != 2 || logits.dim(1) < 2) {
    throw ShapeError("softmax expects [N,K] with K >= 2, got " +
                     shape_str(logits.shape()));
  }
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  std::vector<S> out(logits.value().size());
  const auto& x = logits.value();
  for (std::int64_t r = 0; r < n; ++r) {
    const S* row = x.data() + r * k;
    S* orow = out.data() + r * k;
    S mx = row[0];
    for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    S denom = S(0);
    for (std::int64_t j = 0; j < k; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    const S inv = S(1) / denom;
    for (std::int64_t j = 0; j < k; ++j) orow[j] *= inv;
  }
  return detail::make_op<S>(
      logits.shape(), std::move(out), "softmax", {logits},
      [n, k](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        for (std::int64_t r = 0; r < n; ++r) {
          const S* y = self.value.data() + r * k;
          const S* dy = self.grad.data() + r * k;
          S dot = S(0);
          for (std::int64_t j = 0; j < k; ++j) dot += dy[j] * y[j];
          S* g = dst.data() + r * k;
          for (std::int64_t j = 0; j < k; ++j) g[j] += (dy[j] - dot) * y[j];
        }
      });
}

// Mean over the batch of -log softmax(logits)[label]; fused log-sum-exp.
template <typename S>
Tensor<S> cross_entropy(const Tensor<S>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) {
    throw ShapeError("cross_entropy expects [N,K] logits, got " +
                     shape_str(logits.shape()));
  }
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " rows");
  }
  for (std::int64_t r = 0; r < n; ++r) {
    if (labels[static_cast<std::size_t>(r)] < 0 ||
        labels[static_cast<std::size_t>(r)] >= k) {
      throw LabelError("label " + std::to_string(labels[static_cast<std::size_t>(r)]) +
                       " at row " + std::to_string(r) + " outside [0," +
                       std::to_string(k) + ")");
    }
  }
  const auto& x = logits.value();
  // Save per-row softmax for the backward rule.
  auto probs = std::make_shared<std::vector<S>>(x.size());
  S loss = S(0);
  for (std::int64_t r = 0; r < n; ++r) {
    const S* row = x.data() + r * k;
    S* prow = probs->data() + r * k;
    S mx = row[0];
    for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    S denom = S(0);
    for (std::int64_t j = 0; j < k; ++j) {
      prow[j] = std::exp(row[j] - mx);
      denom += prow[j];
    }
    const S inv = S(1) / denom;
    for (std::int64_t j = 0; j < k; ++j) prow[j] *= inv;
    const S log_denom = std::log(denom);
    const std::int64_t lbl = labels[static_cast<std::size_t>(r)];
    loss += log_denom - (row[lbl] - mx);
  }
  loss /= static_cast<S>(n);
  std::vector<int> labels_copy(labels);
  return detail::make_op<S>(
      Shape{1}, std::vector<S>{loss}, "cross_entropy", {logits},
      [n, k, probs, labels_copy](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dst = ga.ensure_grad();
        const S g = self.grad[0] / static_cast<S>(n);
        for (std::int64_t r = 0; r < n; ++r) {
          const S* prow = probs->data() + r * k;
          S* grow = dst.data() + r * k;
          const std::int64_t lbl = labels_copy[static_cast<std::size_t>(r)];
          for (std::int64_t j = 0; j < k; ++j) {
            grow[j] += g * (prow[j] - (j == lbl ? S(1) : S(0)));
          }
        }
      });
}

// ---------------------------------------------------------------------------
// backward

template <typename S>
void Tensor<S>::backward() const {
  if (numel() != 1) {
    throw ContractError("backward() requires a scalar root, got shape " +
                        shape_str(shape()));
  }
  if (!node_->tracked) return;  // nothing reachable requires gradients

  // Iterative post-order DFS; each tracked node appears once.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* parent = node->parents[next_child].get();
      ++next_child;
      if (parent->tracked && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
    // Interior grads are fully consumed once this node is processed.
    if (!node->parents.empty() && !node->requires_grad) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

}  // namespace egt

#include "egt/gemm.hpp"

namespace egt {

// [N,D] x [D,K] -> [N,K]
template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const std::int64_t n = a.dim(0), d = a.dim(1), k = b.dim(1);
  std::vector<S> out(static_cast<std::size_t>(n * k));
  gemm_nn<S>(n, k, d, a.value().data(), b.value().data(), out.data());
  return detail::make_op<S>(
      Shape{n, k}, std::move(out), "matmul", {a, b},
      [n, d, k](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        auto& gb = *self.parents[1];
        if (ga.tracked) {
          // dA = dC * B^T
          std::vector<S> bt(static_cast<std::size_t>(d * k));
          transpose<S>(d, k, gb.value.data(), bt.data());
          std::vector<S> da(static_cast<std::size_t>(n * d));
          gemm_nn<S>(n, d, k, self.grad.data(), bt.data(), da.data());
          ga.accumulate_grad(da.data(), n * d);
        }
        if (gb.tracked) {
          // dB = A^T * dC
          std::vector<S> at(static_cast<std::size_t>(n * d));
          transpose<S>(n, d, ga.value.data(), at.data());
          std::vector<S> db(static_cast<std::size_t>(d * k));
          gemm_nn<S>(d, k, n, at.data(), self.grad.data(), db.data());
          gb.accumulate_grad(db.data(), d * k);
        }
      });
}

}  // namespace egt

#endif  // EGT_TENSOR_HPP_
