/*
 * Copyright (c) 2026, witt contributors.
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

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "witt/tensor.hpp"

namespace witt {

// Reverse-mode autodiff over Tensor. Ops build a dynamic graph; backward()
// walks it in reverse creation order. Gradients accumulate (+=), so shared
// subexpressions and parameter reuse come out right.

namespace ad {

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_allocated = false;
    int64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (!grad_allocated) {
            grad = Tensor::zeros(value.shape());
            grad_allocated = true;
        }
        return grad;
    }
};

using NodePtr = std::shared_ptr<Node>;

bool grad_enabled();

/// Extension point for ops defined outside the core (e.g. the channel
/// transfer function). Respects grad mode and parent requires_grad flags.
NodePtr make_custom_op(Tensor value, std::vector<NodePtr> parents,
                       std::function<void(Node&)> fn);

}  // namespace ad

/// Disables graph construction in scope (evaluation / metric computation).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

class Var {
public:
    Var() = default;
    explicit Var(ad::NodePtr n) : n_(std::move(n)) {}

    /// Trainable leaf.
    static Var param(Tensor v);
    /// Non-trainable leaf.
    static Var constant(Tensor v);
    static Var scalar(double v) { return constant(Tensor::scalar(v)); }

    bool defined() const { return static_cast<bool>(n_); }
    const Tensor& value() const { return n_->value; }
    Tensor& value_mut() { return n_->value; }
    const Shape& shape() const { return n_->value.shape(); }
    bool requires_grad() const { return n_ && n_->requires_grad; }

    Tensor& grad() { return n_->ensure_grad(); }
    const Tensor& grad_view() const { return n_->grad; }
    bool has_grad() const { return n_ && n_->grad_allocated; }
    void zero_grad() {
        if (n_ && n_->grad_allocated) n_->grad.fill(0.0);
    }

    ad::NodePtr node() const { return n_; }

private:
    ad::NodePtr n_;
};

/// Runs reverse-mode accumulation from a scalar root (numel must be 1).
void backward(const Var& root);

double scalar_value(const Var& v);

// ---- elementwise / broadcast ops (numpy-style right-aligned broadcasting) --
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var gelu(const Var& a);
Var square(const Var& a);
Var sqrt_op(const Var& a);
Var pow_const(const Var& a, double p);  // defined for a >= 0

// ---- reductions ----
Var sum_last(const Var& a);   // (..., n) -> (..., 1)
Var mean_last(const Var& a);  // (..., n) -> (..., 1)
Var sum_all(const Var& a);    // -> (1)
Var mean_all(const Var& a);   // -> (1)

// ---- shape ops ----
Var reshape(const Var& a, Shape s);
Var permute(const Var& a, const std::vector<int>& axes);
Var slice_last(const Var& a, int64_t offset, int64_t size);

/// out.flat[i] = a.flat[(*idx)[i]]; backward scatter-adds. The index vector
/// is shared so window/merge layouts can be built once per shape.
Var index_map(const Var& a, Shape out_shape,
              std::shared_ptr<const std::vector<int64_t>> idx);

/// Row gather from a (R, h) table: out (L, h) with out[i] = table[idx[i]].
Var gather_rows(const Var& table, std::shared_ptr<const std::vector<int64_t>> idx);

// ---- linear algebra ----
/// Matrix product over the last two axes. Leading axes must match, or `b`
/// may be 2-D (shared weight). trans_b multiplies by b^T.
Var matmul(const Var& a, const Var& b, bool trans_b = false);

// ---- normalization / attention ----
Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var softmax_last(const Var& x);

// ---- image ops ----
/// Valid 1-D correlation with constant taps along axis 1 (H) or 2 (W) of a
/// (B,H,W,C) tensor.
Var conv_axis(const Var& x, const Tensor& taps, int axis);
/// 2x2 average pool on (B,H,W,C); odd trailing row/col dropped.
Var avgpool2x2(const Var& x);

}  // namespace witt
