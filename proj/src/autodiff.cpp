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

#include "witt/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include "witt/kernels.hpp"

namespace witt {

namespace ad {

namespace {
std::atomic<int64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }
static void set_grad_enabled(bool v) { g_grad_enabled = v; }

static NodePtr make_leaf(Tensor v, bool needs_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = needs_grad;
    n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return n;
}

// Result node; tracks parents only when grad mode is on and some parent
// needs gradients.
static NodePtr make_op(Tensor v, std::vector<NodePtr> parents,
                       std::function<void(Node&)> fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& p : parents)
            if (p->requires_grad) any = true;
        if (any) {
            n->requires_grad = true;
            n->parents = std::move(parents);
            n->backward_fn = std::move(fn);
        }
    }
    return n;
}

NodePtr make_custom_op(Tensor value, std::vector<NodePtr> parents,
                       std::function<void(Node&)> fn) {
    return make_op(std::move(value), std::move(parents), std::move(fn));
}

}  // namespace ad

using ad::Node;
using ad::NodePtr;

NoGradGuard::NoGradGuard() : prev_(ad::grad_enabled()) { ad::set_grad_enabled(false); }

NoGradGuard::~NoGradGuard() { ad::set_grad_enabled(prev_); }

Var Var::param(Tensor v) { return Var(ad::make_leaf(std::move(v), true)); }
Var Var::constant(Tensor v) { return Var(ad::make_leaf(std::move(v), false)); }

double scalar_value(const Var& v) {
    if (v.value().numel() != 1) throw ShapeError("scalar_value: tensor is not scalar");
    return v.value()[0];
}

void backward(const Var& root) {
    if (root.value().numel() != 1)
        throw ShapeError("backward: root must be scalar, got " + shape_str(root.shape()));
    if (!root.requires_grad()) return;

    // Collect the reachable grad-requiring subgraph, then run in reverse
    // creation order (a valid topological order for a dynamically built DAG).
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.node().get()};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (p->requires_grad && !seen.count(p.get())) {
                seen.insert(p.get());
                stack.push_back(p.get());
            }
        }
    }
    std::sort(order.begin(), order.end(),
              [](const Node* a, const Node* b) { return a->id > b->id; });

    root.node()->ensure_grad().fill(1.0);
    for (Node* n : order) {
        if (n->backward_fn && n->grad_allocated) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// broadcasting helpers

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const size_t nd = std::max(a.size(), b.size());
    Shape out(nd);
    for (size_t i = 0; i < nd; ++i) {
        const int64_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
        const int64_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
        if (da != db && da != 1 && db != 1)
            throw ShapeError("broadcast mismatch " + shape_str(a) + " vs " + shape_str(b));
        out[i] = std::max(da, db);
    }
    return out;
}

// Strides of `s` aligned into an out-shape of ndim `nd`; broadcast dims get 0.
std::vector<int64_t> broadcast_strides(const Shape& s, const Shape& out) {
    const size_t nd = out.size();
    std::vector<int64_t> st(nd, 0);
    int64_t acc = 1;
    for (size_t i = 0; i < s.size(); ++i) {
        const size_t ri = s.size() - 1 - i;       // axis in s, right to left
        const size_t ro = nd - 1 - i;             // matching axis in out
        st[ro] = (s[ri] == 1 && out[ro] != 1) ? 0 : acc;
        acc *= s[ri];
    }
    return st;
}

// Walks an output shape while tracking offsets into two broadcast operands.
struct BcIter {
    const Shape& out;
    std::vector<int64_t> sa, sb;
    std::vector<int64_t> ix;
    int64_t oa = 0, ob = 0;

    BcIter(const Shape& out_, const Shape& a, const Shape& b)
        : out(out_), sa(broadcast_strides(a, out_)), sb(broadcast_strides(b, out_)),
          ix(out_.size(), 0) {}

    void advance() {
        for (int d = static_cast<int>(out.size()) - 1; d >= 0; --d) {
            oa += sa[d];
            ob += sb[d];
            if (++ix[d] < out[d]) return;
            ix[d] = 0;
            oa -= sa[d] * out[d];
            ob -= sb[d] * out[d];
        }
    }
};

bool shapes_equal(const Shape& a, const Shape& b) { return a == b; }

// True when b's shape is an exact suffix of a's (bias-style broadcast).
bool suffix_broadcast(const Shape& a, const Shape& b) {
    if (b.size() > a.size()) return false;
    for (size_t i = 0; i < b.size(); ++i)
        if (b[b.size() - 1 - i] != a[a.size() - 1 - i]) return false;
    return true;
}

enum class BinOp { Add, Sub, Mul, Div };

double apply_bin(BinOp op, double x, double y) {
    switch (op) {
        case BinOp::Add: return x + y;
        case BinOp::Sub: return x - y;
        case BinOp::Mul: return x * y;
        case BinOp::Div: return x / y;
    }
    return 0.0;
}

Tensor binary_fwd(BinOp op, const Tensor& a, const Tensor& b, const Shape& out_shape) {
    Tensor out(out_shape);
    const int64_t n = out.numel();
    if (shapes_equal(a.shape(), b.shape())) {
        const double* pa = a.data();
        const double* pb = b.data();
        double* po = out.data();
        for (int64_t i = 0; i < n; ++i) po[i] = apply_bin(op, pa[i], pb[i]);
        return out;
    }
    if (suffix_broadcast(a.shape(), b.shape())) {
        const int64_t bn = b.numel();
        const double* pa = a.data();
        const double* pb = b.data();
        double* po = out.data();
        for (int64_t i = 0; i < n; ++i) po[i] = apply_bin(op, pa[i], pb[i % bn]);
        return out;
    }
    BcIter it(out_shape, a.shape(), b.shape());
    for (int64_t i = 0; i < n; ++i) {
        out[i] = apply_bin(op, a[it.oa], b[it.ob]);
        it.advance();
    }
    return out;
}

// Accumulates grad contributions `f(i, oa, ob)` across the broadcast walk.
template <typename F>
void bc_accumulate(const Shape& out_shape, const Shape& a, const Shape& b, F&& f) {
    BcIter it(out_shape, a, b);
    const int64_t n = shape_numel(out_shape);
    for (int64_t i = 0; i < n; ++i) {
        f(i, it.oa, it.ob);
        it.advance();
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// binary ops

static Var binary_op(BinOp op, const Var& a, const Var& b) {
    const Shape out_shape = broadcast_shape(a.shape(), b.shape());
    Tensor out = binary_fwd(op, a.value(), b.value(), out_shape);
    auto an = a.node();
    auto bn = b.node();
    return Var(ad::make_op(std::move(out), {an, bn}, [op, an, bn](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& av = an->value;
        const Tensor& bv = bn->value;
        const bool need_a = an->requires_grad;
        const bool need_b = bn->requires_grad;
        Tensor* ga = need_a ? &an->ensure_grad() : nullptr;
        Tensor* gb = need_b ? &bn->ensure_grad() : nullptr;
        switch (op) {
            case BinOp::Add:
                bc_accumulate(self.value.shape(), av.shape(), bv.shape(),
                              [&](int64_t i, int64_t oa, int64_t ob) {
                                  if (need_a) (*ga)[oa] += g[i];
                                  if (need_b) (*gb)[ob] += g[i];
                              });
                break;
            case BinOp::Sub:
                bc_accumulate(self.value.shape(), av.shape(), bv.shape(),
                              [&](int64_t i, int64_t oa, int64_t ob) {
                                  if (need_a) (*ga)[oa] += g[i];
                                  if (need_b) (*gb)[ob] -= g[i];
                              });
                break;
            case BinOp::Mul:
                bc_accumulate(self.value.shape(), av.shape(), bv.shape(),
                              [&](int64_t i, int64_t oa, int64_t ob) {
                                  if (need_a) (*ga)[oa] += g[i] * bv[ob];
                                  if (need_b) (*gb)[ob] += g[i] * av[oa];
                              });
                break;
            case BinOp::Div:
                bc_accumulate(self.value.shape(), av.shape(), bv.shape(),
                              [&](int64_t i, int64_t oa, int64_t ob) {
                                  const double inv = 1.0 / bv[ob];
                                  if (need_a) (*ga)[oa] += g[i] * inv;
                                  if (need_b) (*gb)[ob] -= g[i] * av[oa] * inv * inv;
                              });
                break;
        }
    }));
}

Var add(const Var& a, const Var& b) { return binary_op(BinOp::Add, a, b); }
Var sub(const Var& a, const Var& b) { return binary_op(BinOp::Sub, a, b); }
Var mul(const Var& a, const Var& b) { return binary_op(BinOp::Mul, a, b); }
Var div(const Var& a, const Var& b) { return binary_op(BinOp::Div, a, b); }

// ---------------------------------------------------------------------------
// unary ops

template <typename FwdF, typename BwdF>
static Var unary_op(const Var& a, FwdF fwd, BwdF dfdx_from_xy) {
    const Tensor& av = a.value();
    Tensor out(av.shape());
    const int64_t n = av.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
    auto an = a.node();
    return Var(ad::make_op(std::move(out), {an}, [an, dfdx_from_xy](Node& self) {
        Tensor& ga = an->ensure_grad();
        const Tensor& g = self.grad;
        const Tensor& x = an->value;
        const Tensor& y = self.value;
        const int64_t n2 = x.numel();
        for (int64_t i = 0; i < n2; ++i) ga[i] += g[i] * dfdx_from_xy(x[i], y[i]);
    }));
}

Var scale(const Var& a, double s) {
    return unary_op(
        a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
    return unary_op(
        a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var relu(const Var& a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Var gelu(const Var& a) {
    // exact form: x * Phi(x)
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    constexpr double kInvSqrt2Pi = 0.3989422804014326779;
    return unary_op(
        a,
        [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
        [](double x, double) {
            const double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            return phi + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        });
}

Var square(const Var& a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt_op(const Var& a) {
    return unary_op(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Var pow_const(const Var& a, double p) {
    return unary_op(
        a, [p](double x) { return std::pow(x, p); },
        [p](double x, double) {
            // subgradient 0 at x == 0 keeps relu-clamped bases finite
            return x > 0.0 ? p * std::pow(x, p - 1.0) : 0.0;
        });
}

// ---------------------------------------------------------------------------
// reductions

static Var reduce_last(const Var& a, bool mean) {
    const Shape& s = a.shape();
    if (s.empty()) throw ShapeError("reduce_last on scalar");
    const int64_t n = s.back();
    const int64_t rows = a.value().numel() / n;
    Shape out_shape = s;
    out_shape.back() = 1;
    Tensor out(out_shape);
    const double* p = a.value().data();
    const double inv = mean ? 1.0 / static_cast<double>(n) : 1.0;
    for (int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int64_t j = 0; j < n; ++j) acc += p[r * n + j];
        out[r] = acc * inv;
    }
    auto an = a.node();
    return Var(ad::make_op(std::move(out), {an}, [an, n, rows, inv](Node& self) {
        Tensor& ga = an->ensure_grad();
        const Tensor& g = self.grad;
        for (int64_t r = 0; r < rows; ++r) {
            const double gr = g[r] * inv;
            for (int64_t j = 0; j < n; ++j) ga[r * n + j] += gr;
        }
    }));
}

Var sum_last(const Var& a) { return reduce_last(a, false); }
Var mean_last(const Var& a) { return reduce_last(a, true); }

static Var reduce_all(const Var& a, bool mean) {
    const int64_t n = a.value().numel();
    const double inv = mean ? 1.0 / static_cast<double>(n) : 1.0;
    double acc = 0.0;
    const double* p = a.value().data();
    for (int64_t i = 0; i < n; ++i) acc += p[i];
    auto an = a.node();
    return Var(ad::make_op(Tensor::scalar(acc * inv), {an}, [an, n, inv](Node& self) {
        Tensor& ga = an->ensure_grad();
        const double gr = self.grad[0] * inv;
        for (int64_t i = 0; i < n; ++i) ga[i] += gr;
    }));
}

Var sum_all(const Var& a) { return reduce_all(a, false); }
Var mean_all(const Var& a) { return reduce_all(a, true); }

// ---------------------------------------------------------------------------
// shape ops

Var reshape(const Var& a, Shape s) {
    // normalize a single -1 placeholder
    int64_t known = 1;
    int minus = -1;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == -1) {
            minus = static_cast<int>(i);
        } else {
            known *= s[i];
        }
    }
    if (minus >= 0) s[minus] = a.value().numel() / known;
    Tensor out = a.value().reshaped(s);
    auto an = a.node();
    return Var(ad::make_op(std::move(out), {an}, [an](Node& self) {
        Tensor& ga = an->ensure_grad();
        const Tensor& g = self.grad;
        const int64_t n = g.numel();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    }));
}

Var permute(const Var& a, const std::vector<int>& axes) {
    const Shape& s = a.shape();
    const size_t nd = s.size();
    if (axes.size() != nd) throw ShapeError("permute: axes rank mismatch");
    Shape out_shape(nd);
    for (size_t i = 0; i < nd; ++i) out_shape[i] = s[axes[i]];

    // strides of the source
    std::vector<int64_t> src_stride(nd, 1);
    for (int i = static_cast<int>(nd) - 2; i >= 0; --i)
        src_stride[i] = src_stride[i + 1] * s[i + 1];

    const int64_t n = a.value().numel();
    auto idx = std::make_shared<std::vector<int64_t>>(n);
    std::vector<int64_t> ix(nd, 0);
    int64_t off = 0;
    std::vector<int64_t> step(nd);
    for (size_t i = 0; i < nd; ++i) step[i] = src_stride[axes[i]];
    for (int64_t i = 0; i < n; ++i) {
        (*idx)[i] = off;
        for (int d = static_cast<int>(nd) - 1; d >= 0; --d) {
            off += step[d];
            if (++ix[d] < out_shape[d]) break;
            ix[d] = 0;
            off -= step[d] * out_shape[d];
        }
    }
    return index_map(a, out_shape, idx);
}

Var slice_last(const Var& a, int64_t offset, int64_t size) {
    const Shape& s = a.shape();
    const int64_t n = s.back();
    if (offset < 0 || offset + size > n) throw ShapeError("slice_last out of range");
    const int64_t rows = a.value().numel() / n;
    Shape out_shape = s;
    out_shape.back() = size;
    Tensor out(out_shape);
    const double* p = a.value().data();
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < size; ++j) out[r * size + j] = p[r * n + offset + j];
    auto an = a.node();
    return Var(ad::make_op(std::move(out), {an}, [an, offset, size, n, rows](Node& self) {
        Tensor& ga = an->ensure_grad();
        const Tensor& g = self.grad;
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < size; ++j) ga[r * n + offset + j] += g[r * size + j];
    }));
}

Var index_map(const Var& a, Shape out_shape,
              std::shared_ptr<const std::vector<int64_t>> idx) {
    if (static_cast<int64_t>(idx->size()) != shape_numel(out_shape))
        throw ShapeError("index_map: index count != output numel");
    Tensor out(out_shape);
    const double* p = a.value().data();
    const int64_t n = out.numel();
    const auto& ix = *idx;
    for (int64_t i = 0; i < n; ++i) out[i] = p[ix[i]];
    auto an = a.node();
    return Var(ad::make_op(std::move(out), {an}, [an, idx](Node& self) {
        Tensor& ga = an->ensure_grad();
        const Tensor& g = self.grad;
        const auto& ix2 = *idx;
        const int64_t n2 = g.numel();
        for (int64_t i = 0; i < n2; ++i) ga[ix2[i]] += g[i];
    }));
}

Var gather_rows(const Var& table, std::shared_ptr<const std::vector<int64_t>> idx) {
    const Shape& s = table.shape();
    if (s.size() != 2) throw ShapeError("gather_rows: table must be 2-D");
    const int64_t h = s[1];
    const int64_t l = static_cast<int64_t>(idx->size());
    Tensor out(Shape{l, h});
    const double* p = table.value().data();
    for (int64_t i = 0; i < l; ++i)
        for (int64_t j = 0; j < h; ++j) out[i * h + j] = p[(*idx)[i] * h + j];
    auto tn = table.node();
    return Var(ad::make_op(std::move(out), {tn}, [tn, idx, h, l](Node& self) {
        Tensor& gt = tn->ensure_grad();
        const Tensor& g = self.grad;
        for (int64_t i = 0; i < l; ++i)
            for (int64_t j = 0; j < h; ++j) gt[(*idx)[i] * h + j] += g[i * h + j];
    }));
}

// ---------------------------------------------------------------------------
// matmul

Var matmul(const Var& a, const Var& b, bool trans_b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() < 2 || sb.size() < 2) throw ShapeError("matmul: rank must be >= 2");

    const int64_t m = sa[sa.size() - 2];
    const int64_t k = sa[sa.size() - 1];
    const int64_t bk = trans_b ? sb[sb.size() - 1] : sb[sb.size() - 2];
    const int64_t n = trans_b ? sb[sb.size() - 2] : sb[sb.size() - 1];
    if (k != bk)
        throw ShapeError("matmul inner dim mismatch " + shape_str(sa) + " x " + shape_str(sb));

    // batch layout: leading dims of a; b either matches or is a shared 2-D matrix
    Shape lead(sa.begin(), sa.end() - 2);
    const bool b_shared = (sb.size() == 2);
    if (!b_shared) {
        Shape bl(sb.begin(), sb.end() - 2);
        if (bl != lead) throw ShapeError("matmul batch dims mismatch");
    }
    const int64_t g = shape_numel(lead);

    Shape out_shape = lead;
    out_shape.push_back(m);
    out_shape.push_back(n);
    Tensor out(out_shape);

    const double* pa = a.value().data();
    const double* pb = b.value().data();
    double* po = out.data();
    const int64_t a_step = m * k;
    const int64_t b_step = b_shared ? 0 : k * n;  // same element count either orientation
    const int64_t o_step = m * n;
    for (int64_t i = 0; i < g; ++i) {
        if (trans_b)
            kern::matmul_nt(pa + i * a_step, pb + i * b_step, po + i * o_step, m, k, n);
        else
            kern::matmul_nn(pa + i * a_step, pb + i * b_step, po + i * o_step, m, k, n);
    }

    auto an = a.node();
    auto bn = b.node();
    return Var(ad::make_op(
        std::move(out), {an, bn},
        [an, bn, m, k, n, g, trans_b, b_shared, a_step, b_step, o_step](Node& self) {
            const Tensor& gout = self.grad;
            if (an->requires_grad) {
                Tensor& ga = an->ensure_grad();
                for (int64_t i = 0; i < g; ++i) {
                    const double* gO = gout.data() + i * o_step;
                    const double* B = bn->value.data() + i * b_step;
                    double* gA = ga.data() + i * a_step;
                    // dA = dC * B^T   (or dC * B when forward used B^T)
                    if (trans_b)
                        kern::matmul_nn(gO, B, gA, m, n, k, /*accum=*/true);
                    else
                        kern::matmul_nt(gO, B, gA, m, n, k, /*accum=*/true);
                }
            }
            if (bn->requires_grad) {
                Tensor& gb = bn->ensure_grad();
                for (int64_t i = 0; i < g; ++i) {
                    const double* gO = gout.data() + i * o_step;
                    const double* A = an->value.data() + i * a_step;
                    double* gB = gb.data() + (b_shared ? 0 : i * b_step);
                    // shared B accumulates over the whole batch
                    if (trans_b)
                        kern::matmul_tn(gO, A, gB, n, m, k, /*accum=*/true);
                    else
                        kern::matmul_tn(A, gO, gB, k, m, n, /*accum=*/true);
                }
            }
        }));
}

// ---------------------------------------------------------------------------
// layernorm / softmax

Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Shape& s = x.shape();
    const int64_t c = s.back();
    if (gamma.value().numel() != c || beta.value().numel() != c)
        throw ShapeError("layernorm: affine param size mismatch");
    const int64_t rows = x.value().numel() / c;
    Tensor out(s);
    auto mean = std::make_shared<Tensor>(Shape{rows});
    auto rstd = std::make_shared<Tensor>(Shape{rows});
    kern::layernorm_fwd(x.value().data(), gamma.value().data(), beta.value().data(),
                        out.data(), mean->data(), rstd->data(), rows, c, eps);
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    return Var(ad::make_op(std::move(out), {xn, gn, bn},
                           [xn, gn, bn, mean, rstd, rows, c](Node& self) {
        const Tensor& g = self.grad;
        // dgamma/dbeta always needed together in this model; x optional
        Tensor dummy_dx;
        Tensor& dgamma = gn->ensure_grad();
        Tensor& dbeta = bn->ensure_grad();
        Tensor& dx = xn->requires_grad ? xn->ensure_grad()
                                       : (dummy_dx = Tensor::zeros(xn->value.shape()));
        kern::layernorm_bwd(xn->value.data(), gn->value.data(), mean->data(),
                            rstd->data(), g.data(), dx.data(), dgamma.data(),
                            dbeta.data(), rows, c);
    }));
}

Var softmax_last(const Var& x) {
    const Shape& s = x.shape();
    const int64_t n = s.back();
    const int64_t rows = x.value().numel() / n;
    Tensor out(s);
    kern::softmax_fwd(x.value().data(), out.data(), rows, n);
    auto xn = x.node();
    return Var(ad::make_op(std::move(out), {xn}, [xn, rows, n](Node& self) {
        Tensor& gx = xn->ensure_grad();
        kern::softmax_bwd(self.value.data(), self.grad.data(), gx.data(), rows, n);
    }));
}

// ---------------------------------------------------------------------------
// image ops

Var conv_axis(const Var& x, const Tensor& taps, int axis) {
    const Shape& s = x.shape();
    if (s.size() != 4) throw ShapeError("conv_axis expects (B,H,W,C)");
    if (axis != 1 && axis != 2) throw ShapeError("conv_axis: axis must be 1 or 2");
    const int64_t b = s[0], h = s[1], w = s[2], c = s[3];
    const int64_t t = taps.numel();
    Shape out_shape = s;
    out_shape[axis] = s[axis] - t + 1;
    if (out_shape[axis] <= 0) throw ShapeError("conv_axis: kernel longer than axis");
    Tensor out(out_shape);
    auto ktaps = std::make_shared<Tensor>(taps);
    kern::conv_axis_fwd(x.value().data(), ktaps->data(), out.data(), b, h, w, c, t, axis);
    auto xn = x.node();
    return Var(ad::make_op(std::move(out), {xn}, [xn, ktaps, b, h, w, c, t, axis](Node& self) {
        Tensor& gx = xn->ensure_grad();
        kern::conv_axis_bwd(self.grad.data(), ktaps->data(), gx.data(), b, h, w, c, t, axis);
    }));
}

Var avgpool2x2(const Var& x) {
    const Shape& s = x.shape();
    if (s.size() != 4) throw ShapeError("avgpool2x2 expects (B,H,W,C)");
    const int64_t b = s[0], h = s[1], w = s[2], c = s[3];
    const int64_t oh = h / 2, ow = w / 2;
    Tensor out(Shape{b, oh, ow, c});
    const double* p = x.value().data();
    for (int64_t ib = 0; ib < b; ++ib)
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t ix = 0; ix < ow; ++ix)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const auto at = [&](int64_t yy, int64_t xx) {
                        return p[((ib * h + yy) * w + xx) * c + ch];
                    };
                    out[((ib * oh + y) * ow + ix) * c + ch] =
                        0.25 * (at(2 * y, 2 * ix) + at(2 * y, 2 * ix + 1) +
                                at(2 * y + 1, 2 * ix) + at(2 * y + 1, 2 * ix + 1));
                }
    auto xn = x.node();
    return Var(ad::make_op(std::move(out), {xn}, [xn, b, h, w, c, oh, ow](Node& self) {
        Tensor& gx = xn->ensure_grad();
        const Tensor& g = self.grad;
        for (int64_t ib = 0; ib < b; ++ib)
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t ix = 0; ix < ow; ++ix)
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double gv = 0.25 * g[((ib * oh + y) * ow + ix) * c + ch];
                        gx[((ib * h + 2 * y) * w + 2 * ix) * c + ch] += gv;
                        gx[((ib * h + 2 * y) * w + 2 * ix + 1) * c + ch] += gv;
                        gx[((ib * h + 2 * y + 1) * w + 2 * ix) * c + ch] += gv;
                        gx[((ib * h + 2 * y + 1) * w + 2 * ix + 1) * c + ch] += gv;
                    }
    }));
}

}  // namespace witt
