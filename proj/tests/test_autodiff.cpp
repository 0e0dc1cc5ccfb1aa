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

#include <doctest.h>

#include <cmath>
#include <limits>

#include "fd_check.hpp"
#include "witt/nn.hpp"

using namespace witt;
using witt::testing::fd_check;

namespace {

Tensor randt(Shape s, RngStream& rng, double scl = 1.0) {
    Tensor t(std::move(s));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = scl * rng.gaussian();
    return t;
}

// fixed random projection makes scalar losses sensitive to every coordinate
Var read_out(const Var& x, uint64_t seed = 99) {
    RngStream rng(seed, "readout");
    Tensor w(x.value().shape());
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.gaussian();
    return mean_all(mul(x, Var::constant(w)));
}

}  // namespace

TEST_CASE("broadcast add values and shapes") {
    Var a = Var::constant(Tensor(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}));
    Var b = Var::constant(Tensor(Shape{3}, std::vector<double>{10, 20, 30}));
    Var c = add(a, b);
    CHECK(c.shape() == Shape{2, 3});
    CHECK(c.value().vec() == std::vector<double>{11, 22, 33, 14, 25, 36});

    Var col = Var::constant(Tensor(Shape{2, 1}, std::vector<double>{100, 200}));
    Var d = add(a, col);
    CHECK(d.value().vec() == std::vector<double>{101, 102, 103, 204, 205, 206});

    // middle-axis broadcast
    Var e = Var::constant(Tensor(Shape{2, 1, 2}, std::vector<double>{1, 2, 3, 4}));
    Var f = Var::constant(Tensor(Shape{3, 1}, std::vector<double>{10, 20, 30}));
    Var g = add(e, f);
    CHECK(g.shape() == Shape{2, 3, 2});
    CHECK(g.value().vec() ==
          std::vector<double>{11, 12, 21, 22, 31, 32, 13, 14, 23, 24, 33, 34});
}

TEST_CASE("broadcast mismatch throws") {
    Var a = Var::constant(Tensor(Shape{2, 3}));
    Var b = Var::constant(Tensor(Shape{4}));
    CHECK_THROWS_AS(add(a, b), ShapeError);
}

TEST_CASE("gradient accumulates through shared subexpressions") {
    Var x = Var::param(Tensor(Shape{1}, std::vector<double>{3.0}));
    Var y = add(mul(x, x), x);  // x^2 + x, dy/dx = 2x + 1 = 7
    backward(y);
    CHECK(x.grad_view()[0] == doctest::Approx(7.0));
}

TEST_CASE("NoGradGuard suppresses graph construction") {
    Var x = Var::param(Tensor(Shape{2}, std::vector<double>{1, 2}));
    NoGradGuard ng;
    Var y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("finite differences: elementwise chain") {
    RngStream rng(11, "t");
    ParamStore ps;
    Var x = ps.add("x", randt({3, 4}, rng));
    auto loss = [&] {
        Var t = sigmoid(x);
        t = add(mul(t, t), relu(x));
        t = gelu(t);
        t = add_scalar(scale(t, 0.7), 0.1);
        t = sqrt_op(add_scalar(square(t), 1.0));
        return read_out(t);
    };
    auto rep = fd_check(loss, ps.items());
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: div and pow") {
    RngStream rng(12, "t");
    ParamStore ps;
    Var a = ps.add("a", randt({4}, rng));
    Var b = ps.add("b", randt({4}, rng));
    // keep denominators and pow bases away from 0
    for (int i = 0; i < 4; ++i) {
        b.value_mut()[i] = 1.5 + std::abs(b.value()[i]);
        a.value_mut()[i] = 0.5 + std::abs(a.value()[i]);
    }
    auto loss = [&] { return read_out(pow_const(div(a, b), 0.7)); };
    auto rep = fd_check(loss, ps.items());
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: matmul both orientations and shared rhs") {
    RngStream rng(13, "t");
    ParamStore ps;
    Var a = ps.add("a", randt({2, 3, 4}, rng));  // batched
    Var w = ps.add("w", randt({4, 5}, rng));     // shared 2-D
    Var bt = ps.add("bt", randt({2, 6, 5}, rng));
    auto loss = [&] {
        Var y = matmul(a, w);          // (2,3,5)
        Var z = matmul(y, bt, true);   // x (2,6,5)^T per batch -> (2,3,6)
        return read_out(z);
    };
    auto rep = fd_check(loss, ps.items());
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: reductions and shape ops") {
    RngStream rng(14, "t");
    ParamStore ps;
    Var x = ps.add("x", randt({2, 3, 4}, rng));
    auto loss = [&] {
        Var t = permute(x, {1, 0, 2});        // (3,2,4)
        t = reshape(t, {3, 8});
        Var s1 = sum_last(t);                 // (3,1)
        Var s2 = mean_last(square(t));        // (3,1)
        Var sl = slice_last(t, 2, 5);         // (3,5)
        return add(add(sum_all(s1), mean_all(s2)), read_out(sl));
    };
    auto rep = fd_check(loss, ps.items());
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: layernorm and softmax") {
    RngStream rng(15, "t");
    ParamStore ps;
    Var x = ps.add("x", randt({5, 6}, rng));
    Var g = ps.add("g", randt({6}, rng, 0.3));
    Var b = ps.add("b", randt({6}, rng, 0.3));
    for (int i = 0; i < 6; ++i) g.value_mut()[i] += 1.0;
    auto loss = [&] { return read_out(softmax_last(layernorm(x, g, b))); };
    auto rep = fd_check(loss, ps.items());
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("finite differences: index_map, gather_rows, conv, pool") {
    RngStream rng(16, "t");
    ParamStore ps;
    Var x = ps.add("x", randt({1, 4, 4, 2}, rng));
    Var table = ps.add("tab", randt({5, 3}, rng));
    auto idx = std::make_shared<std::vector<int64_t>>(std::vector<int64_t>{0, 4, 2, 4, 1});
    Tensor taps(Shape{3}, std::vector<double>{0.25, 0.5, 0.25});
    auto loss = [&] {
        Var t = conv_axis(conv_axis(x, taps, 1), taps, 2);  // (1,2,2,2)
        Var p = avgpool2x2(x);                              // (1,2,2,2)
        Var gr = gather_rows(table, idx);                   // (5,3)
        return add(add(read_out(t, 1), read_out(p, 2)), read_out(gr, 3));
    };
    auto rep = fd_check(loss, ps.items());
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("softmax with -inf mask keeps exact zeros and clean gradients") {
    Tensor t(Shape{1, 4}, std::vector<double>{1.0, 2.0,
                                              -std::numeric_limits<double>::infinity(),
                                              0.5});
    ParamStore ps;
    Var x = ps.add("x", t);
    Var y = softmax_last(x);
    CHECK(y.value()[2] == 0.0);
    Var l = read_out(y);
    backward(l);
    for (int i = 0; i < 4; ++i) CHECK(std::isfinite(x.grad_view()[i]));
}

TEST_CASE("backward requires scalar root") {
    Var x = Var::param(Tensor(Shape{2}, std::vector<double>{1, 2}));
    Var y = mul(x, x);
    CHECK_THROWS_AS(backward(y), ShapeError);
}
