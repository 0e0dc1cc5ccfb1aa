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
#include <vector>

#include "witt/kernels.hpp"
#include "witt/rng.hpp"

using namespace witt;

namespace {
std::vector<double> randv(int64_t n, RngStream& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.gaussian();
    return v;
}
}  // namespace

TEST_CASE("matmul_nn small hand-computed") {
    // [1 2 3; 4 5 6] * [1 0; 0 1; 1 1] = [4 5; 10 11]
    const std::vector<double> a{1, 2, 3, 4, 5, 6};
    const std::vector<double> b{1, 0, 0, 1, 1, 1};
    std::vector<double> c(4);
    kern::matmul_nn(a.data(), b.data(), c.data(), 2, 3, 2);
    CHECK(c == std::vector<double>{4, 5, 10, 11});
}

TEST_CASE("matmul variants agree with explicit transpose") {
    RngStream rng(1, "mm");
    const int64_t m = 7, k = 5, n = 9;
    const auto A = randv(m * k, rng);
    const auto B = randv(k * n, rng);
    std::vector<double> Bt(n * k), At(k * m);
    for (int64_t i = 0; i < k; ++i)
        for (int64_t j = 0; j < n; ++j) Bt[j * k + i] = B[i * n + j];
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < k; ++j) At[j * m + i] = A[i * k + j];

    std::vector<double> c0(m * n), c1(m * n), c2(m * n);
    kern::matmul_nn(A.data(), B.data(), c0.data(), m, k, n);
    kern::matmul_nt(A.data(), Bt.data(), c1.data(), m, k, n);
    kern::matmul_tn(At.data(), B.data(), c2.data(), m, k, n);
    for (int64_t i = 0; i < m * n; ++i) {
        CHECK(c1[i] == doctest::Approx(c0[i]).epsilon(1e-12));
        CHECK(c2[i] == doctest::Approx(c0[i]).epsilon(1e-12));
    }
}

TEST_CASE("matmul accumulate flag adds into output") {
    RngStream rng(2, "mm");
    const auto A = randv(6, rng), B = randv(6, rng);
    std::vector<double> c(4, 10.0), c2(4, 0.0);
    kern::matmul_nn(A.data(), B.data(), c2.data(), 2, 3, 2);
    kern::matmul_nn(A.data(), B.data(), c.data(), 2, 3, 2, /*accum=*/true);
    for (int i = 0; i < 4; ++i) CHECK(c[i] == doctest::Approx(10.0 + c2[i]));
}

TEST_CASE("parallel kernels match serial reference bit-exactly") {
    RngStream rng(3, "ref");
    const int64_t m = 33, k = 17, n = 29;
    const auto A = randv(m * k, rng), B = randv(k * n, rng), Bt = randv(n * k, rng),
               At = randv(k * m, rng);
    std::vector<double> cp(m * n), cs(m * n);

    kern::matmul_nn(A.data(), B.data(), cp.data(), m, k, n);
    refk::matmul_nn(A.data(), B.data(), cs.data(), m, k, n);
    CHECK(cp == cs);

    kern::matmul_nt(A.data(), Bt.data(), cp.data(), m, k, n);
    refk::matmul_nt(A.data(), Bt.data(), cs.data(), m, k, n);
    CHECK(cp == cs);

    kern::matmul_tn(At.data(), B.data(), cp.data(), m, k, n);
    refk::matmul_tn(At.data(), B.data(), cs.data(), m, k, n);
    CHECK(cp == cs);

    const int64_t rows = 41, c = 13;
    const auto x = randv(rows * c, rng), g = randv(c, rng), be = randv(c, rng);
    std::vector<double> y1(rows * c), y2(rows * c), mu(rows), rs(rows);
    kern::layernorm_fwd(x.data(), g.data(), be.data(), y1.data(), mu.data(), rs.data(),
                        rows, c, 1e-5);
    refk::layernorm_fwd(x.data(), g.data(), be.data(), y2.data(), mu.data(), rs.data(),
                        rows, c, 1e-5);
    CHECK(y1 == y2);

    kern::softmax_fwd(x.data(), y1.data(), rows, c);
    refk::softmax_fwd(x.data(), y2.data(), rows, c);
    CHECK(y1 == y2);
}

TEST_CASE("softmax rows sum to 1 and -inf maps to exact zero") {
    RngStream rng(4, "sm");
    const int64_t rows = 10, n = 8;
    auto x = randv(rows * n, rng);
    const double ninf = -std::numeric_limits<double>::infinity();
    x[3] = ninf;
    x[n + 5] = ninf;
    std::vector<double> y(rows * n);
    kern::softmax_fwd(x.data(), y.data(), rows, n);
    for (int64_t r = 0; r < rows; ++r) {
        double s = 0;
        for (int64_t j = 0; j < n; ++j) s += y[r * n + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(y[3] == 0.0);
    CHECK(y[n + 5] == 0.0);
}

TEST_CASE("layernorm normalizes rows") {
    RngStream rng(5, "ln");
    const int64_t rows = 6, c = 16;
    const auto x = randv(rows * c, rng);
    std::vector<double> gamma(c, 1.0), beta(c, 0.0), y(rows * c), mu(rows), rs(rows);
    kern::layernorm_fwd(x.data(), gamma.data(), beta.data(), y.data(), mu.data(),
                        rs.data(), rows, c, 1e-12);
    for (int64_t r = 0; r < rows; ++r) {
        double m = 0, v = 0;
        for (int64_t j = 0; j < c; ++j) m += y[r * c + j];
        m /= c;
        for (int64_t j = 0; j < c; ++j) v += (y[r * c + j] - m) * (y[r * c + j] - m);
        v /= c;
        CHECK(m == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("conv_axis_fwd matches direct correlation") {
    RngStream rng(6, "cv");
    const int64_t b = 2, h = 5, w = 6, c = 3, taps = 3;
    const auto x = randv(b * h * w * c, rng);
    const auto k = randv(taps, rng);

    std::vector<double> y(b * (h - 2) * w * c);
    kern::conv_axis_fwd(x.data(), k.data(), y.data(), b, h, w, c, taps, 1);
    for (int64_t ib = 0; ib < b; ++ib)
        for (int64_t oy = 0; oy < h - 2; ++oy)
            for (int64_t ox = 0; ox < w; ++ox)
                for (int64_t ch = 0; ch < c; ++ch) {
                    double acc = 0;
                    for (int64_t t = 0; t < taps; ++t)
                        acc += k[t] * x[((ib * h + oy + t) * w + ox) * c + ch];
                    CHECK(y[((ib * (h - 2) + oy) * w + ox) * c + ch] ==
                          doctest::Approx(acc).epsilon(1e-12));
                }
}
