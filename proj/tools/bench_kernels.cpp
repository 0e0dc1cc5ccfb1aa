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

// Compares the OpenMP kernels against their serial reference counterparts.
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "witt/kernels.hpp"
#include "witt/rng.hpp"

using namespace witt;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::vector<double> random_vec(int64_t n, RngStream& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.gaussian();
    return v;
}

template <typename F>
double time_best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const double t0 = now_s();
        f();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

void bench_matmul(int64_t m, int64_t k, int64_t n, int repeats, RngStream& rng) {
    const auto A = random_vec(m * k, rng);
    const auto B = random_vec(k * n, rng);
    std::vector<double> C(m * n), Cref(m * n);
    const double ts =
        time_best_of(repeats, [&] { refk::matmul_nn(A.data(), B.data(), Cref.data(), m, k, n); });
    const double tp =
        time_best_of(repeats, [&] { kern::matmul_nn(A.data(), B.data(), C.data(), m, k, n); });
    const double flops = 2.0 * m * k * n;
    double max_diff = 0.0;
    for (int64_t i = 0; i < m * n; ++i) max_diff = std::max(max_diff, std::abs(C[i] - Cref[i]));
    std::printf("matmul %4lldx%4lldx%4lld  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms (%6.2f GF/s)  speedup %.2fx  maxdiff %g\n",
                (long long)m, (long long)k, (long long)n, ts * 1e3, flops / ts / 1e9,
                tp * 1e3, flops / tp / 1e9, ts / tp, max_diff);
}

void bench_layernorm(int64_t rows, int64_t c, int repeats, RngStream& rng) {
    const auto x = random_vec(rows * c, rng);
    const auto gamma = random_vec(c, rng);
    const auto beta = random_vec(c, rng);
    std::vector<double> y(rows * c), yr(rows * c), mean(rows), rstd(rows);
    const double ts = time_best_of(repeats, [&] {
        refk::layernorm_fwd(x.data(), gamma.data(), beta.data(), yr.data(), mean.data(),
                            rstd.data(), rows, c, 1e-5);
    });
    const double tp = time_best_of(repeats, [&] {
        kern::layernorm_fwd(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                            rstd.data(), rows, c, 1e-5);
    });
    std::printf("layernorm %6lld rows x %4lld  serial %8.3f ms  omp %8.3f ms  speedup %.2fx\n",
                (long long)rows, (long long)c, ts * 1e3, tp * 1e3, ts / tp);
}

void bench_softmax(int64_t rows, int64_t n, int repeats, RngStream& rng) {
    const auto x = random_vec(rows * n, rng);
    std::vector<double> y(rows * n), yr(rows * n);
    const double ts =
        time_best_of(repeats, [&] { refk::softmax_fwd(x.data(), yr.data(), rows, n); });
    const double tp =
        time_best_of(repeats, [&] { kern::softmax_fwd(x.data(), y.data(), rows, n); });
    std::printf("softmax   %6lld rows x %4lld  serial %8.3f ms  omp %8.3f ms  speedup %.2fx\n",
                (long long)rows, (long long)n, ts * 1e3, tp * 1e3, ts / tp);
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
    std::printf("threads: %d\n", omp_get_max_threads());
    RngStream rng(42, "bench");
    bench_matmul(256, 128, 128, repeats, rng);
    bench_matmul(256, 256, 256, repeats, rng);
    bench_matmul(1024, 256, 256, repeats, rng);
    bench_matmul(4096, 128, 384, repeats, rng);
    bench_layernorm(4096, 256, repeats, rng);
    bench_layernorm(16384, 128, repeats, rng);
    bench_softmax(8192, 64, repeats, rng);
    bench_softmax(32768, 16, repeats, rng);
    return 0;
}
