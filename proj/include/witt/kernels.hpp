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

#include <cstdint>

namespace witt {

// Data-parallel compute kernels. Parallelism is always across independent
// output elements with a fixed per-element accumulation order, so results are
// bit-identical regardless of thread count. Serial reference versions live in
// witt::refk and the unit tests assert bit-equality between the two.
namespace kern {

// C(m,n) = A(m,k) * B(k,n)        [+ C if accum]
void matmul_nn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum = false);
// C(m,n) = A(m,k) * B(n,k)^T      [+ C if accum]
void matmul_nt(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum = false);
// C(m,n) = A(k,m)^T * B(k,n)      [+ C if accum]
void matmul_tn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum = false);

// Row-wise layer normalization over the last axis with affine parameters.
// mean/rstd (one per row) are saved for the backward pass.
void layernorm_fwd(const double* x, const double* gamma, const double* beta,
                   double* y, double* mean, double* rstd,
                   int64_t rows, int64_t c, double eps);
// dgamma/dbeta are accumulated serially (deterministic order); dx in parallel.
void layernorm_bwd(const double* x, const double* gamma, const double* mean,
                   const double* rstd, const double* dy,
                   double* dx, double* dgamma, double* dbeta,
                   int64_t rows, int64_t c);

// Row-wise softmax over the last axis. Max-subtracted; -inf inputs map to
// exactly 0 probability.
void softmax_fwd(const double* x, double* y, int64_t rows, int64_t n);
// dx = y * (dy - sum(dy * y)) per row.
void softmax_bwd(const double* y, const double* dy, double* dx,
                 int64_t rows, int64_t n);

// Valid 1-D correlation with taps `w` along axis `axis` (1 = height, 2 =
// width) of a (B,H,W,C) tensor. Output length along the axis shrinks by
// taps-1. bwd scatters grad back to the input (full correlation).
void conv_axis_fwd(const double* x, const double* w, double* y,
                   int64_t b, int64_t h, int64_t wdt, int64_t c,
                   int64_t taps, int axis);
void conv_axis_bwd(const double* dy, const double* w, double* dx,
                   int64_t b, int64_t h, int64_t wdt, int64_t c,
                   int64_t taps, int axis);

}  // namespace kern

// Serial reference implementations, kept for correctness tests and the
// kernel benchmark. Plain loops, no pragmas.
namespace refk {

void matmul_nn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum = false);
void matmul_nt(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum = false);
void matmul_tn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum = false);
void layernorm_fwd(const double* x, const double* gamma, const double* beta,
                   double* y, double* mean, double* rstd,
                   int64_t rows, int64_t c, double eps);
void softmax_fwd(const double* x, double* y, int64_t rows, int64_t n);

}  // namespace refk

}  // namespace witt
