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

#include "witt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace witt {
namespace kern {

// Work threshold below which the OpenMP region is skipped; tiny attention
// matmuls would otherwise pay more in fork/join than they compute.
static constexpr int64_t kOmpMinWork = 1 << 15;

void matmul_nn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum) {
    const int64_t work = m * k * n;
#pragma omp parallel for schedule(static) if (work > kOmpMinWork)
    for (int64_t i = 0; i < m; ++i) {
        double* ci = C + i * n;
        if (!accum) std::memset(ci, 0, sizeof(double) * n);
        const double* ai = A + i * k;
        // i-l-j order: the j loop runs over contiguous memory and vectorizes.
        for (int64_t l = 0; l < k; ++l) {
            const double a = ai[l];
            const double* bl = B + l * n;
            for (int64_t j = 0; j < n; ++j) ci[j] += a * bl[j];
        }
    }
}

void matmul_nt(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum) {
    const int64_t work = m * k * n;
#pragma omp parallel for schedule(static) if (work > kOmpMinWork)
    for (int64_t i = 0; i < m; ++i) {
        const double* ai = A + i * k;
        double* ci = C + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const double* bj = B + j * k;
            double acc = 0.0;
            for (int64_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
            ci[j] = accum ? ci[j] + acc : acc;
        }
    }
}

void matmul_tn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum) {
    const int64_t work = m * k * n;
#pragma omp parallel for schedule(static) if (work > kOmpMinWork)
    for (int64_t i = 0; i < m; ++i) {
        double* ci = C + i * n;
        if (!accum) std::memset(ci, 0, sizeof(double) * n);
        for (int64_t l = 0; l < k; ++l) {
            const double a = A[l * m + i];
            const double* bl = B + l * n;
            for (int64_t j = 0; j < n; ++j) ci[j] += a * bl[j];
        }
    }
}

void layernorm_fwd(const double* x, const double* gamma, const double* beta,
                   double* y, double* mean, double* rstd,
                   int64_t rows, int64_t c, double eps) {
#pragma omp parallel for schedule(static) if (rows * c > kOmpMinWork)
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * c;
        double* yr = y + r * c;
        double mu = 0.0;
        for (int64_t j = 0; j < c; ++j) mu += xr[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (int64_t j = 0; j < c; ++j) {
            const double d = xr[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double rs = 1.0 / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        for (int64_t j = 0; j < c; ++j) yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
    }
}

void layernorm_bwd(const double* x, const double* gamma, const double* mean,
                   const double* rstd, const double* dy,
                   double* dx, double* dgamma, double* dbeta,
                   int64_t rows, int64_t c) {
#pragma omp parallel for schedule(static) if (rows * c > kOmpMinWork)
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * c;
        const double* dyr = dy + r * c;
        double* dxr = dx + r * c;
        const double mu = mean[r];
        const double rs = rstd[r];
        double sum_g = 0.0, sum_gx = 0.0;
        for (int64_t j = 0; j < c; ++j) {
            const double xhat = (xr[j] - mu) * rs;
            const double g = dyr[j] * gamma[j];
            sum_g += g;
            sum_gx += g * xhat;
        }
        const double inv_c = 1.0 / static_cast<double>(c);
        for (int64_t j = 0; j < c; ++j) {
            const double xhat = (xr[j] - mu) * rs;
            const double g = dyr[j] * gamma[j];
            dxr[j] += rs * (g - inv_c * (sum_g + xhat * sum_gx));
        }
    }
    // Parameter grads accumulate in a fixed serial order.
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * c;
        const double* dyr = dy + r * c;
        const double mu = mean[r];
        const double rs = rstd[r];
        for (int64_t j = 0; j < c; ++j) {
            dgamma[j] += dyr[j] * (xr[j] - mu) * rs;
            dbeta[j] += dyr[j];
        }
    }
}

void softmax_fwd(const double* x, double* y, int64_t rows, int64_t n) {
#pragma omp parallel for schedule(static) if (rows * n > kOmpMinWork)
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * n;
        double* yr = y + r * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t j = 0; j < n; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            // exp(-inf - mx) is exactly 0, masked entries never leak mass
            yr[j] = std::exp(xr[j] - mx);
            z += yr[j];
        }
        const double inv = 1.0 / z;
        for (int64_t j = 0; j < n; ++j) yr[j] *= inv;
    }
}

void softmax_bwd(const double* y, const double* dy, double* dx,
                 int64_t rows, int64_t n) {
#pragma omp parallel for schedule(static) if (rows * n > kOmpMinWork)
    for (int64_t r = 0; r < rows; ++r) {
        const double* yr = y + r * n;
        const double* dyr = dy + r * n;
        double* dxr = dx + r * n;
        double dot = 0.0;
        for (int64_t j = 0; j < n; ++j) dot += yr[j] * dyr[j];
        for (int64_t j = 0; j < n; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
    }
}

void conv_axis_fwd(const double* x, const double* w, double* y,
                   int64_t b, int64_t h, int64_t wdt, int64_t c,
                   int64_t taps, int axis) {
    const int64_t oh = (axis == 1) ? h - taps + 1 : h;
    const int64_t ow = (axis == 2) ? wdt - taps + 1 : wdt;
    const int64_t rows = b * oh;
#pragma omp parallel for schedule(static) if (rows * ow * c * taps > kOmpMinWork)
    for (int64_t r = 0; r < rows; ++r) {
        const int64_t ib = r / oh;
        const int64_t iy = r % oh;
        for (int64_t ix = 0; ix < ow; ++ix) {
            double* yo = y + ((ib * oh + iy) * ow + ix) * c;
            for (int64_t ch = 0; ch < c; ++ch) yo[ch] = 0.0;
            for (int64_t t = 0; t < taps; ++t) {
                const int64_t sy = (axis == 1) ? iy + t : iy;
                const int64_t sx = (axis == 2) ? ix + t : ix;
                const double* xi = x + ((ib * h + sy) * wdt + sx) * c;
                const double wt = w[t];
                for (int64_t ch = 0; ch < c; ++ch) yo[ch] += wt * xi[ch];
            }
        }
    }
}

void conv_axis_bwd(const double* dy, const double* w, double* dx,
                   int64_t b, int64_t h, int64_t wdt, int64_t c,
                   int64_t taps, int axis) {
    const int64_t oh = (axis == 1) ? h - taps + 1 : h;
    const int64_t ow = (axis == 2) ? wdt - taps + 1 : wdt;
    // Parallel over *input* rows; each input element gathers from the output
    // positions whose window covers it (deterministic, no write races).
    const int64_t rows = b * h;
#pragma omp parallel for schedule(static) if (rows * wdt * c * taps > kOmpMinWork)
    for (int64_t r = 0; r < rows; ++r) {
        const int64_t ib = r / h;
        const int64_t sy = r % h;
        for (int64_t sx = 0; sx < wdt; ++sx) {
            double* dxi = dx + ((ib * h + sy) * wdt + sx) * c;
            for (int64_t t = 0; t < taps; ++t) {
                const int64_t iy = (axis == 1) ? sy - t : sy;
                const int64_t ix = (axis == 2) ? sx - t : sx;
                if (iy < 0 || iy >= oh || ix < 0 || ix >= ow) continue;
                const double* dyo = dy + ((ib * oh + iy) * ow + ix) * c;
                const double wt = w[t];
                for (int64_t ch = 0; ch < c; ++ch) dxi[ch] += wt * dyo[ch];
            }
        }
    }
}

}  // namespace kern

namespace refk {

void matmul_nn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum) {
    for (int64_t i = 0; i < m; ++i) {
        double* ci = C + i * n;
        if (!accum)
            for (int64_t j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = A + i * k;
        for (int64_t l = 0; l < k; ++l) {
            const double a = ai[l];
            const double* bl = B + l * n;
            for (int64_t j = 0; j < n; ++j) ci[j] += a * bl[j];
        }
    }
}

void matmul_nt(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum) {
    for (int64_t i = 0; i < m; ++i) {
        const double* ai = A + i * k;
        double* ci = C + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const double* bj = B + j * k;
            double acc = 0.0;
            for (int64_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
            ci[j] = accum ? ci[j] + acc : acc;
        }
    }
}

void matmul_tn(const double* A, const double* B, double* C,
               int64_t m, int64_t k, int64_t n, bool accum) {
    for (int64_t i = 0; i < m; ++i) {
        double* ci = C + i * n;
        if (!accum)
            for (int64_t j = 0; j < n; ++j) ci[j] = 0.0;
        for (int64_t l = 0; l < k; ++l) {
            const double a = A[l * m + i];
            const double* bl = B + l * n;
            for (int64_t j = 0; j < n; ++j) ci[j] += a * bl[j];
        }
    }
}

void layernorm_fwd(const double* x, const double* gamma, const double* beta,
                   double* y, double* mean, double* rstd,
                   int64_t rows, int64_t c, double eps) {
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * c;
        double* yr = y + r * c;
        double mu = 0.0;
        for (int64_t j = 0; j < c; ++j) mu += xr[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (int64_t j = 0; j < c; ++j) {
            const double d = xr[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double rs = 1.0 / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        for (int64_t j = 0; j < c; ++j) yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
    }
}

void softmax_fwd(const double* x, double* y, int64_t rows, int64_t n) {
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * n;
        double* yr = y + r * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t j = 0; j < n; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            z += yr[j];
        }
        const double inv = 1.0 / z;
        for (int64_t j = 0; j < n; ++j) yr[j] *= inv;
    }
}

}  // namespace refk
}  // namespace witt
