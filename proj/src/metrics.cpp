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

#include "witt/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace witt {

double mse(const Tensor& x, const Tensor& y) {
    check_same_shape(x, y, "mse");
    double acc = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.numel());
}

double psnr_db(const Tensor& x, const Tensor& y) {
    const double m = mse(x, y);
    if (m <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / m));
}

Var loss_mse(const Var& x, const Var& xhat) {
    check_same_shape(x.value(), xhat.value(), "loss_mse");
    return mean_all(square(sub(x, xhat)));
}

double msssim_to_db(double v) {
    if (v < 0.0 || v > 1.0)
        throw std::domain_error("msssim_to_db: value " + std::to_string(v) +
                                " outside [0,1]");
    if (v >= 1.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, -10.0 * std::log10(1.0 - v));
}

// ---------------------------------------------------------------------------
// MS-SSIM

namespace {

constexpr double kWeights5[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

Tensor gaussian_taps(int size, double sigma) {
    Tensor t(Shape{size});
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        t[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += t[i];
    }
    for (int i = 0; i < size; ++i) t[i] /= sum;
    return t;
}

Var blur(const Var& x, const Tensor& taps) {
    return conv_axis(conv_axis(x, taps, 1), taps, 2);
}

/// mean over everything but the batch axis -> (B,1)
Var per_image_mean(const Var& x) {
    const int64_t b = x.shape()[0];
    return mean_last(reshape(x, {b, x.value().numel() / b}));
}

}  // namespace

int ms_ssim_levels(int64_t h, int64_t w) {
    const int64_t m = std::min(h, w);
    int levels = 0;
    // each level needs a map of at least 8 pixels after halving
    for (int l = 1; l <= 5; ++l) {
        if ((m >> (l - 1)) >= 8) levels = l;
    }
    if (levels == 0)
        throw ShapeError("ms_ssim: image too small (min dim " + std::to_string(m) + ")");
    return levels;
}

Var ms_ssim_per_image(const Var& x, const Var& y) {
    check_same_shape(x.value(), y.value(), "ms_ssim");
    const Shape& s = x.shape();
    if (s.size() != 4) throw ShapeError("ms_ssim: expected (B,H,W,3)");
    const int levels = ms_ssim_levels(s[1], s[2]);

    // window must fit the smallest scale
    const int64_t smallest = std::min(s[1], s[2]) >> (levels - 1);
    int win = static_cast<int>(std::min<int64_t>(11, smallest));
    if (win % 2 == 0) --win;
    const Tensor taps = gaussian_taps(win, 1.5);

    double wsum = 0.0;
    for (int l = 0; l < levels; ++l) wsum += kWeights5[l];
    // published weights for the full 5-scale form; renormalized prefix otherwise
    auto weight = [&](int l) { return levels == 5 ? kWeights5[l] : kWeights5[l] / wsum; };

    Var xs = x, ys = y;
    Var result;  // product over scales, (B,1)
    for (int l = 0; l < levels; ++l) {
        Var mu_x = blur(xs, taps);
        Var mu_y = blur(ys, taps);
        Var mu_xx = mul(mu_x, mu_x);
        Var mu_yy = mul(mu_y, mu_y);
        Var mu_xy = mul(mu_x, mu_y);
        Var sxx = sub(blur(mul(xs, xs), taps), mu_xx);
        Var syy = sub(blur(mul(ys, ys), taps), mu_yy);
        Var sxy = sub(blur(mul(xs, ys), taps), mu_xy);

        Var cs_map = div(add_scalar(scale(sxy, 2.0), kC2),
                         add_scalar(add(sxx, syy), kC2));
        Var scale_val;
        if (l == levels - 1) {
            Var l_map = div(add_scalar(scale(mu_xy, 2.0), kC1),
                            add_scalar(add(mu_xx, mu_yy), kC1));
            scale_val = per_image_mean(mul(l_map, cs_map));
        } else {
            scale_val = per_image_mean(cs_map);
        }
        // clamp before the fractional power; covariance terms can dip below 0
        scale_val = pow_const(relu(scale_val), weight(l));
        result = result.defined() ? mul(result, scale_val) : scale_val;

        if (l != levels - 1) {
            xs = avgpool2x2(xs);
            ys = avgpool2x2(ys);
        }
    }
    return result;
}

double ms_ssim_value(const Tensor& x, const Tensor& y) {
    NoGradGuard ng;
    Tensor xb = x.ndim() == 3 ? x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)}) : x;
    Tensor yb = y.ndim() == 3 ? y.reshaped({1, y.dim(0), y.dim(1), y.dim(2)}) : y;
    Var v = ms_ssim_per_image(Var::constant(xb), Var::constant(yb));
    return scalar_value(mean_all(v));
}

Var loss_msssim(const Var& x, const Var& xhat) {
    return add_scalar(neg(mean_all(ms_ssim_per_image(x, xhat))), 1.0);
}

}  // namespace witt
