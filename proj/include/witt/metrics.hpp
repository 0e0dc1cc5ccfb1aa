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

#include "witt/autodiff.hpp"

namespace witt {

// Distortion metrics on unit-range images. PSNR peak is 1.0; exact matches
// are capped at 100 dB.

inline constexpr double kPsnrCapDb = 100.0;

double mse(const Tensor& x, const Tensor& y);
double psnr_db(const Tensor& x, const Tensor& y);

/// Mean over all pixels/channels of (x - xhat)^2, differentiable.
Var loss_mse(const Var& x, const Var& xhat);

/// Multi-scale SSIM per image, (B,1) in [0,1]. Gaussian window 11 (sigma
/// 1.5), valid filtering, 2x2 average-pool between scales. Uses 5 scales
/// with the published weights when the image supports them, otherwise the
/// first L weights renormalized (3 scales for 32x32). The window shrinks to
/// the smallest scale when dims require it.
Var ms_ssim_per_image(const Var& x, const Var& y);

/// Batch-mean MS-SSIM as a plain number (no graph).
double ms_ssim_value(const Tensor& x, const Tensor& y);

/// 1 - mean(MS-SSIM) over the batch, differentiable.
Var loss_msssim(const Var& x, const Var& xhat);

/// -10 log10(1 - v); v = 1 maps to the 100 dB cap, v outside [0,1] throws.
double msssim_to_db(double v);

/// Number of scales used for a given image size (1..5).
int ms_ssim_levels(int64_t h, int64_t w);

}  // namespace witt
