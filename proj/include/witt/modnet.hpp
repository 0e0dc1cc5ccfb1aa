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

#include "witt/nn.hpp"

namespace witt {

// SNR-conditioned feature modulation: a cascade of 8 width-preserving FC
// layers interleaved with 7 SNR-modulation (SM) modules whose gating vectors
// rescale the features element-wise.

enum class SmFinalAct { Sigmoid, Relu };

struct SmParams {
    LinearLayer l1;  // 1 -> M
    LinearLayer l2;  // M -> M
    LinearLayer l3;  // M -> feature width

    SmParams() = default;
    SmParams(ParamStore& ps, const std::string& prefix, int64_t hidden,
             int64_t width, RngStream& rng);
};

struct ModNetParams {
    std::vector<LinearLayer> fcs;  // 8, identity-initialized
    std::vector<SmParams> sms;     // 7
    int64_t width = 0;
    SmFinalAct final_act = SmFinalAct::Sigmoid;
    bool relu_after_fc = false;

    ModNetParams() = default;
    ModNetParams(ParamStore& ps, const std::string& prefix, int64_t width,
                 int64_t hidden, RngStream& rng,
                 SmFinalAct act = SmFinalAct::Sigmoid, bool relu_after_fc = false);
};

/// Gating vector for one SM module, shape (width), values in (0,1) for the
/// sigmoid output activation.
Var sm_forward(double snr_db, const SmParams& p, SmFinalAct act);

/// FC1, gate, FC2, gate, ..., FC8 over (..., width) features. Every SM sees
/// the same scalar snr; gates broadcast over all leading (token) axes.
/// gates_one forces every gate to 1 (test hook / architectural ablation).
Var modnet_forward(const Var& features, double snr_db, const ModNetParams& p,
                   bool gates_one = false);

}  // namespace witt
