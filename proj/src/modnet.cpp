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

#include "witt/modnet.hpp"

namespace witt {

namespace {
// Final-layer bias offset: fresh gates start near 1 (sigmoid(3) ~ 0.95), so
// inserting a fresh ModNet into a trained codec barely perturbs it.
constexpr double kSmOutputBias = 3.0;
}  // namespace

SmParams::SmParams(ParamStore& ps, const std::string& prefix, int64_t hidden,
                   int64_t width, RngStream& rng) {
    l1 = LinearLayer(ps, prefix + ".l1", 1, hidden, rng);
    l2 = LinearLayer(ps, prefix + ".l2", hidden, hidden, rng);
    l3 = LinearLayer(ps, prefix + ".l3", hidden, width, rng);
    l3.b.value_mut().fill(kSmOutputBias);
}

ModNetParams::ModNetParams(ParamStore& ps, const std::string& prefix, int64_t width_,
                           int64_t hidden, RngStream& rng, SmFinalAct act,
                           bool relu_fc)
    : width(width_), final_act(act), relu_after_fc(relu_fc) {
    fcs.reserve(8);
    sms.reserve(7);
    for (int j = 0; j < 8; ++j) {
        fcs.push_back(
            LinearLayer::identity(ps, prefix + ".fc" + std::to_string(j), width_));
        if (j < 7)
            sms.emplace_back(ps, prefix + ".sm" + std::to_string(j), hidden, width_, rng);
    }
}

Var sm_forward(double snr_db, const SmParams& p, SmFinalAct act) {
    Var s = Var::constant(Tensor(Shape{1, 1}, std::vector<double>{snr_db}));
    Var h = relu(p.l1.forward(s));
    h = relu(p.l2.forward(h));
    Var o = p.l3.forward(h);
    o = (act == SmFinalAct::Sigmoid) ? sigmoid(o) : relu(o);
    return reshape(o, {o.value().numel()});  // (width), broadcasts as a suffix
}

Var modnet_forward(const Var& features, double snr_db, const ModNetParams& p,
                   bool gates_one) {
    if (features.shape().back() != p.width)
        throw ConfigError("modnet_forward: feature width " +
                          std::to_string(features.shape().back()) +
                          " != configured width " + std::to_string(p.width));
    Var x = features;
    for (int j = 0; j < 8; ++j) {
        x = p.fcs[j].forward(x);
        if (p.relu_after_fc && j < 7) x = relu(x);
        if (j < 7 && !gates_one)
            x = mul(x, sm_forward(snr_db, p.sms[j], p.final_act));
    }
    return x;
}

}  // namespace witt
