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

#include <string>
#include <vector>

#include "witt/channel.hpp"
#include "witt/modnet.hpp"
#include "witt/swin.hpp"

namespace witt {

struct ModelConfig {
    std::string name = "custom";
    int stages = 2;
    std::vector<int> depths;
    std::vector<int> widths;
    std::vector<int> heads;
    int window = 2;
    int latent_dim = 32;    // C: per-token channel symbols dimension (real)
    int modnet_hidden = 64; // M
    int mlp_ratio = 4;
    SmFinalAct sm_final_act = SmFinalAct::Sigmoid;
    bool modnet_relu_after_fc = false;
    bool equalization_mmse = true;

    /// R = C / (2 * 3 * 2^n * 2^n)
    double cbr() const;
    /// Image dims must be multiples of this (window divisibility at every
    /// stage dominates: window * 2^n).
    int64_t required_multiple() const;
    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& json_text);
};

/// Named presets: "tiny" (fast tests), "cifar2stage" (low-resolution config),
/// "hires4stage" (high-resolution config).
ModelConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

class WittCodec {
public:
    WittCodec(ModelConfig cfg, uint64_t init_seed);

    /// images (B,H,W,3) -> power-normalized symbol reals (B, 2k).
    /// modnet_enabled=false bypasses the ModNet entirely (phase-1 graph).
    Var encode(const Var& images, double snr_db, bool modnet_enabled = true) const;

    /// symbols (B, 2k) -> reconstruction (B,H,W,3), unclamped.
    Var decode(const Var& symbols, double snr_db, int64_t image_h, int64_t image_w,
               bool modnet_enabled = true) const;

    int64_t symbols_per_image(int64_t image_h, int64_t image_w) const;
    void check_dims(int64_t image_h, int64_t image_w) const;

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }
    int64_t count_params() const { return ps_.total_params(); }

    /// Fresh ModNet initialization (start of phase 2): FC chain back to
    /// identity, SM modules re-randomized.
    void reinit_modnet(uint64_t seed);

private:
    ModelConfig cfg_;
    ParamStore ps_;

    PatchEmbedParams embed_;
    std::vector<PatchMergeParams> merges_;
    std::vector<std::vector<BlockParams>> enc_blocks_;
    ModNetParams enc_modnet_;
    LinearLayer enc_head_;

    LinearLayer dec_in_;
    ModNetParams dec_modnet_;
    std::vector<std::vector<BlockParams>> dec_blocks_;  // deepest stage first
    std::vector<PatchDivideParams> divides_;
    LayerNormLayer out_norm_;
    LinearLayer out_head_;  // C1 -> 12, rearranged to 2x2x3 pixels
};

/// Clamp to [0,1]; applied at evaluation/serialization time only.
Tensor clamp01(const Tensor& t);

}  // namespace witt
