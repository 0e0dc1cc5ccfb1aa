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

#include "witt/codec.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace witt {

using nlohmann::json;

double ModelConfig::cbr() const {
    const double denom = 6.0 * std::pow(4.0, stages);
    return static_cast<double>(latent_dim) / denom;
}

int64_t ModelConfig::required_multiple() const {
    return static_cast<int64_t>(window) << stages;
}

void ModelConfig::validate() const {
    if (stages < 1) throw ConfigError("config: stages must be >= 1");
    if (static_cast<int>(depths.size()) != stages ||
        static_cast<int>(widths.size()) != stages ||
        static_cast<int>(heads.size()) != stages)
        throw ConfigError("config: depths/widths/heads must each have one entry per stage");
    for (int i = 0; i < stages; ++i) {
        if (depths[i] < 1) throw ConfigError("config: stage depth must be >= 1");
        if (widths[i] < 1) throw ConfigError("config: stage width must be >= 1");
        if (heads[i] < 1 || widths[i] % heads[i] != 0)
            throw ConfigError("config: stage width must be divisible by head count");
        if (i > 0 && widths[i] < widths[i - 1])
            throw ConfigError("config: widths must be non-decreasing");
    }
    if (window < 1) throw ConfigError("config: window must be >= 1");
    if (latent_dim < 0 || latent_dim % 2 != 0)
        throw ConfigError("config: latent_dim must be a non-negative even number");
    if (modnet_hidden < 1) throw ConfigError("config: modnet_hidden must be >= 1");
    if (mlp_ratio < 1) throw ConfigError("config: mlp_ratio must be >= 1");
}

std::string ModelConfig::to_json() const {
    json j;
    j["name"] = name;
    j["stages"] = stages;
    j["depths"] = depths;
    j["widths"] = widths;
    j["heads"] = heads;
    j["window"] = window;
    j["latent_dim"] = latent_dim;
    j["modnet_hidden"] = modnet_hidden;
    j["mlp_ratio"] = mlp_ratio;
    j["sm_final_act"] = sm_final_act == SmFinalAct::Sigmoid ? "sigmoid" : "relu";
    j["modnet_relu_after_fc"] = modnet_relu_after_fc;
    j["equalization"] = equalization_mmse ? "mmse" : "none";
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ModelConfig c;
    c.name = j.value("name", "custom");
    c.stages = j.at("stages").get<int>();
    c.depths = j.at("depths").get<std::vector<int>>();
    c.widths = j.at("widths").get<std::vector<int>>();
    c.heads = j.at("heads").get<std::vector<int>>();
    c.window = j.at("window").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.modnet_hidden = j.at("modnet_hidden").get<int>();
    c.mlp_ratio = j.value("mlp_ratio", 4);
    c.sm_final_act = j.value("sm_final_act", std::string("sigmoid")) == "relu"
                         ? SmFinalAct::Relu
                         : SmFinalAct::Sigmoid;
    c.modnet_relu_after_fc = j.value("modnet_relu_after_fc", false);
    c.equalization_mmse = j.value("equalization", std::string("mmse")) == "mmse";
    c.validate();
    return c;
}

ModelConfig preset_config(const std::string& name) {
    ModelConfig c;
    c.name = name;
    if (name == "tiny") {
        c.stages = 2;
        c.depths = {1, 1};
        c.widths = {32, 48};
        c.heads = {1, 2};
        c.window = 2;
        c.latent_dim = 32;
        c.modnet_hidden = 48;
    } else if (name == "cifar2stage") {
        c.stages = 2;
        c.depths = {2, 4};
        c.widths = {128, 256};
        c.heads = {4, 8};
        c.window = 2;
        c.latent_dim = 32;
        c.modnet_hidden = 256;
    } else if (name == "hires4stage") {
        c.stages = 4;
        c.depths = {1, 1, 2, 6};
        c.widths = {128, 192, 256, 320};
        c.heads = {4, 6, 8, 10};
        c.window = 8;
        c.latent_dim = 96;
        c.modnet_hidden = 320;
    } else {
        throw ConfigError("unknown preset: " + name +
                          " (expected tiny | cifar2stage | hires4stage)");
    }
    c.validate();
    return c;
}

std::vector<std::string> preset_names() { return {"tiny", "cifar2stage", "hires4stage"}; }

// ---------------------------------------------------------------------------

WittCodec::WittCodec(ModelConfig cfg, uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    RngStream rng(init_seed, "init");
    const int n = cfg_.stages;
    const int64_t cn = cfg_.widths[n - 1];

    // encoder
    embed_ = PatchEmbedParams(ps_, "enc.embed", cfg_.widths[0], rng);
    enc_blocks_.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i > 0)
            merges_.emplace_back(ps_, "enc.s" + std::to_string(i) + ".merge",
                                 cfg_.widths[i - 1], cfg_.widths[i], rng);
        for (int d = 0; d < cfg_.depths[i]; ++d)
            enc_blocks_[i].emplace_back(
                ps_, "enc.s" + std::to_string(i) + ".b" + std::to_string(d),
                cfg_.widths[i], cfg_.heads[i], cfg_.window, cfg_.mlp_ratio, rng);
    }
    enc_modnet_ = ModNetParams(ps_, "enc.modnet", cn, cfg_.modnet_hidden, rng,
                               cfg_.sm_final_act, cfg_.modnet_relu_after_fc);
    enc_head_ = LinearLayer(ps_, "enc.head", cn, cfg_.latent_dim, rng);

    // decoder (deepest stage first)
    dec_in_ = LinearLayer(ps_, "dec.fc_in", cfg_.latent_dim, cn, rng);
    dec_modnet_ = ModNetParams(ps_, "dec.modnet", cn, cfg_.modnet_hidden, rng,
                               cfg_.sm_final_act, cfg_.modnet_relu_after_fc);
    dec_blocks_.resize(n);
    for (int i = n - 1; i >= 0; --i) {
        const int di = n - 1 - i;  // decoder stage index, 0 = deepest
        for (int d = 0; d < cfg_.depths[i]; ++d)
            dec_blocks_[di].emplace_back(
                ps_, "dec.s" + std::to_string(di) + ".b" + std::to_string(d),
                cfg_.widths[i], cfg_.heads[i], cfg_.window, cfg_.mlp_ratio, rng);
        if (i > 0)
            divides_.emplace_back(ps_, "dec.s" + std::to_string(di) + ".div",
                                  cfg_.widths[i], cfg_.widths[i - 1], rng);
    }
    out_norm_ = LayerNormLayer(ps_, "dec.out.norm", cfg_.widths[0]);
    out_head_ = LinearLayer(ps_, "dec.out.head", cfg_.widths[0], 12, rng);
}

void WittCodec::check_dims(int64_t image_h, int64_t image_w) const {
    const int64_t m = cfg_.required_multiple();
    if (image_h % m || image_w % m)
        throw ShapeError("image dims " + std::to_string(image_h) + "x" +
                         std::to_string(image_w) + " must be multiples of " +
                         std::to_string(m) + " for preset " + cfg_.name);
}

int64_t WittCodec::symbols_per_image(int64_t image_h, int64_t image_w) const {
    check_dims(image_h, image_w);
    const int64_t gh = image_h >> cfg_.stages;
    const int64_t gw = image_w >> cfg_.stages;
    return gh * gw * cfg_.latent_dim / 2;
}

Var WittCodec::encode(const Var& images, double snr_db, bool modnet_enabled) const {
    const Shape& s = images.shape();
    if (s.size() != 4 || s[3] != 3) throw ShapeError("encode: expected (B,H,W,3)");
    if (!std::isfinite(snr_db)) throw ConfigError("encode: snr must be finite");
    check_dims(s[1], s[2]);
    const int64_t b = s[0];

    Var x = patch_embed(images, embed_);
    for (int i = 0; i < cfg_.stages; ++i) {
        if (i > 0) x = patch_merge(x, merges_[i - 1]);
        for (size_t d = 0; d < enc_blocks_[i].size(); ++d)
            x = swin_block(x, enc_blocks_[i][d], cfg_.window, d % 2 == 1);
    }
    if (modnet_enabled) x = modnet_forward(x, snr_db, enc_modnet_);
    x = enc_head_.forward(x);  // (B, gh, gw, C)
    x = reshape(x, {b, x.value().numel() / b});
    return power_normalize_rows(x);
}

Var WittCodec::decode(const Var& symbols, double snr_db, int64_t image_h,
                      int64_t image_w, bool modnet_enabled) const {
    const Shape& s = symbols.shape();
    if (s.size() != 2) throw ShapeError("decode: expected (B, 2k)");
    if (!std::isfinite(snr_db)) throw ConfigError("decode: snr must be finite");
    const int64_t k = symbols_per_image(image_h, image_w);
    if (s[1] != 2 * k)
        throw ShapeError("decode: symbol count " + std::to_string(s[1] / 2) +
                         " does not match expected " + std::to_string(k) + " for " +
                         std::to_string(image_h) + "x" + std::to_string(image_w));
    const int64_t b = s[0];
    const int n = cfg_.stages;
    const int64_t gh = image_h >> n, gw = image_w >> n;

    Var x = reshape(symbols, {b, gh, gw, cfg_.latent_dim});
    x = dec_in_.forward(x);
    if (modnet_enabled) x = modnet_forward(x, snr_db, dec_modnet_);
    for (int di = 0; di < n; ++di) {
        for (size_t d = 0; d < dec_blocks_[di].size(); ++d)
            x = swin_block(x, dec_blocks_[di][d], cfg_.window, d % 2 == 1);
        if (di < n - 1) x = patch_divide(x, divides_[di]);
    }
    x = out_head_.forward(out_norm_.forward(x));  // (B, H/2, W/2, 12)
    const Shape& hs = x.shape();
    return index_map(x, {b, image_h, image_w, 3},
                     ungroup2x2_index(b, hs[1], hs[2], 12));
}

void WittCodec::reinit_modnet(uint64_t seed) {
    RngStream rng(seed, "modnet_init");
    for (ModNetParams* mn : {&enc_modnet_, &dec_modnet_}) {
        for (auto& fc : mn->fcs) {
            fc.w.value_mut() = identity_matrix(mn->width);
            fc.b.value_mut().fill(0.0);
        }
        for (auto& sm : mn->sms) {
            sm.l1.w.value_mut() = trunc_normal(sm.l1.w.shape(), 0.02, rng);
            sm.l1.b.value_mut().fill(0.0);
            sm.l2.w.value_mut() = trunc_normal(sm.l2.w.shape(), 0.02, rng);
            sm.l2.b.value_mut().fill(0.0);
            sm.l3.w.value_mut() = trunc_normal(sm.l3.w.shape(), 0.02, rng);
            sm.l3.b.value_mut().fill(3.0);
        }
    }
}

Tensor clamp01(const Tensor& t) {
    Tensor out = t;
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = out[i] < 0.0 ? 0.0 : (out[i] > 1.0 ? 1.0 : out[i]);
    return out;
}

}  // namespace witt
