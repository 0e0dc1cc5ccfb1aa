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

#include <functional>
#include <optional>

#include "witt/codec.hpp"
#include "witt/metrics.hpp"

namespace witt {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LossKind { Mse, OneMinusMsssim };

struct TrainConfig {
    int phase = 1;  // 1: all but ModNet (ModNet bypassed), 2: everything
    double learning_rate = 1e-4;
    int batch_size = 32;
    int epochs = 1;
    int64_t max_steps = 0;  // 0 = no cap
    double snr_lo_db = 1.0;
    double snr_hi_db = 13.0;
    uint64_t seed = 1;
    LossKind loss = LossKind::Mse;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    ChannelKind channel = ChannelKind::Awgn;
    bool equalization_mmse = true;
    std::string log_path;  // line-oriented "step= loss= snr=" log, empty = off

    void validate() const;
};

class Adam {
public:
    Adam(ParamStore& ps, double lr, double b1 = 0.9, double b2 = 0.999,
         double eps = 1e-8);
    /// Applies one update from the accumulated gradients (missing grads count
    /// as zero, so bypassed modules stay bit-identical).
    void step();

    int64_t t() const { return t_; }
    void save_state(const std::string& path) const;
    void load_state(const std::string& path);

private:
    ParamStore& ps_;
    std::vector<Tensor> m_, v_;
    double lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
};

struct TrainResult {
    double step0_loss = 0.0;
    double first_epoch_mean_loss = 0.0;
    double final_epoch_mean_loss = 0.0;
    double final_loss = 0.0;
    int64_t steps_run = 0;
};

/// One training phase over an image tensor (N,H,W,3). RNG streams are derived
/// from (seed, phase, epoch), so runs are bit-reproducible and epoch-level
/// resume matches the uninterrupted run. Phase 2 re-initializes the ModNet
/// unless resuming (start_epoch > 0).
TrainResult train_phase(
    WittCodec& codec, const Tensor& images, const TrainConfig& cfg,
    const std::function<void(int epoch, Adam& opt)>& epoch_hook = {},
    int start_epoch = 0, Adam* resume_opt = nullptr);

// ---------------------------------------------------------------------------
// evaluation

struct MetricRecord {
    double snr_db = 0.0;
    double cbr = 0.0;
    double psnr_db = 0.0;
    double msssim = 0.0;
    double msssim_db = 0.0;
    int64_t n_images = 0;
    uint64_t seed = 0;
};

/// Encoder/decoder pair seen by the evaluator; lets tests swap in stubs.
class Transceiver {
public:
    virtual ~Transceiver() = default;
    virtual Var tx(const Var& images, double snr_db) = 0;
    virtual Var rx(const Var& symbols, double snr_db, int64_t h, int64_t w) = 0;
    virtual double cbr() const = 0;
};

class CodecTransceiver : public Transceiver {
public:
    explicit CodecTransceiver(const WittCodec& c, bool modnet_enabled = true)
        : c_(c), modnet_(modnet_enabled) {}
    Var tx(const Var& images, double snr_db) override {
        return c_.encode(images, snr_db, modnet_);
    }
    Var rx(const Var& symbols, double snr_db, int64_t h, int64_t w) override {
        return c_.decode(symbols, snr_db, h, w, modnet_);
    }
    double cbr() const override { return c_.config().cbr(); }

private:
    const WittCodec& c_;
    bool modnet_;
};

struct EvalConfig {
    std::vector<double> snr_grid{1, 3, 5, 7, 9, 11, 13};
    ChannelKind channel = ChannelKind::Awgn;
    bool equalization_mmse = true;
    bool noiseless = false;  // bypass the channel entirely
    int n_rep = 5;           // channel draws per image per SNR
    int batch_size = 16;
    uint64_t seed = 1;
};

/// encode -> transmit -> (equalize) -> decode -> clamp over the dataset,
/// averaging per-image PSNR / MS-SSIM over images and repetitions.
std::vector<MetricRecord> evaluate(Transceiver& t, const Tensor& images,
                                   const EvalConfig& cfg);

/// Uniform SNR draw in [lo, hi] dB.
double sample_snr(double lo_db, double hi_db, RngStream& rng);

}  // namespace witt
