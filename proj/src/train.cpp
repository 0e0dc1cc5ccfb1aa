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

#include "witt/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "witt/data.hpp"

namespace witt {

void TrainConfig::validate() const {
    if (phase != 1 && phase != 2) throw ConfigError("train: phase must be 1 or 2");
    if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (snr_lo_db > snr_hi_db) throw ConfigError("train: snr range lo > hi");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(ParamStore& ps, double lr, double b1, double b2, double eps)
    : ps_(ps), lr_(lr), b1_(b1), b2_(b2), eps_(eps) {
    m_.reserve(ps.items().size());
    v_.reserve(ps.items().size());
    for (const auto& [name, var] : ps.items()) {
        m_.emplace_back(Tensor::zeros(var.value().shape()));
        v_.emplace_back(Tensor::zeros(var.value().shape()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (size_t p = 0; p < ps_.items().size(); ++p) {
        Var& var = ps_.items()[p].second;
        Tensor& th = var.value_mut();
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        const bool has_grad = var.has_grad();
        const Tensor* g = has_grad ? &var.grad_view() : nullptr;
        const int64_t n = th.numel();
        for (int64_t i = 0; i < n; ++i) {
            const double gi = has_grad ? (*g)[i] : 0.0;
            m[i] = b1_ * m[i] + (1.0 - b1_) * gi;
            v[i] = b2_ * v[i] + (1.0 - b2_) * gi * gi;
            th[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

void Adam::save_state(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open optimizer state for writing: " + path);
    const char magic[8] = {'W', 'I', 'T', 'T', 'A', 'D', 'A', 'M'};
    os.write(magic, sizeof(magic));
    os.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
    const uint64_t count = m_.size();
    os.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (size_t p = 0; p < m_.size(); ++p) {
        const int64_t numel = m_[p].numel();
        os.write(reinterpret_cast<const char*>(&numel), sizeof(numel));
        os.write(reinterpret_cast<const char*>(m_[p].data()),
                 static_cast<std::streamsize>(numel * sizeof(double)));
        os.write(reinterpret_cast<const char*>(v_[p].data()),
                 static_cast<std::streamsize>(numel * sizeof(double)));
    }
    if (!os) throw DataError("optimizer state write failed: " + path);
}

void Adam::load_state(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open optimizer state: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, "WITTADAM", 8) != 0)
        throw DataError("not an optimizer state file: " + path);
    is.read(reinterpret_cast<char*>(&t_), sizeof(t_));
    uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (count != m_.size()) throw DataError("optimizer state tensor count mismatch");
    for (size_t p = 0; p < m_.size(); ++p) {
        int64_t numel = 0;
        is.read(reinterpret_cast<char*>(&numel), sizeof(numel));
        if (numel != m_[p].numel()) throw DataError("optimizer state shape mismatch");
        is.read(reinterpret_cast<char*>(m_[p].data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        is.read(reinterpret_cast<char*>(v_[p].data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
    }
    if (!is) throw DataError("optimizer state read failed: " + path);
}

// ---------------------------------------------------------------------------
// training loop

namespace {

std::vector<int64_t> shuffled_indices(int64_t n, RngStream& rng) {
    std::vector<int64_t> idx(n);
    for (int64_t i = 0; i < n; ++i) idx[i] = i;
    for (int64_t i = n - 1; i > 0; --i) {
        const int64_t j = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(i + 1)));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

Tensor gather_batch(const Tensor& images, const std::vector<int64_t>& idx,
                    int64_t begin, int64_t count) {
    const int64_t stride = images.numel() / images.dim(0);
    Shape s = images.shape();
    s[0] = count;
    Tensor out(s);
    for (int64_t i = 0; i < count; ++i)
        std::copy_n(images.data() + idx[begin + i] * stride, stride,
                    out.data() + i * stride);
    return out;
}

}  // namespace

double sample_snr(double lo_db, double hi_db, RngStream& rng) {
    return rng.uniform(lo_db, hi_db);
}

TrainResult train_phase(WittCodec& codec, const Tensor& images, const TrainConfig& cfg,
                        const std::function<void(int epoch, Adam& opt)>& epoch_hook,
                        int start_epoch, Adam* resume_opt) {
    cfg.validate();
    if (images.ndim() != 4 || images.dim(3) != 3)
        throw ShapeError("train: images must be (N,H,W,3)");
    const int64_t n = images.dim(0);
    const int64_t h = images.dim(1), w = images.dim(2);
    const bool modnet_on = cfg.phase == 2;
    if (cfg.phase == 2 && start_epoch == 0) codec.reinit_modnet(cfg.seed);

    Adam local_opt(codec.params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                   cfg.adam_eps);
    Adam& opt = resume_opt ? *resume_opt : local_opt;

    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path, start_epoch == 0 ? std::ios::trunc : std::ios::app);
        if (!log) throw DataError("cannot open training log: " + cfg.log_path);
    }

    const int64_t k = codec.symbols_per_image(h, w);
    const std::string tag = "p" + std::to_string(cfg.phase);

    TrainResult res;
    int64_t step = static_cast<int64_t>(start_epoch) *
                   ((n + cfg.batch_size - 1) / cfg.batch_size);
    bool stop = false;
    for (int epoch = start_epoch; epoch < cfg.epochs && !stop; ++epoch) {
        const std::string etag = tag + "/e" + std::to_string(epoch);
        RngStream order_rng(cfg.seed, etag + "/order");
        RngStream snr_rng(cfg.seed, etag + "/snr");
        RngStream h_rng(cfg.seed, etag + "/chan_h");
        RngStream n_rng(cfg.seed, etag + "/chan_n");
        const std::vector<int64_t> idx = shuffled_indices(n, order_rng);

        double epoch_loss = 0.0;
        int64_t epoch_batches = 0;
        for (int64_t begin = 0; begin < n && !stop; begin += cfg.batch_size) {
            const int64_t count = std::min<int64_t>(cfg.batch_size, n - begin);
            Var x = Var::constant(gather_batch(images, idx, begin, count));
            const double snr = sample_snr(cfg.snr_lo_db, cfg.snr_hi_db, snr_rng);

            Var y = codec.encode(x, snr, modnet_on);
            BatchRealization real =
                draw_batch_realization(count, k, snr, cfg.channel, h_rng, n_rng);
            Var r = channel_apply(y, real);
            if (cfg.equalization_mmse) r = equalize_rows(r, real);
            Var xhat = codec.decode(r, snr, h, w, modnet_on);
            Var loss = cfg.loss == LossKind::Mse ? loss_mse(x, xhat)
                                                 : loss_msssim(x, xhat);
            const double lv = scalar_value(loss);
            if (!std::isfinite(lv))
                throw DivergenceError("training diverged: loss " + std::to_string(lv) +
                                      " at step " + std::to_string(step));
            if (step == 0) res.step0_loss = lv;

            codec.params().zero_grads();
            backward(loss);
            opt.step();

            if (log.is_open()) {
                char line[96];
                std::snprintf(line, sizeof(line), "step=%lld loss=%.8f snr=%.4f\n",
                              static_cast<long long>(step), lv, snr);
                log << line;
            }
            epoch_loss += lv;
            ++epoch_batches;
            ++step;
            res.final_loss = lv;
            if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
        }
        if (epoch_batches > 0) {
            const double mean_loss = epoch_loss / static_cast<double>(epoch_batches);
            if (epoch == start_epoch) res.first_epoch_mean_loss = mean_loss;
            res.final_epoch_mean_loss = mean_loss;
        }
        if (epoch_hook) epoch_hook(epoch, opt);
    }
    res.steps_run = step - static_cast<int64_t>(start_epoch) *
                               ((n + cfg.batch_size - 1) / cfg.batch_size);
    return res;
}

// ---------------------------------------------------------------------------
// evaluation

std::vector<MetricRecord> evaluate(Transceiver& t, const Tensor& images,
                                   const EvalConfig& cfg) {
    if (images.ndim() != 4 || images.dim(3) != 3)
        throw ShapeError("evaluate: images must be (N,H,W,3)");
    NoGradGuard ng;
    const int64_t n = images.dim(0);
    const int64_t h = images.dim(1), w = images.dim(2);
    const int64_t img_elems = h * w * 3;

    std::vector<MetricRecord> records;
    records.reserve(cfg.snr_grid.size());
    for (double snr : cfg.snr_grid) {
        double psnr_sum = 0.0, ms_sum = 0.0;
        int64_t count = 0;
        const int reps = cfg.noiseless ? 1 : cfg.n_rep;
        for (int rep = 0; rep < reps; ++rep) {
            const std::string rtag =
                "eval/snr" + std::to_string(snr) + "/r" + std::to_string(rep);
            RngStream h_rng(cfg.seed, rtag + "/h");
            RngStream n_rng(cfg.seed, rtag + "/n");
            for (int64_t begin = 0; begin < n; begin += cfg.batch_size) {
                const int64_t bc = std::min<int64_t>(cfg.batch_size, n - begin);
                Shape bs = images.shape();
                bs[0] = bc;
                Tensor bimg(bs, std::vector<double>(
                                    images.data() + begin * img_elems,
                                    images.data() + (begin + bc) * img_elems));
                Var x = Var::constant(bimg);
                Var y = t.tx(x, snr);
                Var r = y;
                if (!cfg.noiseless) {
                    const int64_t k = y.shape()[1] / 2;
                    BatchRealization real = draw_batch_realization(
                        bc, k, snr, cfg.channel, h_rng, n_rng);
                    r = channel_apply(y, real);
                    if (cfg.equalization_mmse) r = equalize_rows(r, real);
                }
                Var xhat = t.rx(r, snr, h, w);
                Tensor recon = clamp01(xhat.value());
                Var ms = ms_ssim_per_image(x, Var::constant(recon));
                for (int64_t i = 0; i < bc; ++i) {
                    Tensor xi(Shape{1, h, w, 3},
                              std::vector<double>(bimg.data() + i * img_elems,
                                                  bimg.data() + (i + 1) * img_elems));
                    Tensor ri(Shape{1, h, w, 3},
                              std::vector<double>(recon.data() + i * img_elems,
                                                  recon.data() + (i + 1) * img_elems));
                    psnr_sum += psnr_db(xi, ri);
                    ms_sum += ms.value()[i];
                    ++count;
                }
            }
        }
        MetricRecord rec;
        rec.snr_db = snr;
        rec.cbr = t.cbr();
        rec.psnr_db = psnr_sum / static_cast<double>(count);
        rec.msssim = ms_sum / static_cast<double>(count);
        rec.msssim_db = msssim_to_db(std::min(1.0, rec.msssim));
        rec.n_images = n;
        rec.seed = cfg.seed;
        records.push_back(rec);
    }
    return records;
}

}  // namespace witt
