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

#include "witt/channel.hpp"

#include <cmath>
#include <fstream>

namespace witt {

ChannelKind channel_kind_from_string(const std::string& s) {
    if (s == "awgn") return ChannelKind::Awgn;
    if (s == "rayleigh") return ChannelKind::RayleighFast;
    throw std::runtime_error("unknown channel kind: " + s);
}

std::string to_string(ChannelKind k) {
    return k == ChannelKind::Awgn ? "awgn" : "rayleigh";
}

double SymbolFrame::average_power() const {
    double p = 0.0;
    for (const cplx& s : symbols) p += std::norm(s);
    return symbols.empty() ? 0.0 : p / static_cast<double>(symbols.size());
}

double snr_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

SymbolFrame to_symbols(const std::vector<double>& features) {
    if (features.size() % 2 != 0)
        throw ShapeError("to_symbols: feature length must be even, got " +
                         std::to_string(features.size()));
    SymbolFrame f;
    f.symbols.reserve(features.size() / 2);
    for (size_t i = 0; i < features.size(); i += 2)
        f.symbols.emplace_back(features[i], features[i + 1]);
    return power_normalize(f);
}

SymbolFrame power_normalize(const SymbolFrame& frame) {
    double ss = 0.0;
    for (const cplx& s : frame.symbols) ss += std::norm(s);
    if (ss == 0.0)
        throw DegenerateInputError("power_normalize: zero-norm frame (collapsed encoder?)");
    const double scale = std::sqrt(static_cast<double>(frame.k()) / ss);
    SymbolFrame out;
    out.symbols.reserve(frame.symbols.size());
    for (const cplx& s : frame.symbols) out.symbols.push_back(s * scale);
    return out;
}

ChannelRealization draw_realization(int64_t k, double snr_db, ChannelKind kind,
                                    RngStream& h_stream, RngStream& n_stream) {
    ChannelRealization r;
    r.kind = kind;
    r.sigma2 = snr_to_sigma2(snr_db);
    r.h.resize(k);
    r.noise.resize(k);
    if (kind == ChannelKind::Awgn) {
        for (int64_t i = 0; i < k; ++i) r.h[i] = cplx(1.0, 0.0);
    } else {
        // CN(0,1): each component N(0, 1/2), so E|h|^2 = 1
        const double s = std::sqrt(0.5);
        for (int64_t i = 0; i < k; ++i)
            r.h[i] = cplx(s * h_stream.gaussian(), s * h_stream.gaussian());
    }
    const double ns = std::sqrt(r.sigma2 / 2.0);  // sigma2 per complex symbol
    for (int64_t i = 0; i < k; ++i)
        r.noise[i] = cplx(ns * n_stream.gaussian(), ns * n_stream.gaussian());
    return r;
}

SymbolFrame apply_channel(const SymbolFrame& frame, const ChannelRealization& real) {
    if (frame.k() != static_cast<int64_t>(real.h.size()))
        throw ShapeError("apply_channel: realization length mismatch");
    SymbolFrame out;
    out.symbols.resize(frame.symbols.size());
    for (size_t i = 0; i < frame.symbols.size(); ++i)
        out.symbols[i] = real.h[i] * frame.symbols[i] + real.noise[i];
    return out;
}

std::pair<SymbolFrame, ChannelRealization> transmit(const SymbolFrame& frame,
                                                    double snr_db, ChannelKind kind,
                                                    RngStream& h_stream,
                                                    RngStream& n_stream) {
    ChannelRealization r = draw_realization(frame.k(), snr_db, kind, h_stream, n_stream);
    return {apply_channel(frame, r), std::move(r)};
}

SymbolFrame equalize(const SymbolFrame& received, const ChannelRealization& real) {
    if (received.k() != static_cast<int64_t>(real.h.size()))
        throw ShapeError("equalize: realization length mismatch");
    SymbolFrame out;
    out.symbols.resize(received.symbols.size());
    for (size_t i = 0; i < received.symbols.size(); ++i) {
        const cplx& h = real.h[i];
        out.symbols[i] = std::conj(h) * received.symbols[i] / (std::norm(h) + real.sigma2);
    }
    return out;
}

std::vector<double> from_symbols(const SymbolFrame& frame) {
    std::vector<double> v;
    v.reserve(2 * frame.symbols.size());
    for (const cplx& s : frame.symbols) {
        v.push_back(s.real());
        v.push_back(s.imag());
    }
    return v;
}

// ---------------------------------------------------------------------------
// batched in-graph ops

BatchRealization draw_batch_realization(int64_t rows, int64_t k, double snr_db,
                                        ChannelKind kind, RngStream& h_stream,
                                        RngStream& n_stream) {
    BatchRealization r;
    r.kind = kind;
    r.rows = rows;
    r.k = k;
    r.sigma2 = snr_to_sigma2(snr_db);
    r.h.resize(rows * k);
    r.noise.resize(2 * rows * k);
    if (kind == ChannelKind::Awgn) {
        for (auto& h : r.h) h = cplx(1.0, 0.0);
    } else {
        const double s = std::sqrt(0.5);
        for (auto& h : r.h) h = cplx(s * h_stream.gaussian(), s * h_stream.gaussian());
    }
    const double ns = std::sqrt(r.sigma2 / 2.0);
    for (auto& n : r.noise) n = ns * n_stream.gaussian();
    return r;
}

Var power_normalize_rows(const Var& features) {
    const Shape& s = features.shape();
    if (s.size() != 2 || s[1] % 2 != 0)
        throw ShapeError("power_normalize_rows: expected (B, 2k) with even width");
    const int64_t width = s[1];
    const int64_t k = width / 2;
    // reject collapsed rows before building the graph
    for (int64_t r = 0; r < s[0]; ++r) {
        double ss = 0.0;
        const double* p = features.value().data() + r * width;
        for (int64_t j = 0; j < width; ++j) ss += p[j] * p[j];
        if (ss == 0.0)
            throw DegenerateInputError("power_normalize_rows: zero-norm frame in row " +
                                       std::to_string(r));
    }
    Var ss = sum_last(square(features));                  // (B, 1)
    Var denom = sqrt_op(scale(ss, 1.0 / double(k)));      // sqrt(mean |y_i|^2)
    return div(features, denom);
}

Var channel_apply(const Var& y, const BatchRealization& real) {
    const Shape& s = y.shape();
    if (s.size() != 2 || s[0] != real.rows || s[1] != 2 * real.k)
        throw ShapeError("channel_apply: shape " + shape_str(s) +
                         " does not match realization");
    const int64_t n = y.value().numel() / 2;  // complex count
    Tensor out(s);
    const double* py = y.value().data();
    double* po = out.data();
    for (int64_t i = 0; i < n; ++i) {
        const double a = real.h[i].real(), b = real.h[i].imag();
        const double re = py[2 * i], im = py[2 * i + 1];
        po[2 * i] = a * re - b * im + real.noise[2 * i];
        po[2 * i + 1] = b * re + a * im + real.noise[2 * i + 1];
    }
    auto yn = y.node();
    auto h = real.h;  // captured by value: the realization is a draw constant
    return Var(ad::make_custom_op(std::move(out), {yn}, [yn, h, n](ad::Node& self) {
        Tensor& gy = yn->ensure_grad();
        const Tensor& g = self.grad;
        for (int64_t i = 0; i < n; ++i) {
            const double a = h[i].real(), b = h[i].imag();
            const double gre = g[2 * i], gim = g[2 * i + 1];
            gy[2 * i] += a * gre + b * gim;
            gy[2 * i + 1] += -b * gre + a * gim;
        }
    }));
}

Var equalize_rows(const Var& received, const BatchRealization& real) {
    const Shape& s = received.shape();
    if (s.size() != 2 || s[0] != real.rows || s[1] != 2 * real.k)
        throw ShapeError("equalize_rows: shape mismatch");
    const int64_t n = received.value().numel() / 2;
    // MMSE coefficient c = conj(h) / (|h|^2 + sigma2), applied as a 2x2 rotation
    std::vector<double> ca(n), cb(n);
    for (int64_t i = 0; i < n; ++i) {
        const double a = real.h[i].real(), b = real.h[i].imag();
        const double den = a * a + b * b + real.sigma2;
        ca[i] = a / den;
        cb[i] = -b / den;
    }
    Tensor out(s);
    const double* py = received.value().data();
    double* po = out.data();
    for (int64_t i = 0; i < n; ++i) {
        const double re = py[2 * i], im = py[2 * i + 1];
        po[2 * i] = ca[i] * re - cb[i] * im;
        po[2 * i + 1] = cb[i] * re + ca[i] * im;
    }
    auto yn = received.node();
    return Var(ad::make_custom_op(
        std::move(out), {yn},
        [yn, ca = std::move(ca), cb = std::move(cb), n](ad::Node& self) {
            Tensor& gy = yn->ensure_grad();
            const Tensor& g = self.grad;
            for (int64_t i = 0; i < n; ++i) {
                const double gre = g[2 * i], gim = g[2 * i + 1];
                gy[2 * i] += ca[i] * gre + cb[i] * gim;
                gy[2 * i + 1] += -cb[i] * gre + ca[i] * gim;
            }
        }));
}

void dump_channel_trace(const std::string& path, const SymbolFrame& sent,
                        const ChannelRealization& real, const SymbolFrame& received) {
    std::ofstream os(path);
    os << "index,re_y,im_y,re_h,im_h,re_yhat,im_yhat\n";
    for (int64_t i = 0; i < sent.k(); ++i) {
        os << i << ',' << sent.symbols[i].real() << ',' << sent.symbols[i].imag() << ','
           << real.h[i].real() << ',' << real.h[i].imag() << ','
           << received.symbols[i].real() << ',' << received.symbols[i].imag() << '\n';
    }
}

}  // namespace witt
