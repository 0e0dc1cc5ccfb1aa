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

#include <complex>
#include <string>
#include <vector>

#include "witt/autodiff.hpp"
#include "witt/rng.hpp"

namespace witt {

// Analog transmission layer: real features pair into complex symbols under a
// unit average-power constraint, pass through h (.) y + n, and are MMSE
// equalized at the receiver. Everything is reproducible from named RNG
// streams and differentiable w.r.t. the transmitted symbols (h, n are
// constants of the draw).

using cplx = std::complex<double>;

enum class ChannelKind { Awgn, RayleighFast };

ChannelKind channel_kind_from_string(const std::string& s);
std::string to_string(ChannelKind k);

struct DegenerateInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SymbolFrame {
    std::vector<cplx> symbols;

    int64_t k() const { return static_cast<int64_t>(symbols.size()); }
    double average_power() const;
};

struct ChannelRealization {
    std::vector<cplx> h;      // per-symbol fading coefficient
    std::vector<cplx> noise;  // the drawn additive noise
    double sigma2 = 0.0;      // noise power per complex symbol
    ChannelKind kind = ChannelKind::Awgn;
};

// ---- scalar / frame level ----

/// sigma2 = 10^(-snr_db/10); signal power is 1 by the power constraint.
double snr_to_sigma2(double snr_db);

/// Pairs consecutive reals (re, im) into symbols, then power-normalizes.
SymbolFrame to_symbols(const std::vector<double>& features);

/// y <- sqrt(k) * y / ||y||; average symbol power becomes exactly 1.
SymbolFrame power_normalize(const SymbolFrame& frame);

/// Draws h per channel kind and n ~ CN(0, sigma2) from independent streams.
ChannelRealization draw_realization(int64_t k, double snr_db, ChannelKind kind,
                                    RngStream& h_stream, RngStream& n_stream);

/// h (.) y + n with the realization's drawn h and n.
SymbolFrame apply_channel(const SymbolFrame& frame, const ChannelRealization& real);

/// transmit = draw_realization + apply_channel.
std::pair<SymbolFrame, ChannelRealization> transmit(const SymbolFrame& frame,
                                                    double snr_db, ChannelKind kind,
                                                    RngStream& h_stream,
                                                    RngStream& n_stream);

/// Per-symbol MMSE: conj(h)*y / (|h|^2 + sigma2). AWGN reduces to y/(1+s2).
SymbolFrame equalize(const SymbolFrame& received, const ChannelRealization& real);

/// Interleaves (re, im) back into a real vector of length 2k.
std::vector<double> from_symbols(const SymbolFrame& frame);

// ---- batched, in-graph ----

/// One realization per batch row; h has rows*k entries, noise 2*rows*k reals.
struct BatchRealization {
    std::vector<cplx> h;
    std::vector<double> noise;  // interleaved re, im
    double sigma2 = 0.0;
    ChannelKind kind = ChannelKind::Awgn;
    int64_t rows = 0;
    int64_t k = 0;
};

BatchRealization draw_batch_realization(int64_t rows, int64_t k, double snr_db,
                                        ChannelKind kind, RngStream& h_stream,
                                        RngStream& n_stream);

/// Scales each row of (B, 2k) to unit average complex-symbol power.
/// Throws DegenerateInputError when a row has zero norm.
Var power_normalize_rows(const Var& features);

/// Differentiable h (.) y + n on interleaved (B, 2k) reals.
Var channel_apply(const Var& y, const BatchRealization& real);

/// Differentiable per-symbol MMSE equalization (linear in the input).
Var equalize_rows(const Var& received, const BatchRealization& real);

/// Optional debug trace: index, re/im of y, h, y_hat as CSV.
void dump_channel_trace(const std::string& path, const SymbolFrame& sent,
                        const ChannelRealization& real, const SymbolFrame& received);

}  // namespace witt
