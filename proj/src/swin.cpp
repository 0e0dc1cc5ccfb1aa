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

#include "witt/swin.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace witt {

// ---------------------------------------------------------------------------
// index vector cache (shapes repeat every training step)

namespace {

std::mutex g_idx_mutex;
std::unordered_map<std::string, IndexVec> g_idx_cache;

template <typename Builder>
IndexVec cached_index(const std::string& key, Builder build) {
    std::lock_guard<std::mutex> lk(g_idx_mutex);
    auto it = g_idx_cache.find(key);
    if (it != g_idx_cache.end()) return it->second;
    IndexVec v = build();
    g_idx_cache.emplace(key, v);
    return v;
}

std::string idx_key(const char* tag, std::initializer_list<int64_t> dims) {
    std::ostringstream os;
    os << tag;
    for (int64_t d : dims) os << '/' << d;
    return os.str();
}

inline int64_t flat(int64_t b, int64_t y, int64_t x, int64_t ch,
                    int64_t h, int64_t w, int64_t c) {
    return ((b * h + y) * w + x) * c + ch;
}

}  // namespace

IndexVec window_partition_index(int64_t b, int64_t h, int64_t w, int64_t c, int win) {
    return cached_index(idx_key("wp", {b, h, w, c, win}), [=] {
        const int64_t nwh = h / win, nww = w / win, t = int64_t(win) * win;
        auto idx = std::make_shared<std::vector<int64_t>>(b * h * w * c);
        int64_t o = 0;
        for (int64_t ib = 0; ib < b; ++ib)
            for (int64_t wy = 0; wy < nwh; ++wy)
                for (int64_t wx = 0; wx < nww; ++wx)
                    for (int64_t tt = 0; tt < t; ++tt) {
                        const int64_t y = wy * win + tt / win;
                        const int64_t x = wx * win + tt % win;
                        for (int64_t ch = 0; ch < c; ++ch)
                            (*idx)[o++] = flat(ib, y, x, ch, h, w, c);
                    }
        return idx;
    });
}

IndexVec window_reverse_index(int64_t b, int64_t h, int64_t w, int64_t c, int win) {
    return cached_index(idx_key("wr", {b, h, w, c, win}), [=] {
        const int64_t nww = w / win, t = int64_t(win) * win;
        auto idx = std::make_shared<std::vector<int64_t>>(b * h * w * c);
        int64_t o = 0;
        // source layout: (b*nwh*nww, t, c)
        for (int64_t ib = 0; ib < b; ++ib)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const int64_t g = (ib * (h / win) + y / win) * nww + x / win;
                    const int64_t tt = (y % win) * win + (x % win);
                    for (int64_t ch = 0; ch < c; ++ch)
                        (*idx)[o++] = (g * t + tt) * c + ch;
                }
        return idx;
    });
}

IndexVec roll_index(int64_t b, int64_t h, int64_t w, int64_t c, int sy, int sx) {
    const int64_t my = ((sy % h) + h) % h;
    const int64_t mx = ((sx % w) + w) % w;
    return cached_index(idx_key("roll", {b, h, w, c, my, mx}), [=] {
        auto idx = std::make_shared<std::vector<int64_t>>(b * h * w * c);
        int64_t o = 0;
        for (int64_t ib = 0; ib < b; ++ib)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const int64_t sy2 = (y - my + h) % h;
                    const int64_t sx2 = (x - mx + w) % w;
                    for (int64_t ch = 0; ch < c; ++ch)
                        (*idx)[o++] = flat(ib, sy2, sx2, ch, h, w, c);
                }
        return idx;
    });
}

IndexVec group2x2_index(int64_t b, int64_t h, int64_t w, int64_t c) {
    return cached_index(idx_key("grp", {b, h, w, c}), [=] {
        auto idx = std::make_shared<std::vector<int64_t>>(b * h * w * c);
        int64_t o = 0;
        for (int64_t ib = 0; ib < b; ++ib)
            for (int64_t y = 0; y < h / 2; ++y)
                for (int64_t x = 0; x < w / 2; ++x)
                    for (int64_t q = 0; q < 4; ++q) {
                        const int64_t dy = q >> 1, dx = q & 1;
                        for (int64_t ch = 0; ch < c; ++ch)
                            (*idx)[o++] = flat(ib, 2 * y + dy, 2 * x + dx, ch, h, w, c);
                    }
        return idx;
    });
}

IndexVec ungroup2x2_index(int64_t b, int64_t h, int64_t w, int64_t c4) {
    // source: (b, h, w, c4) with c4 = 4*c; output: (b, 2h, 2w, c)
    const int64_t c = c4 / 4;
    return cached_index(idx_key("ungrp", {b, h, w, c4}), [=] {
        auto idx = std::make_shared<std::vector<int64_t>>(b * h * w * c4);
        int64_t o = 0;
        for (int64_t ib = 0; ib < b; ++ib)
            for (int64_t y = 0; y < 2 * h; ++y)
                for (int64_t x = 0; x < 2 * w; ++x) {
                    const int64_t q = (y & 1) * 2 + (x & 1);
                    for (int64_t ch = 0; ch < c; ++ch)
                        (*idx)[o++] = flat(ib, y / 2, x / 2, q * c + ch, h, w, c4);
                }
        return idx;
    });
}

IndexVec relpos_index(int win) {
    return cached_index(idx_key("rp", {win}), [=] {
        const int64_t t = int64_t(win) * win;
        auto idx = std::make_shared<std::vector<int64_t>>(t * t);
        for (int64_t i = 0; i < t; ++i)
            for (int64_t j = 0; j < t; ++j) {
                const int64_t dy = i / win - j / win + win - 1;
                const int64_t dx = i % win - j % win + win - 1;
                (*idx)[i * t + j] = dy * (2 * win - 1) + dx;
            }
        return idx;
    });
}

Tensor shifted_attn_mask(int64_t h, int64_t w, int win, int shift) {
    const int64_t t = int64_t(win) * win;
    const int64_t nwh = h / win, nww = w / win, nw = nwh * nww;
    // region label per position; boundaries at L-win and L-shift encode the
    // post-roll provenance of each token
    auto region = [&](int64_t y, int64_t L) -> int64_t {
        if (y < L - win) return 0;
        if (y < L - shift) return 1;
        return 2;
    };
    std::vector<int64_t> ids(h * w);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            ids[y * w + x] = region(y, h) * 3 + region(x, w);

    const double ninf = -std::numeric_limits<double>::infinity();
    Tensor mask(Shape{nw, 1, t, t});
    for (int64_t wy = 0; wy < nwh; ++wy)
        for (int64_t wx = 0; wx < nww; ++wx) {
            const int64_t g = wy * nww + wx;
            for (int64_t i = 0; i < t; ++i)
                for (int64_t j = 0; j < t; ++j) {
                    const int64_t yi = wy * win + i / win, xi = wx * win + i % win;
                    const int64_t yj = wy * win + j / win, xj = wx * win + j % win;
                    const bool same = ids[yi * w + xi] == ids[yj * w + xj];
                    mask[(g * t + i) * t + j] = same ? 0.0 : ninf;
                }
        }
    return mask;
}

// ---------------------------------------------------------------------------
// tensor-level window ops

Tensor window_partition_t(const Tensor& grid, int win) {
    const Shape& s = grid.shape();
    if (s.size() != 4) throw ShapeError("window_partition: expected (B,h,w,c)");
    const int64_t b = s[0], h = s[1], w = s[2], c = s[3];
    if (win <= 0 || h % win || w % win)
        throw ShapeError("window_partition: dims " + shape_str(s) +
                         " not divisible by window " + std::to_string(win));
    IndexVec idx = window_partition_index(b, h, w, c, win);
    Tensor out(Shape{b * (h / win) * (w / win), int64_t(win) * win, c});
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = grid[(*idx)[i]];
    return out;
}

Tensor window_reverse_t(const Tensor& windows, int win, int64_t h, int64_t w) {
    const Shape& s = windows.shape();
    if (s.size() != 3) throw ShapeError("window_reverse: expected (nW, T, c)");
    const int64_t t = int64_t(win) * win;
    if (s[1] != t) throw ShapeError("window_reverse: token count != win^2");
    if (h % win || w % win) throw ShapeError("window_reverse: h,w not divisible by window");
    const int64_t per_image = (h / win) * (w / win);
    if (s[0] % per_image)
        throw ShapeError("window_reverse: window count inconsistent with h,w");
    const int64_t b = s[0] / per_image;
    const int64_t c = s[2];
    IndexVec idx = window_reverse_index(b, h, w, c, win);
    Tensor out(Shape{b, h, w, c});
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = windows[(*idx)[i]];
    return out;
}

// ---------------------------------------------------------------------------
// parameter bundles

BlockParams::BlockParams(ParamStore& ps, const std::string& prefix, int64_t c,
                         int heads_, int win, int mlp_ratio, RngStream& rng)
    : heads(heads_) {
    if (c % heads_ != 0)
        throw ConfigError("block " + prefix + ": channels " + std::to_string(c) +
                          " not divisible by heads " + std::to_string(heads_));
    ln1 = LayerNormLayer(ps, prefix + ".ln1", c);
    qkv = LinearLayer(ps, prefix + ".qkv", c, 3 * c, rng);
    proj = LinearLayer(ps, prefix + ".proj", c, c, rng);
    relpos = ps.add(prefix + ".relpos",
                    Tensor::zeros({int64_t(2 * win - 1) * (2 * win - 1), heads_}));
    ln2 = LayerNormLayer(ps, prefix + ".ln2", c);
    fc1 = LinearLayer(ps, prefix + ".fc1", c, mlp_ratio * c, rng);
    fc2 = LinearLayer(ps, prefix + ".fc2", mlp_ratio * c, c, rng);
}

PatchEmbedParams::PatchEmbedParams(ParamStore& ps, const std::string& prefix,
                                   int64_t c, RngStream& rng) {
    proj = LinearLayer(ps, prefix + ".proj", 12, c, rng);
    norm = LayerNormLayer(ps, prefix + ".norm", c);
}

PatchMergeParams::PatchMergeParams(ParamStore& ps, const std::string& prefix,
                                   int64_t c_in, int64_t c_out, RngStream& rng) {
    norm = LayerNormLayer(ps, prefix + ".norm", 4 * c_in);
    red = LinearLayer(ps, prefix + ".red", 4 * c_in, c_out, rng);
}

PatchDivideParams::PatchDivideParams(ParamStore& ps, const std::string& prefix,
                                     int64_t c_in, int64_t c_out, RngStream& rng) {
    norm = LayerNormLayer(ps, prefix + ".norm", c_in);
    expand = LinearLayer(ps, prefix + ".expand", c_in, 4 * c_out, rng);
}

// ---------------------------------------------------------------------------
// forward ops

Var patch_embed(const Var& image, const PatchEmbedParams& p) {
    const Shape& s = image.shape();
    if (s.size() != 4 || s[3] != 3) throw ShapeError("patch_embed: expected (B,H,W,3)");
    const int64_t b = s[0], h = s[1], w = s[2];
    if (h % 2 || w % 2) throw ShapeError("patch_embed: H and W must be even");
    Var patches = index_map(image, {b, h / 2, w / 2, 12}, group2x2_index(b, h, w, 3));
    return p.norm.forward(p.proj.forward(patches));
}

Var window_attention(const Var& grid, const BlockParams& p, int win, int shift) {
    const Shape& s = grid.shape();
    if (s.size() != 4) throw ShapeError("window_attention: expected (B,h,w,c)");
    const int64_t b = s[0], h = s[1], w = s[2], c = s[3];
    if (h % win || w % win)
        throw ShapeError("window_attention: grid " + shape_str(s) +
                         " not divisible by window " + std::to_string(win));
    const int heads = p.heads;
    const int64_t d = c / heads;
    const int64_t t = int64_t(win) * win;
    const int64_t nw = (h / win) * (w / win);
    const int64_t g = b * nw;

    Var x = grid;
    if (shift > 0) x = index_map(x, {b, h, w, c}, roll_index(b, h, w, c, -shift, -shift));
    x = index_map(x, {g, t, c}, window_partition_index(b, h, w, c, win));

    Var qkv = p.qkv.forward(x);  // (g, t, 3c)
    Var q = permute(reshape(slice_last(qkv, 0, c), {g, t, heads, d}), {0, 2, 1, 3});
    Var k = permute(reshape(slice_last(qkv, c, c), {g, t, heads, d}), {0, 2, 1, 3});
    Var v = permute(reshape(slice_last(qkv, 2 * c, c), {g, t, heads, d}), {0, 2, 1, 3});

    Var scores = scale(matmul(q, k, /*trans_b=*/true), 1.0 / std::sqrt(double(d)));

    Var bias = gather_rows(p.relpos, relpos_index(win));        // (t*t, heads)
    bias = permute(reshape(bias, {t, t, heads}), {2, 0, 1});    // (heads, t, t)
    scores = add(scores, bias);

    if (shift > 0) {
        scores = reshape(scores, {b, nw, heads, t, t});
        scores = add(scores, Var::constant(shifted_attn_mask(h, w, win, shift)));
        scores = reshape(scores, {g, heads, t, t});
    }

    Var attn = softmax_last(scores);
    Var out = matmul(attn, v);                                  // (g, heads, t, d)
    out = reshape(permute(out, {0, 2, 1, 3}), {g, t, c});
    out = p.proj.forward(out);

    out = index_map(out, {b, h, w, c}, window_reverse_index(b, h, w, c, win));
    if (shift > 0) out = index_map(out, {b, h, w, c}, roll_index(b, h, w, c, shift, shift));
    return out;
}

Var swin_block(const Var& grid, const BlockParams& p, int win, bool shifted) {
    const int shift = shifted ? win / 2 : 0;
    Var y = add(grid, window_attention(p.ln1.forward(grid), p, win, shift));
    Var m = p.fc2.forward(gelu(p.fc1.forward(p.ln2.forward(y))));
    return add(y, m);
}

Var swin_block_pair(const Var& grid, const BlockParams& a, const BlockParams& b, int win) {
    return swin_block(swin_block(grid, a, win, false), b, win, true);
}

Var patch_merge(const Var& grid, const PatchMergeParams& p) {
    const Shape& s = grid.shape();
    if (s.size() != 4) throw ShapeError("patch_merge: expected (B,h,w,c)");
    const int64_t b = s[0], h = s[1], w = s[2], c = s[3];
    if (h % 2 || w % 2) throw ShapeError("patch_merge: h and w must be even");
    Var x = index_map(grid, {b, h / 2, w / 2, 4 * c}, group2x2_index(b, h, w, c));
    return p.red.forward(p.norm.forward(x));
}

Var patch_divide(const Var& grid, const PatchDivideParams& p) {
    const Shape& s = grid.shape();
    if (s.size() != 4) throw ShapeError("patch_divide: expected (B,h,w,c)");
    const int64_t b = s[0], h = s[1], w = s[2];
    Var x = p.expand.forward(p.norm.forward(grid));
    const int64_t c4 = x.shape()[3];
    return index_map(x, {b, 2 * h, 2 * w, c4 / 4}, ungroup2x2_index(b, h, w, c4));
}

}  // namespace witt
