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

// Hierarchical windowed-attention building blocks. Token grids are
// (B, h, w, c) row-major tensors.

// ---- pure tensor-level window ops ----

/// (B,h,w,c) -> (B * h/win * w/win, win*win, c). Bijective re-indexing.
Tensor window_partition_t(const Tensor& grid, int win);
/// Exact inverse of window_partition_t.
Tensor window_reverse_t(const Tensor& windows, int win, int64_t h, int64_t w);

// ---- cached index vectors for in-graph rearrangements ----
using IndexVec = std::shared_ptr<const std::vector<int64_t>>;

IndexVec window_partition_index(int64_t b, int64_t h, int64_t w, int64_t c, int win);
IndexVec window_reverse_index(int64_t b, int64_t h, int64_t w, int64_t c, int win);
/// out[b,y,x,:] = in[b,(y-sy) mod h,(x-sx) mod w,:]
IndexVec roll_index(int64_t b, int64_t h, int64_t w, int64_t c, int sy, int sx);
/// (B,h,w,c) -> (B,h/2,w/2,4c); 2x2 neighborhood order (0,0),(0,1),(1,0),(1,1)
IndexVec group2x2_index(int64_t b, int64_t h, int64_t w, int64_t c);
/// (B,h,w,4c) -> (B,2h,2w,c); inverse arrangement of group2x2_index
IndexVec ungroup2x2_index(int64_t b, int64_t h, int64_t w, int64_t c4);

/// Relative-position table rows for every (query, key) pair in one window.
IndexVec relpos_index(int win);

/// Additive attention mask for the shifted configuration: (nW, 1, T, T) with
/// 0 where the pair originates from adjacent content and -inf otherwise.
Tensor shifted_attn_mask(int64_t h, int64_t w, int win, int shift);

// ---- parameter bundles ----

struct BlockParams {
    LayerNormLayer ln1, ln2;
    LinearLayer qkv;   // c -> 3c
    LinearLayer proj;  // c -> c
    LinearLayer fc1;   // c -> mlp_ratio*c
    LinearLayer fc2;   // mlp_ratio*c -> c
    Var relpos;        // ((2*win-1)^2, heads), zero-init
    int heads = 1;

    BlockParams() = default;
    BlockParams(ParamStore& ps, const std::string& prefix, int64_t c, int heads,
                int win, int mlp_ratio, RngStream& rng);
};

struct PatchEmbedParams {
    LinearLayer proj;  // 12 -> c
    LayerNormLayer norm;
    PatchEmbedParams() = default;
    PatchEmbedParams(ParamStore& ps, const std::string& prefix, int64_t c, RngStream& rng);
};

struct PatchMergeParams {
    LayerNormLayer norm;  // over 4*c_in
    LinearLayer red;      // 4*c_in -> c_out
    PatchMergeParams() = default;
    PatchMergeParams(ParamStore& ps, const std::string& prefix, int64_t c_in,
                     int64_t c_out, RngStream& rng);
};

struct PatchDivideParams {
    LayerNormLayer norm;  // over c_in
    LinearLayer expand;   // c_in -> 4*c_out
    PatchDivideParams() = default;
    PatchDivideParams(ParamStore& ps, const std::string& prefix, int64_t c_in,
                      int64_t c_out, RngStream& rng);
};

// ---- forward ops ----

/// (B,H,W,3) -> (B,H/2,W/2,c): learned linear map of each 2x2x3 patch + LN.
Var patch_embed(const Var& image, const PatchEmbedParams& p);

/// Windowed multi-head self-attention; shift > 0 selects the shifted
/// configuration (cyclic roll + region mask).
Var window_attention(const Var& grid, const BlockParams& p, int win, int shift);

/// One Swin block: LN -> (S)W-MSA -> residual, LN -> MLP -> residual.
Var swin_block(const Var& grid, const BlockParams& p, int win, bool shifted);

/// The regular/shifted block pair.
Var swin_block_pair(const Var& grid, const BlockParams& a, const BlockParams& b, int win);

/// (B,h,w,c) -> (B,h/2,w/2,c_out): 2x2 concat + LN + linear.
Var patch_merge(const Var& grid, const PatchMergeParams& p);

/// (B,h,w,c) -> (B,2h,2w,c_out): LN + linear to 4*c_out + rearrange.
Var patch_divide(const Var& grid, const PatchDivideParams& p);

}  // namespace witt
