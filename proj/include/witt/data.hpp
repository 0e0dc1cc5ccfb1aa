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

#include <optional>
#include <string>
#include <vector>

#include "witt/rng.hpp"
#include "witt/tensor.hpp"

namespace witt {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A batch of RGB images in unit range, (B,H,W,3).
struct ImageBatch {
    Tensor data;
    std::vector<std::string> source_ids;

    int64_t size() const { return data.ndim() == 4 ? data.dim(0) : 0; }
    int64_t height() const { return data.dim(1); }
    int64_t width() const { return data.dim(2); }
};

/// Throws DataError unless every element is finite and in [0,1].
void validate_unit_range(const Tensor& images, const char* what);

// ---- CIFAR-10 binary format ----
// records of 3073 bytes: 1 label byte + 1024 R + 1024 G + 1024 B, 32x32
// row-major planes. Labels are discarded.

struct CifarDataset {
    Tensor images;  // (N, 32, 32, 3) in [0,1]
    int64_t count() const { return images.dim(0); }

    static CifarDataset load(const std::string& path);
    ImageBatch batch(const std::vector<int64_t>& indices) const;
};

// ---- single image I/O ----

/// Decodes an 8-bit RGB PNG (or P6 PPM by extension) to (1,H,W,3) in [0,1].
Tensor load_image(const std::string& path);

/// Rounds half-up to 8-bit and writes a PNG (or P6 PPM by extension).
/// `image` is (H,W,3) or (1,H,W,3).
void write_image(const Tensor& image, const std::string& path);

/// Writes every image of a batch; multi-image batches get _000, _001 ...
/// suffixes before the extension.
void write_image_batch(const ImageBatch& batch, const std::string& path);

uint8_t quantize_unit_to_byte(double v);  // round half up, clamped

// ---- directory of images with random crops ----

/// Deterministic procedural RGB images (side x side): gradient background,
/// soft blobs, hard-edged shapes, light noise. Used for desk-scale training
/// corpora and test fixtures.
Tensor synth_images(int64_t count, int64_t side, uint64_t seed);

class ImageDirStream {
public:
    /// Scans *.png / *.ppm (sorted). Images smaller than crop_size are
    /// skipped with a warning on stderr; an empty usable set is an error.
    ImageDirStream(const std::string& dir, int64_t crop_size, uint64_t rng_seed);

    /// Next uniformly random crop, cycling the directory in sorted order.
    ImageBatch next();
    /// Offsets drawn for the most recent next() call (for tests).
    std::pair<int64_t, int64_t> last_offsets() const { return last_off_; }
    int64_t image_count() const { return static_cast<int64_t>(paths_.size()); }

private:
    std::vector<std::string> paths_;
    int64_t crop_;
    RngStream rng_;
    size_t cursor_ = 0;
    std::pair<int64_t, int64_t> last_off_{0, 0};
};

}  // namespace witt
