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

#include "witt/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <png.h>

namespace witt {

namespace fs = std::filesystem;

void validate_unit_range(const Tensor& images, const char* what) {
    for (int64_t i = 0; i < images.numel(); ++i) {
        const double v = images[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw DataError(std::string(what) + ": pixel value " + std::to_string(v) +
                            " outside [0,1]");
    }
}

uint8_t quantize_unit_to_byte(double v) {
    const double x = std::floor(v * 255.0 + 0.5);
    return static_cast<uint8_t>(std::clamp(x, 0.0, 255.0));
}

// ---------------------------------------------------------------------------
// CIFAR-10 binary

CifarDataset CifarDataset::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw DataError("cannot open CIFAR file: " + path);
    const int64_t bytes = static_cast<int64_t>(is.tellg());
    constexpr int64_t kRecord = 3073;
    if (bytes % kRecord != 0)
        throw DataError("malformed CIFAR file " + path + ": size " +
                        std::to_string(bytes) + " is not a multiple of 3073");
    const int64_t n = bytes / kRecord;
    is.seekg(0);

    CifarDataset ds;
    ds.images = Tensor(Shape{n, 32, 32, 3});
    std::vector<unsigned char> rec(kRecord);
    for (int64_t i = 0; i < n; ++i) {
        is.read(reinterpret_cast<char*>(rec.data()), kRecord);
        if (!is) throw DataError("I/O error reading CIFAR record " + std::to_string(i));
        // rec[0] is the label byte; planes follow R, G, B, each 32x32 row-major
        double* img = ds.images.data() + i * 32 * 32 * 3;
        for (int64_t p = 0; p < 1024; ++p)
            for (int64_t ch = 0; ch < 3; ++ch)
                img[p * 3 + ch] = rec[1 + ch * 1024 + p] / 255.0;
    }
    return ds;
}

ImageBatch CifarDataset::batch(const std::vector<int64_t>& indices) const {
    const int64_t b = static_cast<int64_t>(indices.size());
    ImageBatch out;
    out.data = Tensor(Shape{b, 32, 32, 3});
    out.source_ids.reserve(b);
    const int64_t stride = 32 * 32 * 3;
    for (int64_t i = 0; i < b; ++i) {
        std::memcpy(out.data.data() + i * stride, images.data() + indices[i] * stride,
                    stride * sizeof(double));
        out.source_ids.push_back("cifar:" + std::to_string(indices[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// PNG / PPM

namespace {

bool has_ext(const std::string& path, const char* ext) {
    auto p = fs::path(path).extension().string();
    std::transform(p.begin(), p.end(), p.begin(), ::tolower);
    return p == ext;
}

Tensor load_png_rgb(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("cannot open image: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (fp) std::fclose(fp);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("PNG decode failed: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::vector<png_byte> row(png_get_rowbytes(png, info));
    Tensor img(Shape{1, static_cast<int64_t>(h), static_cast<int64_t>(w), 3});
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img[(static_cast<int64_t>(y) * w + x) * 3 + ch] = row[x * 3 + ch] / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

void save_png_rgb(const Tensor& img /*(H,W,3) bytes source*/, const std::string& path) {
    const int64_t h = img.dim(0), w = img.dim(1);
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (fp) std::fclose(fp);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("PNG encode failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(w) * 3);
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                row[x * 3 + ch] = quantize_unit_to_byte(img[(y * w + x) * 3 + ch]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Tensor load_ppm_rgb(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open image: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P6") throw DataError("unsupported PPM (want P6): " + path);
    auto next_int = [&is, &path]() {
        // skip whitespace and # comments
        while (true) {
            int c = is.peek();
            if (c == '#') {
                std::string line;
                std::getline(is, line);
            } else if (std::isspace(c)) {
                is.get();
            } else {
                break;
            }
        }
        int64_t v;
        if (!(is >> v)) throw DataError("malformed PPM header: " + path);
        return v;
    };
    const int64_t w = next_int(), h = next_int(), maxv = next_int();
    if (maxv != 255) throw DataError("unsupported PPM maxval (want 255): " + path);
    is.get();  // single whitespace after header
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * 3);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw DataError("truncated PPM: " + path);
    Tensor img(Shape{1, h, w, 3});
    for (int64_t i = 0; i < h * w * 3; ++i) img[i] = buf[i] / 255.0;
    return img;
}

void save_ppm_rgb(const Tensor& img, const std::string& path) {
    const int64_t h = img.dim(0), w = img.dim(1);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    os << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> buf(static_cast<size_t>(h) * w * 3);
    for (int64_t i = 0; i < h * w * 3; ++i) buf[i] = quantize_unit_to_byte(img[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
    if (!os) throw DataError("write failed: " + path);
}

}  // namespace

Tensor load_image(const std::string& path) {
    if (has_ext(path, ".ppm")) return load_ppm_rgb(path);
    if (has_ext(path, ".png")) return load_png_rgb(path);
    throw DataError("unsupported image extension (want .png/.ppm): " + path);
}

void write_image(const Tensor& image, const std::string& path) {
    Tensor img = image;
    if (img.ndim() == 4) {
        if (img.dim(0) != 1) throw ShapeError("write_image: expected one image");
        img = img.reshaped({img.dim(1), img.dim(2), img.dim(3)});
    }
    if (img.ndim() != 3 || img.dim(2) != 3)
        throw ShapeError("write_image: expected (H,W,3)");
    validate_unit_range(img, "write_image");
    if (has_ext(path, ".ppm"))
        save_ppm_rgb(img, path);
    else
        save_png_rgb(img, path);
}

void write_image_batch(const ImageBatch& batch, const std::string& path) {
    const int64_t b = batch.size();
    if (b == 1) {
        write_image(batch.data, path);
        return;
    }
    fs::path p(path);
    const std::string stem = (p.parent_path() / p.stem()).string();
    const std::string ext = p.extension().string();
    char buf[16];
    for (int64_t i = 0; i < b; ++i) {
        std::snprintf(buf, sizeof(buf), "_%03lld", static_cast<long long>(i));
        const int64_t stride = batch.height() * batch.width() * 3;
        Tensor one(Shape{batch.height(), batch.width(), 3},
                   std::vector<double>(batch.data.data() + i * stride,
                                       batch.data.data() + (i + 1) * stride));
        write_image(one, stem + buf + ext);
    }
}

// ---------------------------------------------------------------------------
// synthetic corpus

Tensor synth_images(int64_t count, int64_t side, uint64_t seed) {
    Tensor out(Shape{count, side, side, 3});
    const double half = (side - 1) / 2.0;
    const double diag = std::sqrt(2.0) * half;
    for (int64_t i = 0; i < count; ++i) {
        RngStream rng(seed, "synth/" + std::to_string(i));
        double* px = out.data() + i * side * side * 3;
        const double c0[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        const double c1[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double dx = std::cos(ang), dy = std::sin(ang);
        for (int64_t y = 0; y < side; ++y)
            for (int64_t x = 0; x < side; ++x) {
                const double t = 0.5 + 0.5 * ((x - half) * dx + (y - half) * dy) / diag;
                double* p = px + (y * side + x) * 3;
                for (int ch = 0; ch < 3; ++ch) p[ch] = c0[ch] + (c1[ch] - c0[ch]) * t;
            }
        const int blobs = 2 + static_cast<int>(rng.uniform_int(3));
        for (int bi = 0; bi < blobs; ++bi) {
            const double cx = rng.uniform(side * 0.125, side * 0.875);
            const double cy = rng.uniform(side * 0.125, side * 0.875);
            const double rad = rng.uniform(side * 0.09, side * 0.31);
            const double col[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
            const double alpha = rng.uniform(0.5, 0.95);
            for (int64_t y = 0; y < side; ++y)
                for (int64_t x = 0; x < side; ++x) {
                    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    const double a = alpha * std::exp(-d2 / (2.0 * rad * rad));
                    double* p = px + (y * side + x) * 3;
                    for (int ch = 0; ch < 3; ++ch) p[ch] += (col[ch] - p[ch]) * a;
                }
        }
        const int shapes = static_cast<int>(rng.uniform_int(3));
        for (int si = 0; si < shapes; ++si) {
            const double col[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
            const double alpha = rng.uniform(0.6, 1.0);
            if (rng.uniform() < 0.5) {
                const int64_t x0 = static_cast<int64_t>(rng.uniform_int(side * 3 / 4));
                const int64_t y0 = static_cast<int64_t>(rng.uniform_int(side * 3 / 4));
                const int64_t wd = side / 8 + static_cast<int64_t>(rng.uniform_int(side * 3 / 8));
                const int64_t ht = side / 8 + static_cast<int64_t>(rng.uniform_int(side * 3 / 8));
                for (int64_t y = y0; y < std::min(side, y0 + ht); ++y)
                    for (int64_t x = x0; x < std::min(side, x0 + wd); ++x) {
                        double* p = px + (y * side + x) * 3;
                        for (int ch = 0; ch < 3; ++ch) p[ch] += (col[ch] - p[ch]) * alpha;
                    }
            } else {
                const double cx = rng.uniform(side * 0.2, side * 0.8);
                const double cy = rng.uniform(side * 0.2, side * 0.8);
                const double rad = rng.uniform(side * 0.06, side * 0.25);
                for (int64_t y = 0; y < side; ++y)
                    for (int64_t x = 0; x < side; ++x) {
                        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > rad * rad) continue;
                        double* p = px + (y * side + x) * 3;
                        for (int ch = 0; ch < 3; ++ch) p[ch] += (col[ch] - p[ch]) * alpha;
                    }
            }
        }
        const double sigma = rng.uniform(0.005, 0.02);
        for (int64_t j = 0; j < side * side * 3; ++j)
            px[j] = std::clamp(px[j] + sigma * rng.gaussian(), 0.0, 1.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// directory stream

ImageDirStream::ImageDirStream(const std::string& dir, int64_t crop_size,
                               uint64_t rng_seed)
    : crop_(crop_size), rng_(rng_seed, "crop") {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    std::vector<std::string> all;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string p = e.path().string();
        if (has_ext(p, ".png") || has_ext(p, ".ppm")) all.push_back(p);
    }
    std::sort(all.begin(), all.end());
    for (const auto& p : all) {
        Tensor img = load_image(p);
        if (img.dim(1) < crop_ || img.dim(2) < crop_) {
            std::fprintf(stderr, "warning: %s is smaller than crop %lld, skipping\n",
                         p.c_str(), static_cast<long long>(crop_));
            continue;
        }
        paths_.push_back(p);
    }
    if (paths_.empty())
        throw DataError("no usable images (>= crop size) in directory: " + dir);
}

ImageBatch ImageDirStream::next() {
    const std::string& p = paths_[cursor_];
    cursor_ = (cursor_ + 1) % paths_.size();
    Tensor img = load_image(p);
    const int64_t h = img.dim(1), w = img.dim(2);
    const int64_t oy = static_cast<int64_t>(rng_.uniform_int(h - crop_ + 1));
    const int64_t ox = static_cast<int64_t>(rng_.uniform_int(w - crop_ + 1));
    last_off_ = {oy, ox};
    ImageBatch out;
    out.data = Tensor(Shape{1, crop_, crop_, 3});
    for (int64_t y = 0; y < crop_; ++y)
        for (int64_t x = 0; x < crop_; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.data[(y * crop_ + x) * 3 + ch] =
                    img[((oy + y) * w + (ox + x)) * 3 + ch];
    out.source_ids.push_back(p + "@" + std::to_string(oy) + "," + std::to_string(ox));
    return out;
}

}  // namespace witt
