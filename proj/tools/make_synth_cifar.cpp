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

// Writes a deterministic synthetic 32x32 corpus in the CIFAR-10 binary
// layout (3073-byte records: label byte + R/G/B planes).
//
// Usage: make_synth_cifar <out.bin> [count=4000] [seed=7]

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "witt/data.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <out.bin> [count=4000] [seed=7]\n", argv[0]);
        return 2;
    }
    const char* out_path = argv[1];
    const int64_t count = argc > 2 ? std::atoll(argv[2]) : 4000;
    const uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;

    const witt::Tensor images = witt::synth_images(count, 32, seed);

    std::ofstream os(out_path, std::ios::binary);
    if (!os) {
        std::fprintf(stderr, "cannot open %s\n", out_path);
        return 2;
    }
    std::vector<unsigned char> rec(3073);
    for (int64_t i = 0; i < count; ++i) {
        const double* px = images.data() + i * 32 * 32 * 3;
        rec[0] = static_cast<unsigned char>(i % 10);  // label byte, unused downstream
        for (int p = 0; p < 1024; ++p)
            for (int ch = 0; ch < 3; ++ch)
                rec[1 + ch * 1024 + p] = witt::quantize_unit_to_byte(px[p * 3 + ch]);
        os.write(reinterpret_cast<const char*>(rec.data()), 3073);
    }
    std::printf("wrote %lld synthetic records to %s\n", static_cast<long long>(count),
                out_path);
    return 0;
}
