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

#include "witt/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace witt {

namespace {

constexpr char kMagic[8] = {'W', 'I', 'T', 'T', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("checkpoint: unexpected end of file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& manifest_json) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(os, kVersion);
    write_pod<uint32_t>(os, static_cast<uint32_t>(manifest_json.size()));
    os.write(manifest_json.data(), static_cast<std::streamsize>(manifest_json.size()));
    write_pod<uint64_t>(os, params.items().size());
    for (const auto& [name, v] : params.items()) {
        write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Tensor& t = v.value();
        write_pod<uint32_t>(os, static_cast<uint32_t>(t.ndim()));
        for (int64_t d : t.shape()) write_pod<int64_t>(os, d);
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!os) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a witt checkpoint: " + path);
    const uint32_t version = read_pod<uint32_t>(is);
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    const uint32_t mlen = read_pod<uint32_t>(is);
    ck.manifest_json.resize(mlen);
    is.read(ck.manifest_json.data(), mlen);
    if (!is) throw IoError("checkpoint: truncated manifest");

    const uint64_t count = read_pod<uint64_t>(is);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t nlen = read_pod<uint32_t>(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        const uint32_t ndim = read_pod<uint32_t>(is);
        Shape shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) shape[d] = read_pod<int64_t>(is);
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!is) throw IoError("checkpoint: truncated tensor data for " + name);
        ck.tensors.emplace(std::move(name), std::move(t));
    }
    return ck;
}

void load_into_store(const Checkpoint& ck, ParamStore& params) {
    if (ck.tensors.size() != params.items().size())
        throw IoError("checkpoint tensor count mismatch: file has " +
                      std::to_string(ck.tensors.size()) + ", model has " +
                      std::to_string(params.items().size()));
    for (auto& [name, v] : params.items()) {
        auto it = ck.tensors.find(name);
        if (it == ck.tensors.end()) throw IoError("checkpoint missing tensor: " + name);
        if (it->second.shape() != v.value().shape())
            throw IoError("checkpoint shape mismatch for " + name + ": " +
                          shape_str(it->second.shape()) + " vs " +
                          shape_str(v.value().shape()));
        v.value_mut() = it->second;
    }
}

}  // namespace witt
