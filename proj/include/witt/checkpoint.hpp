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

#include <map>
#include <string>

#include "witt/nn.hpp"
#include "witt/tensor.hpp"

namespace witt {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint file layout (little endian throughout):
//   magic   8 bytes  "WITTCKPT"
//   u32     format version (1)
//   u32     manifest byte length, followed by that many bytes of JSON
//   u64     tensor count
//   per tensor: u32 name length, name bytes, u32 ndim, i64 dims[ndim],
//               f64 data[prod(dims)] row-major
// The manifest JSON carries the model config and run hash so a checkpoint is
// self-describing.

struct Checkpoint {
    std::string manifest_json;
    std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& manifest_json);
Checkpoint load_checkpoint(const std::string& path);

/// Loads tensors into an existing store; every store entry must be present
/// with a matching shape, and stray tensor names are an error.
void load_into_store(const Checkpoint& ck, ParamStore& params);

}  // namespace witt
