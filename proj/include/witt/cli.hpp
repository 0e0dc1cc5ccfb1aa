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

#include <string>
#include <vector>

namespace witt {

/// Entry point behind the `witt` binary. Subcommands: train, eval, transmit,
/// sweep. Exit codes: 0 success, 2 usage/config error, 3 training divergence.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // convenience for tests

/// Content hash (hex) of a manifest JSON with its "hash" member removed.
std::string manifest_hash(const std::string& manifest_json);

}  // namespace witt
