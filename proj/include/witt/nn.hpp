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

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "witt/autodiff.hpp"
#include "witt/rng.hpp"

namespace witt {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ordered registry of named parameters. Registration order is the canonical
/// order for optimizer state and checkpoints, so training stays reproducible.
class ParamStore {
public:
    Var add(const std::string& name, Tensor init) {
        if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
        Var v = Var::param(std::move(init));
        index_[name] = items_.size();
        items_.emplace_back(name, v);
        return v;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Var get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
        return items_[it->second].second;
    }

    const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
    std::vector<std::pair<std::string, Var>>& items() { return items_; }

    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& [name, v] : items_) n += v.value().numel();
        return n;
    }

    void zero_grads() {
        for (auto& [name, v] : items_) v.zero_grad();
    }

private:
    std::vector<std::pair<std::string, Var>> items_;
    std::unordered_map<std::string, size_t> index_;
};

// ---- initializers ---------------------------------------------------------

/// Normal(0, std) resampled while |x| > 2*std.
inline Tensor trunc_normal(Shape shape, double std_dev, RngStream& rng) {
    Tensor t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) {
        double x;
        do {
            x = rng.gaussian() * std_dev;
        } while (std::abs(x) > 2.0 * std_dev);
        t[i] = x;
    }
    return t;
}

inline Tensor identity_matrix(int64_t n) {
    Tensor t(Shape{n, n});
    for (int64_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
    return t;
}

// ---- layers ---------------------------------------------------------------

struct LinearLayer {
    Var w;  // (in, out)
    Var b;  // (out)

    LinearLayer() = default;
    LinearLayer(ParamStore& ps, const std::string& prefix, int64_t in, int64_t out,
                RngStream& rng, double init_std = 0.02) {
        w = ps.add(prefix + ".w", trunc_normal({in, out}, init_std, rng));
        b = ps.add(prefix + ".b", Tensor::zeros({out}));
    }
    /// Identity-initialized square layer (used by the ModNet FC chain).
    static LinearLayer identity(ParamStore& ps, const std::string& prefix, int64_t n) {
        LinearLayer l;
        l.w = ps.add(prefix + ".w", identity_matrix(n));
        l.b = ps.add(prefix + ".b", Tensor::zeros({n}));
        return l;
    }

    Var forward(const Var& x) const { return add(matmul(x, w), b); }
};

struct LayerNormLayer {
    Var gamma, beta;
    double eps = 1e-5;

    LayerNormLayer() = default;
    LayerNormLayer(ParamStore& ps, const std::string& prefix, int64_t c) {
        gamma = ps.add(prefix + ".g", Tensor::full({c}, 1.0));
        beta = ps.add(prefix + ".b", Tensor::zeros({c}));
    }

    Var forward(const Var& x) const { return layernorm(x, gamma, beta, eps); }
};

}  // namespace witt
