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

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "witt/autodiff.hpp"

namespace witt::testing {

struct FdReport {
    double max_rel_err = 0.0;
    std::string worst;  // "tensor[i]" of the worst coordinate
    int64_t coords_checked = 0;
};

// Central-difference gradient check. loss_fn must rebuild the graph from the
// current parameter values on every call. Relative error uses a small floor
// so exactly-zero gradients (dead ReLU branches) do not divide by zero.
inline FdReport fd_check(const std::function<Var()>& loss_fn,
                         const std::vector<std::pair<std::string, Var>>& params,
                         double step = 1e-5, int64_t max_coords_per_tensor = 0,
                         double denom_floor = 1e-6) {
    Var loss = loss_fn();
    for (auto& [name, p] : params) const_cast<Var&>(p).zero_grad();
    backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& [name, p] : params)
        analytic.push_back(p.has_grad() ? p.grad_view()
                                        : Tensor::zeros(p.value().shape()));

    FdReport rep;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Var p = params[pi].second;
        Tensor& v = p.value_mut();
        const int64_t n = v.numel();
        const int64_t stride =
            (max_coords_per_tensor > 0 && n > max_coords_per_tensor)
                ? (n + max_coords_per_tensor - 1) / max_coords_per_tensor
                : 1;
        for (int64_t i = 0; i < n; i += stride) {
            const double orig = v[i];
            double lp, lm;
            {
                NoGradGuard ng;
                v[i] = orig + step;
                lp = scalar_value(loss_fn());
                v[i] = orig - step;
                lm = scalar_value(loss_fn());
                v[i] = orig;
            }
            const double fd = (lp - lm) / (2.0 * step);
            const double an = analytic[pi][i];
            const double rel = std::abs(fd - an) /
                               std::max({std::abs(fd), std::abs(an), denom_floor});
            ++rep.coords_checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst = params[pi].first + "[" + std::to_string(i) + "]";
            }
        }
    }
    return rep;
}

}  // namespace witt::testing
