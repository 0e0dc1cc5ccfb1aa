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

#include "witt/train.hpp"

namespace witt {

/// Header: snr_db,cbr,psnr_db,msssim,msssim_db,n_images,seed
std::string metrics_csv(const std::vector<MetricRecord>& records);
void write_metrics_csv(const std::vector<MetricRecord>& records, const std::string& path);
std::vector<MetricRecord> read_metrics_csv(const std::string& path);

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Minimal line plot: axes, tick labels, one polyline per series, legend.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series);

}  // namespace witt
