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

#include "witt/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "witt/data.hpp"

namespace witt {

std::string metrics_csv(const std::vector<MetricRecord>& records) {
    std::string out = "snr_db,cbr,psnr_db,msssim,msssim_db,n_images,seed\n";
    char line[192];
    for (const auto& r : records) {
        std::snprintf(line, sizeof(line), "%g,%.6g,%.6f,%.6f,%.6f,%lld,%llu\n",
                      r.snr_db, r.cbr, r.psnr_db, r.msssim, r.msssim_db,
                      static_cast<long long>(r.n_images),
                      static_cast<unsigned long long>(r.seed));
        out += line;
    }
    return out;
}

void write_metrics_csv(const std::vector<MetricRecord>& records, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write CSV: " + path);
    os << metrics_csv(records);
}

std::vector<MetricRecord> read_metrics_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot read CSV: " + path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<MetricRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        MetricRecord r;
        long long ni = 0;
        unsigned long long sd = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lld,%llu", &r.snr_db, &r.cbr,
                        &r.psnr_db, &r.msssim, &r.msssim_db, &ni, &sd) != 7)
            throw DataError("malformed CSV line: " + line);
        r.n_images = ni;
        r.seed = sd;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series) {
    constexpr int W = 640, H = 480, ML = 64, MR = 140, MT = 40, MB = 48;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double px = (W - ML - MR) / (xmax - xmin);
    const double py = (H - MT - MB) / (ymax - ymin);
    auto X = [&](double x) { return ML + (x - xmin) * px; };
    auto Y = [&](double y) { return H - MB - (y - ymin) * py; };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
       << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << title << "</text>\n";
    // axes
    os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\""
       << H - MB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR
       << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << (MT + H - MB) / 2 << ")\">" << ylabel << "</text>\n";
    // ticks
    char buf[64];
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        std::snprintf(buf, sizeof(buf), "%.3g", xv);
        os << "<text x=\"" << X(xv) << "\" y=\"" << H - MB + 16
           << "\" text-anchor=\"middle\" font-size=\"10\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof(buf), "%.3g", yv);
        os << "<text x=\"" << ML - 6 << "\" y=\"" << Y(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"10\">" << buf << "</text>\n";
    }
    // series
    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kColors[si % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[si].points) os << X(x) << ',' << Y(y) << ' ';
        os << "\"/>\n";
        for (const auto& [x, y] : series[si].points)
            os << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y) << "\" r=\"2.5\" fill=\""
               << color << "\"/>\n";
        os << "<text x=\"" << W - MR + 10 << "\" y=\"" << MT + 16 * si + 12
           << "\" font-size=\"11\" fill=\"" << color << "\">" << series[si].label
           << "</text>\n";
    }
    os << "</svg>\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write SVG: " + path);
    f << os.str();
}

}  // namespace witt
