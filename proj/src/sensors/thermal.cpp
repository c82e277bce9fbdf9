// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/sensors/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmrf::sensors {

std::vector<int> cell_edges(int n, int grid)
{
    if (n < 1 || grid < 1)
        throw ContractError("cell_edges needs a positive length and grid");
    const int g = std::min(grid, n);
    std::vector<int> edges(static_cast<std::size_t>(g) + 1);
    for (int c = 0; c <= g; ++c)
        edges[c] = static_cast<int>(static_cast<long long>(c) * n / g);
    return edges;
}

namespace {

void check_raw(const Image16& raw, const ThermalEnhanceOptions& opt)
{
    if (raw.empty() || raw.width < 1 || raw.height < 1)
        throw ContractError("thermal enhancement needs a nonempty image");
    if (raw.channels != 1)
        throw ContractError("thermal enhancement needs a 1-channel image");
    if (opt.grid < 1 || opt.smoothing_rounds < 0)
        throw ContractError("thermal enhancement needs grid >= 1 and smoothing_rounds >= 0");
}

std::vector<double> box_smooth(const std::vector<double>& f, int nx, int ny)
{
    std::vector<double> out(f.size());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double sum = 0;
            int count = 0;
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int a = i + di;
                    const int b = j + dj;
                    if (a < 0 || b < 0 || a >= nx || b >= ny)
                        continue;
                    sum += f[static_cast<std::size_t>(b) * nx + a];
                    ++count;
                }
            out[static_cast<std::size_t>(j) * nx + i] = sum / count;
        }
    return out;
}

struct Tap {
    int lo = 0;
    int hi = 0;
    double frac = 0;
};

// Interpolation taps between cell centres for every pixel along one axis.
std::vector<Tap> axis_taps(const std::vector<int>& edges, int n)
{
    const int cells = static_cast<int>(edges.size()) - 1;
    std::vector<double> centre(static_cast<std::size_t>(cells));
    for (int c = 0; c < cells; ++c)
        centre[c] = 0.5 * (edges[c] + edges[c + 1] - 1);
    std::vector<Tap> taps(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        if (x <= centre.front()) {
            taps[x] = {0, 0, 0};
        } else if (x >= centre.back()) {
            taps[x] = {cells - 1, cells - 1, 0};
        } else {
            int c = 0;
            while (centre[c + 1] <= x)
                ++c;
            taps[x] = {c, c + 1, (x - centre[c]) / (centre[c + 1] - centre[c])};
        }
    }
    return taps;
}

} // namespace

RangeFields thermal_range_fields(const Image16& raw, const ThermalEnhanceOptions& opt)
{
    check_raw(raw, opt);
    const auto ex = cell_edges(raw.width, opt.grid);
    const auto ey = cell_edges(raw.height, opt.grid);
    RangeFields f;
    f.cells_x = static_cast<int>(ex.size()) - 1;
    f.cells_y = static_cast<int>(ey.size()) - 1;
    const auto cells = static_cast<std::size_t>(f.cells_x) * f.cells_y;
    f.min.assign(cells, std::numeric_limits<double>::infinity());
    f.max.assign(cells, -std::numeric_limits<double>::infinity());
    for (int cy = 0; cy < f.cells_y; ++cy)
        for (int cx = 0; cx < f.cells_x; ++cx) {
            const auto c = static_cast<std::size_t>(cy) * f.cells_x + cx;
            for (int y = ey[cy]; y < ey[cy + 1]; ++y)
                for (int x = ex[cx]; x < ex[cx + 1]; ++x) {
                    const double v = raw.at(x, y);
                    f.min[c] = std::min(f.min[c], v);
                    f.max[c] = std::max(f.max[c], v);
                }
        }
    for (int k = 0; k < opt.smoothing_rounds; ++k) {
        f.min = box_smooth(f.min, f.cells_x, f.cells_y);
        f.max = box_smooth(f.max, f.cells_x, f.cells_y);
    }
    for (std::size_t c = 0; c < cells; ++c)
        f.max[c] = std::max(f.max[c], f.min[c] + 1.0);
    return f;
}

Image8 enhance_thermal(const Image16& raw, const ThermalEnhanceOptions& opt)
{
    check_raw(raw, opt);
    Image8 out(raw.width, raw.height, 1);
    const auto [lo, hi] = std::minmax_element(raw.data.begin(), raw.data.end());
    if (*lo == *hi) {
        std::fill(out.data.begin(), out.data.end(), std::uint8_t{128});
        return out;
    }

    const auto fields = thermal_range_fields(raw, opt);
    const auto tx = axis_taps(cell_edges(raw.width, opt.grid), raw.width);
    const auto ty = axis_taps(cell_edges(raw.height, opt.grid), raw.height);
    auto sample = [&](const std::vector<double>& g, const Tap& a, const Tap& b) {
        auto v = [&](int i, int j) { return g[static_cast<std::size_t>(j) * fields.cells_x + i]; };
        const double top = v(a.lo, b.lo) + a.frac * (v(a.hi, b.lo) - v(a.lo, b.lo));
        const double bottom = v(a.lo, b.hi) + a.frac * (v(a.hi, b.hi) - v(a.lo, b.hi));
        return top + b.frac * (bottom - top);
    };
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x) {
            const double mn = sample(fields.min, tx[x], ty[y]);
            const double mx = sample(fields.max, tx[x], ty[y]);
            const double v = std::round(255.0 * (raw.at(x, y) - mn) / (mx - mn));
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    return out;
}

} // namespace mmrf::sensors
