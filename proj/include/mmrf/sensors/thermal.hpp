// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/image.hpp"

#include <vector>

namespace mmrf::sensors {

struct ThermalEnhanceOptions {
    int grid = 8;
    int smoothing_rounds = 3;
};

/// Per-cell range fields on a cells_x × cells_y grid, row-major.
struct RangeFields {
    int cells_x = 0;
    int cells_y = 0;
    std::vector<double> min;
    std::vector<double> max;
};

/// Cell c along an axis of length n covers [floor(c·n/g), floor((c+1)·n/g)),
/// with g = min(grid, n).
std::vector<int> cell_edges(int n, int grid);

/// Per-cell min/max of the raw counts, `rounds` passes of 3×3 box averaging
/// (edge cells average over their in-grid neighbours), then max ≥ min + 1.
RangeFields thermal_range_fields(const Image16& raw, const ThermalEnhanceOptions& opt);

/// Local-range 8-bit rescaling: the range fields are bilinearly upsampled
/// between cell centres and each pixel maps to
/// clamp(round(255·(raw − min)/(max − min)), 0, 255).
/// An image with a single distinct value maps to 128 everywhere.
Image8 enhance_thermal(const Image16& raw, const ThermalEnhanceOptions& opt = {});

} // namespace mmrf::sensors
