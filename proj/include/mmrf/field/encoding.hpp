// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/geometry.hpp"
#include "mmrf/diff/tape.hpp"

#include <vector>

namespace mmrf::field {

/// Width of the encoded direction: 3 + 6·frequencies.
constexpr int encoded_width(int frequencies) { return 3 + 6 * frequencies; }

/// (d, sin(2^0 π d), cos(2^0 π d), ..., sin(2^{L-1} π d), cos(2^{L-1} π d)),
/// each sin/cos block holding the three components. `d` must be unit length
/// within 1e-6.
std::vector<double> encode_direction(const Vec3& d, int frequencies);

/// Batched, differentiable form over directions [N×3] → [N×encoded_width].
/// Unit length is checked per row.
diff::Var encode_directions(diff::Tape& tape, diff::Var directions, int frequencies);

} // namespace mmrf::field
