// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/geometry.hpp"
#include "mmrf/diff/tape.hpp"

#include <span>
#include <vector>

namespace mmrf::render {

struct CompositeSample {
    double t = 0.0;
    double sigma = 0.0;
    Vec3 rgb = Vec3::Zero();
    Vec3 xspec = Vec3::Zero();
};

struct Background {
    Vec3 rgb = Vec3::Zero();
    Vec3 xspec = Vec3::Zero();
};

struct RenderedRay {
    Vec3 rgb = Vec3::Zero();
    Vec3 xspec = Vec3::Zero();
    double opacity = 0.0;
    std::vector<double> weights;
    double depth = 0.0;
};

/// Emission-absorption compositing along one ray:
///   δ_i = t_{i+1} - t_i (last: far - t_n), α_i = 1 - exp(-σ_i δ_i),
///   T_i = Π_{j<i} (1 - α_j), w_i = T_i α_i,
///   color = Σ w_i c_i + (1 - Σ w_i) · background, depth = Σ w_i t_i.
/// Throws ContractError when t is not strictly increasing, σ is negative or
/// the last sample lies beyond `far`.
RenderedRay composite(std::span<const CompositeSample> samples, double far, const Background& background);

/// Batched differentiable compositing of one color head.
///
/// `sigma` is [R·S×1] and `colors` [R·S×3], both ray-major; `t` is [R×S] with
/// non-decreasing rows; `far` has R entries. Returns colors [R×3]. When
/// `weights_out` is given it receives the [R×S] weight matrix; `opacity_out`
/// and `depth_out` receive per-ray Σw and Σw·t.
diff::Var composite_colors(diff::Tape& tape, diff::Var sigma, diff::Var colors, const diff::Matrix& t,
                           std::span<const double> far, const Vec3& background, diff::Matrix* weights_out = nullptr,
                           std::vector<double>* opacity_out = nullptr, std::vector<double>* depth_out = nullptr);

} // namespace mmrf::render
