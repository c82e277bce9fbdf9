// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/data/manifest.hpp"
#include "mmrf/synth/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

namespace mmrf::synth {

/// Circular orbit around `center`: view k sits at angle arc·k/views, at
/// `radius` in the xz plane and `height` above the centre, looking at it.
struct TrajectorySpec {
    Vec3 center = Vec3::Zero();
    double radius = 3.2;
    double height = 1.0;
    int views = 23;
    double time_spacing = 0.1;
    double arc = 2 * std::numbers::pi;
};

/// Pose at a fractional view index (0 ≤ s ≤ views − 1).
Mat4 orbit_pose(const TrajectorySpec& t, double s);

struct DatasetOptions {
    data::Intrinsics intrinsics{64, 64, 160.0, 160.0, 32.0, 32.0};
    double event_threshold = 0.25;
    /// Rendered sub-frames per keyframe gap used for event synthesis.
    int event_supersample = 10;
    data::ThermalRange thermal_range;
    /// Gaussian read noise on raw thermal counts, in counts.
    double thermal_noise = 0.0;
    std::uint64_t seed = 0;
};

/// Renders every view with the oracle and writes the dataset layout:
///   DIR/manifest.json, DIR/rgb/NNNN.png, DIR/thermal/NNNN.png (16-bit raw),
///   DIR/events.bin, DIR/scene.json.
/// Output bytes depend only on the inputs.
data::Manifest generate_dataset(const SyntheticScene& scene, const TrajectorySpec& trajectory,
                                const DatasetOptions& options, const std::filesystem::path& dir);

/// Copies the dataset at `src` to `dst` with every RGB image replaced by
/// clamp(gain·rgb + N(0, noise_sigma)), quantized to 8 bits. Thermal images
/// and events are copied unchanged.
data::Manifest lowlight_variant(const std::filesystem::path& src, const std::filesystem::path& dst, double gain,
                                double noise_sigma, std::uint64_t seed);

} // namespace mmrf::synth
