// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/geometry.hpp"
#include "mmrf/core/image.hpp"
#include "mmrf/render/camera.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mmrf::synth {

enum class PrimitiveKind { box, sphere };

/// Homogeneous participating medium with constant emission.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::box;
    Vec3 center = Vec3::Zero();
    /// Full box edge lengths (boxes only).
    Vec3 size = Vec3::Ones();
    /// Sphere radius (spheres only).
    double radius = 0.5;
    /// Extinction coefficient, 1/m.
    double density = 1.0;
    Vec3 rgb = Vec3::Constant(0.5);
    double thermal = 0.5;

    /// Entry/exit parameters along the ray, or nothing on a miss.
    std::optional<std::pair<double, double>> intersect(const Vec3& origin, const Vec3& dir) const;
    bool contains(const Vec3& p) const;
    Aabb bounding_box() const;
};

struct SyntheticScene {
    std::vector<Primitive> primitives;
    Aabb bounds;
    Vec3 background_rgb = Vec3::Zero();
    double background_thermal = 0.0;

    /// Throws ContractError when a primitive leaves the bounds, has negative
    /// density, or colors fall outside [0,1].
    void validate() const;
};

enum class Modality { rgb, thermal };

/// Medium properties at one point: densities add, emissions mix by density.
struct PointSample {
    double sigma = 0;
    Vec3 rgb = Vec3::Zero();
    double thermal = 0;
};

PointSample query_point(const SyntheticScene& scene, const Vec3& p);

/// Exact emission-absorption integral along one ray over [t_min, ∞).
/// The ray is cut at every primitive boundary; each constant piece contributes
/// T·(1 − exp(−σ·len))·c and the remainder T_end·background.
/// Returns 3 values for rgb, the thermal value replicated for thermal.
Vec3 oracle_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir, Modality m, double t_min = 0);

/// Per-pixel oracle image: 3 channels for rgb, 1 channel for thermal.
ImageF oracle_render(const SyntheticScene& scene, const render::CameraModel& camera, Modality m);

/// Named built-in scenes: "garden" (default acceptance scene), "slab", "empty".
SyntheticScene builtin_scene(const std::string& name);
/// Seeded scene with `count` random boxes and spheres inside [-1,1]³.
SyntheticScene random_scene(std::uint64_t seed, int count);

nlohmann::json to_json(const SyntheticScene& s);
SyntheticScene scene_from_json(const nlohmann::json& j);

} // namespace mmrf::synth
