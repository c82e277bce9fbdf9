// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/geometry.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace mmrf::render {

/// Pinhole camera. Camera frame is right-handed, looking along -z with +y up;
/// `pose` maps camera coordinates to world coordinates.
struct CameraModel {
    int width = 0;
    int height = 0;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat4 pose = Mat4::Identity();

    /// Throws ContractError when intrinsics are out of range or the rotation is
    /// not a proper rotation (orthonormal within 1e-6, determinant +1).
    void validate() const;

    /// Same field of view at `factor`× the pixel resolution.
    CameraModel scaled(double factor) const;

    Mat3 rotation() const { return pose.topLeftCorner<3, 3>(); }
    Vec3 position() const { return pose.topRightCorner<3, 1>(); }
};

/// Pixel coordinate; the ray passes through (u + 0.5, v + 0.5).
struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3(0, 0, -1);
    double near = 0.0;
    double far = 1.0;
    PixelCoord pixel;
    int frame = 0;
    /// False when the ray misses the scene box; such rays render as background.
    bool hits = true;
};

struct RayBundle {
    std::vector<Ray> rays;

    std::size_t size() const { return rays.size(); }
    /// Throws ContractError when a direction is not unit length or near >= far on a hitting ray.
    void validate() const;
};

/// Rays through the given pixels. Throws ContractError for pixels outside the image.
RayBundle generate_rays(const CameraModel& camera, std::span<const PixelCoord> pixels, int frame = 0);

/// Rays through every pixel center, row-major.
RayBundle generate_all_rays(const CameraModel& camera, int frame = 0);

/// Sets near/far of every ray from its intersection with `box`; rays that miss
/// are marked `hits = false`. Near is clamped to at least `min_near`.
void clip_to_box(RayBundle& bundle, const Aabb& box, double min_near = 0.0);

/// Returns true when `r` is a rotation: RᵀR = I within `tol` and det(R) > 0.
bool is_rotation(const Mat3& r, double tol = 1e-6);

/// Camera-to-world pose at `eye` looking at `target`.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3(0, 1, 0));

nlohmann::json to_json(const CameraModel& c);
CameraModel camera_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const Mat4& pose);
Mat4 pose_from_json(const nlohmann::json& j);

} // namespace mmrf::render
