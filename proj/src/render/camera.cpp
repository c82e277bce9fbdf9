// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/render/camera.hpp"

#include "mmrf/core/error.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <string>

namespace mmrf::render {

bool is_rotation(const Mat3& r, double tol)
{
    if (!r.allFinite())
        return false;
    const Mat3 err = r.transpose() * r - Mat3::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && r.determinant() > 0;
}

void CameraModel::validate() const
{
    if (width < 1 || height < 1)
        throw ContractError("camera image size must be positive");
    if (!(fx > 0) || !(fy > 0))
        throw ContractError("camera focal lengths must be positive");
    if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
        throw ContractError("camera principal point lies outside the image");
    if (!pose.allFinite())
        throw ContractError("camera pose is not finite");
    if (!is_rotation(rotation()))
        throw ContractError("camera pose rotation is not orthonormal with determinant +1");
}

CameraModel CameraModel::scaled(double factor) const
{
    if (!(factor > 0))
        throw ContractError("resolution scale must be positive");
    CameraModel c = *this;
    c.width = static_cast<int>(std::lround(width * factor));
    c.height = static_cast<int>(std::lround(height * factor));
    c.fx = fx * factor;
    c.fy = fy * factor;
    c.cx = cx * factor;
    c.cy = cy * factor;
    return c;
}

void RayBundle::validate() const
{
    for (std::size_t i = 0; i < rays.size(); ++i) {
        const auto& r = rays[i];
        if (std::abs(r.direction.norm() - 1.0) > 1e-6)
            throw ContractError("ray " + std::to_string(i) + " direction is not unit length");
        if (r.hits && !(r.near < r.far))
            throw ContractError("ray " + std::to_string(i) + " has near >= far");
    }
}

RayBundle generate_rays(const CameraModel& camera, std::span<const PixelCoord> pixels, int frame)
{
    const Mat3 rot = camera.rotation();
    const Vec3 origin = camera.position();
    RayBundle bundle;
    bundle.rays.reserve(pixels.size());
    for (const auto& px : pixels) {
        if (!(px.u >= 0 && px.u < camera.width && px.v >= 0 && px.v < camera.height))
            throw ContractError("pixel (" + std::to_string(px.u) + ", " + std::to_string(px.v) +
                                ") is outside the " + std::to_string(camera.width) + "x" +
                                std::to_string(camera.height) + " image");
        const Vec3 d_cam((px.u + 0.5 - camera.cx) / camera.fx, -(px.v + 0.5 - camera.cy) / camera.fy, -1.0);
        Ray r;
        r.origin = origin;
        r.direction = (rot * d_cam).normalized();
        r.pixel = px;
        r.frame = frame;
        bundle.rays.push_back(r);
    }
    return bundle;
}

RayBundle generate_all_rays(const CameraModel& camera, int frame)
{
    std::vector<PixelCoord> px;
    px.reserve(static_cast<std::size_t>(camera.width) * camera.height);
    for (int v = 0; v < camera.height; ++v)
        for (int u = 0; u < camera.width; ++u)
            px.push_back({static_cast<double>(u), static_cast<double>(v)});
    return generate_rays(camera, px, frame);
}

void clip_to_box(RayBundle& bundle, const Aabb& box, double min_near)
{
    for (auto& r : bundle.rays) {
        const auto hit = box.intersect(r.origin, r.direction);
        if (!hit || hit->second <= min_near) {
            r.hits = false;
            r.near = min_near;
            r.far = min_near + 1.0;
            continue;
        }
        r.hits = true;
        r.near = std::max(hit->first, min_near);
        r.far = hit->second;
    }
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up)
{
    const Vec3 back = (eye - target).normalized(); // camera +z points away from the target
    Vec3 right = up.cross(back);
    if (right.norm() < 1e-12)
        throw ContractError("look_at: up vector is parallel to the viewing direction");
    right.normalize();
    const Vec3 true_up = back.cross(right);
    Mat4 m = Mat4::Identity();
    m.block<3, 1>(0, 0) = right;
    m.block<3, 1>(0, 1) = true_up;
    m.block<3, 1>(0, 2) = back;
    m.block<3, 1>(0, 3) = eye;
    return m;
}

nlohmann::json pose_to_json(const Mat4& pose)
{
    std::vector<double> v;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            v.push_back(pose(r, c));
    return v;
}

Mat4 pose_from_json(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 16)
        throw FormatError("pose must have 16 entries (row-major 4x4)");
    Mat4 m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            m(r, c) = v[r * 4 + c];
    return m;
}

nlohmann::json to_json(const CameraModel& c)
{
    return {{"width", c.width}, {"height", c.height}, {"fx", c.fx}, {"fy", c.fy},
            {"cx", c.cx},       {"cy", c.cy},         {"pose", pose_to_json(c.pose)}};
}

CameraModel camera_from_json(const nlohmann::json& j)
{
    CameraModel c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    if (j.contains("pose"))
        c.pose = pose_from_json(j.at("pose"));
    return c;
}

} // namespace mmrf::render
