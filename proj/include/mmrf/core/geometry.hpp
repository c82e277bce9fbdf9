// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <optional>
#include <utility>

namespace mmrf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Axis-aligned box in world units (meters).
struct Aabb {
    Vec3 min = Vec3::Constant(-1.0);
    Vec3 max = Vec3::Constant(1.0);

    Vec3 extent() const { return max - min; }
    Vec3 center() const { return 0.5 * (min + max); }

    bool contains(const Vec3& p) const
    {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }

    bool contains(const Aabb& other) const { return contains(other.min) && contains(other.max); }

    Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }

    /// Slab test. Returns the parametric [t_enter, t_exit] of the ray inside the
    /// box (t_enter may be negative when the origin is inside), or nothing when
    /// the ray misses or only grazes it.
    std::optional<std::pair<double, double>> intersect(const Vec3& origin, const Vec3& dir) const
    {
        double t0 = -std::numeric_limits<double>::infinity();
        double t1 = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            if (dir[a] == 0.0) {
                if (origin[a] < min[a] || origin[a] > max[a])
                    return std::nullopt;
                continue;
            }
            const double inv = 1.0 / dir[a];
            double ta = (min[a] - origin[a]) * inv;
            double tb = (max[a] - origin[a]) * inv;
            if (ta > tb)
                std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        if (!(t1 > t0))
            return std::nullopt;
        return std::make_pair(t0, t1);
    }
};

} // namespace mmrf
