// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/geometry.hpp"
#include "mmrf/diff/tape.hpp"

#include <json.hpp>

#include <array>
#include <random>
#include <string>
#include <vector>

namespace mmrf::field {

using diff::Matrix;
using diff::ParamId;
using diff::ParameterStore;
using diff::Real;
using diff::Tape;
using diff::Var;

enum class Storage { dense, cp };

struct FieldSpec {
    Aabb bounds;
    std::array<int, 3> resolution{32, 32, 32};
    int channels = 16;
    Storage storage = Storage::dense;
    /// CP rank, ignored for dense storage.
    int rank = 16;
    /// Initial values are uniform in [-init_scale, init_scale] (per factor for CP).
    Real init_scale = 0.1;

    std::size_t voxel_count() const
    {
        return static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2];
    }
};

/// Linear interpolation along one axis: two taps and their weights.
struct AxisTaps {
    std::array<int, 2> index{0, 0};
    std::array<Real, 2> weight{1.0, 0.0};
};

/// The eight trilinear corners of a query point (flat voxel indices).
struct Stencil {
    std::array<std::size_t, 8> voxel{};
    std::array<Real, 8> weight{};
};

/// Explicit 3-D feature volume over a bounding box, either a dense voxel grid
/// or a CP decomposition sum_r vx_r(x)·vy_r(y)·vz_r(z) per channel.
///
/// Voxel (i,j,k) has its center at min + (i+0.5)·extent/res. Queries are
/// clamped to the span of voxel centers, so the field is constant within half a
/// voxel of the box faces. Dense values are stored [voxel][channel] with voxel
/// index (k·ry + j)·rx + i; CP factors are stored [channel·rank + r][axis index].
class FeatureField {
public:
    FeatureField() = default;
    FeatureField(ParameterStore& store, const std::string& name, FieldSpec spec, std::mt19937_64& rng);

    static FeatureField attach(const ParameterStore& store, const std::string& name, FieldSpec spec);

    const FieldSpec& spec() const { return spec_; }
    int channels() const { return spec_.channels; }

    Vec3 voxel_center(int i, int j, int k) const;
    std::size_t voxel_index(int i, int j, int k) const;

    std::array<AxisTaps, 3> axis_taps(const Vec3& p) const;
    Stencil stencil(const Vec3& p) const;

    /// Plain evaluation. With `strict`, a point outside the box throws OutOfBoundsError.
    std::vector<Real> sample(const ParameterStore& store, const Vec3& p, bool strict = false) const;

    /// Differentiable batch sampling: points [N×3] → features [N×channels].
    Var sample(Tape& tape, const Matrix& points) const;

    /// Evaluates the field at every voxel center, [voxel][channel] layout.
    std::vector<Real> materialize_dense(const ParameterStore& store) const;

    ParamId grid() const { return grid_; }
    const std::array<ParamId, 3>& factors() const { return factors_; }

private:
    Var sample_dense(Tape& tape, const Matrix& points) const;
    Var sample_cp(Tape& tape, const Matrix& points) const;

    FieldSpec spec_;
    ParamId grid_;
    std::array<ParamId, 3> factors_{};
};

/// Coarse and fine volumes over one bounding box.
struct FieldPair {
    FeatureField coarse;
    FeatureField fine;

    /// Throws ContractError unless fine resolution >= coarse on every axis and both share bounds.
    void validate() const;
};

/// Axis resolution for a total voxel budget, floor(cbrt(count)) on every axis.
std::array<int, 3> cube_resolution_for(std::size_t voxel_count);

nlohmann::json to_json(const FieldSpec& s);
FieldSpec field_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Aabb& b);
Aabb aabb_from_json(const nlohmann::json& j);

} // namespace mmrf::field
