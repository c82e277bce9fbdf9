// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/mlp.hpp"
#include "mmrf/field/feature_field.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace mmrf::field {

enum class Stage { coarse, fine };

struct HeadsSpec {
    int dir_frequencies = 4;
    std::vector<int> hidden{64, 64, 64};
};

/// Everything needed to rebuild a model's parameter layout.
struct ModelSpec {
    FieldSpec coarse;
    FieldSpec fine;
    HeadsSpec heads;
    std::uint64_t seed = 0;
};

/// Per-point head outputs for a batch of N points.
struct HeadOutputs {
    Var sigma; ///< [N×1], >= 0, zero outside the box
    Var rgb;   ///< [N×3] in [0,1]
    Var xspec; ///< [N×3] in [0,1]
};

/// Single-point evaluation result.
struct HeadSample {
    Real sigma = 0.0;
    Vec3 rgb = Vec3::Zero();
    Vec3 xspec = Vec3::Zero();
};

/// Coarse/fine feature volumes plus three heads shared by both stages:
///
///   σ     = softplus(features · w + b)                 (1-layer density head)
///   rgb   = sigmoid(MLP_rgb([features, enc(dir)]))
///   xspec = sigmoid(MLP_xspec([features, enc(dir)]))
///
/// Both color heads read the same positional features of the selected stage.
class RadianceModel {
public:
    /// Fresh model with seeded initialization.
    explicit RadianceModel(const ModelSpec& spec);
    /// Rebinds to an existing store (checkpoint load). Takes ownership of `store`.
    RadianceModel(const ModelSpec& spec, ParameterStore store);

    RadianceModel(const RadianceModel&) = delete;
    RadianceModel& operator=(const RadianceModel&) = delete;
    RadianceModel(RadianceModel&&) = default;
    RadianceModel& operator=(RadianceModel&&) = default;

    const ModelSpec& spec() const { return spec_; }
    ParameterStore& store() { return store_; }
    const ParameterStore& store() const { return store_; }
    const FieldPair& fields() const { return fields_; }
    const FeatureField& field(Stage s) const { return s == Stage::coarse ? fields_.coarse : fields_.fine; }
    const diff::Mlp& density_head() const { return density_; }
    const diff::Mlp& rgb_head() const { return rgb_; }
    const diff::Mlp& xspec_head() const { return xspec_; }
    const Aabb& bounds() const { return spec_.coarse.bounds; }

    /// Differentiable batch query. `encoded_dirs` is [N/group × enc_width]
    /// (constant or tape-produced); each row serves `group` consecutive points.
    /// Points outside the box are clamped for feature lookup and get σ = 0.
    HeadOutputs query(Tape& tape, Stage stage, const Matrix& points, Var encoded_dirs,
                      Eigen::Index group = 1) const;

private:
    void build_heads(std::mt19937_64* rng);

    ModelSpec spec_;
    ParameterStore store_;
    FieldPair fields_;
    diff::Mlp density_;
    diff::Mlp rgb_;
    diff::Mlp xspec_;
};

/// Plain single-point query of the heads (σ, rgb, xspec).
HeadSample query_heads(const RadianceModel& model, const Vec3& point, const Vec3& direction, Stage stage);

nlohmann::json to_json(const ModelSpec& s);
ModelSpec model_spec_from_json(const nlohmann::json& j);

} // namespace mmrf::field
