// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/field/model.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/field/encoding.hpp"

namespace mmrf::field {

namespace {

diff::MlpSpec density_spec(int channels)
{
    return {channels, {}, 1, diff::Activation::relu, diff::Activation::softplus};
}

diff::MlpSpec color_spec(int channels, const HeadsSpec& h)
{
    return {channels + encoded_width(h.dir_frequencies), h.hidden, 3, diff::Activation::relu,
            diff::Activation::sigmoid};
}

void check_spec(const ModelSpec& s)
{
    if (s.coarse.channels != s.fine.channels)
        throw ContractError("coarse and fine fields must have the same channel count");
    if (s.heads.dir_frequencies < 0)
        throw ContractError("direction frequency count must be >= 0");
}

} // namespace

RadianceModel::RadianceModel(const ModelSpec& spec) : spec_(spec)
{
    check_spec(spec_);
    std::mt19937_64 rng(spec_.seed);
    fields_.coarse = FeatureField(store_, "coarse", spec_.coarse, rng);
    fields_.fine = FeatureField(store_, "fine", spec_.fine, rng);
    fields_.validate();
    build_heads(&rng);
}

RadianceModel::RadianceModel(const ModelSpec& spec, ParameterStore store) : spec_(spec), store_(std::move(store))
{
    check_spec(spec_);
    fields_.coarse = FeatureField::attach(store_, "coarse", spec_.coarse);
    fields_.fine = FeatureField::attach(store_, "fine", spec_.fine);
    fields_.validate();
    build_heads(nullptr);
}

void RadianceModel::build_heads(std::mt19937_64* rng)
{
    const int c = spec_.coarse.channels;
    if (rng != nullptr) {
        density_ = diff::Mlp(store_, "density", density_spec(c), *rng);
        rgb_ = diff::Mlp(store_, "rgb", color_spec(c, spec_.heads), *rng);
        xspec_ = diff::Mlp(store_, "xspec", color_spec(c, spec_.heads), *rng);
    } else {
        density_ = diff::Mlp::attach(store_, "density", density_spec(c));
        rgb_ = diff::Mlp::attach(store_, "rgb", color_spec(c, spec_.heads));
        xspec_ = diff::Mlp::attach(store_, "xspec", color_spec(c, spec_.heads));
    }
}

HeadOutputs RadianceModel::query(Tape& tape, Stage stage, const Matrix& points, Var encoded_dirs,
                                 Eigen::Index group) const
{
    if (tape.params() != &store_)
        throw ContractError("tape is not bound to this model's parameter store");
    if (group < 1 || tape.rows(encoded_dirs) * group != points.rows())
        throw ContractError("point and direction batches differ in size");
    const auto& f = field(stage);
    Var features = f.sample(tape, points);
    HeadOutputs out;
    out.sigma = density_.forward(tape, features);

    Matrix mask(points.rows(), 1);
    bool any_outside = false;
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        const bool inside = bounds().contains(points.row(r).transpose());
        mask(r, 0) = inside ? 1.0 : 0.0;
        any_outside = any_outside || !inside;
    }
    if (any_outside)
        out.sigma = diff::mul(tape, out.sigma, tape.constant(std::move(mask)));

    out.rgb = rgb_.forward(tape, features, encoded_dirs, group);
    out.xspec = xspec_.forward(tape, features, encoded_dirs, group);
    return out;
}

HeadSample query_heads(const RadianceModel& model, const Vec3& point, const Vec3& direction, Stage stage)
{
    // The tape only reads from the store here; no backward pass is run.
    auto& store = const_cast<ParameterStore&>(model.store());
    Tape tape(&store);
    const auto enc = encode_direction(direction, model.spec().heads.dir_frequencies);
    Matrix enc_m(1, static_cast<Eigen::Index>(enc.size()));
    for (std::size_t i = 0; i < enc.size(); ++i)
        enc_m(0, static_cast<Eigen::Index>(i)) = enc[i];
    Matrix p(1, 3);
    p << point.x(), point.y(), point.z();
    const auto out = model.query(tape, stage, p, tape.constant(std::move(enc_m)));
    HeadSample s;
    s.sigma = tape.value(out.sigma)(0, 0);
    s.rgb = tape.value(out.rgb).row(0).transpose();
    s.xspec = tape.value(out.xspec).row(0).transpose();
    return s;
}

nlohmann::json to_json(const ModelSpec& s)
{
    return {{"coarse", to_json(s.coarse)},
            {"fine", to_json(s.fine)},
            {"heads", {{"dir_frequencies", s.heads.dir_frequencies}, {"hidden", s.heads.hidden}}},
            {"seed", s.seed}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j)
{
    ModelSpec s;
    s.coarse = field_spec_from_json(j.at("coarse"));
    s.fine = field_spec_from_json(j.at("fine"));
    s.heads.dir_frequencies = j.at("heads").at("dir_frequencies").get<int>();
    s.heads.hidden = j.at("heads").at("hidden").get<std::vector<int>>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

} // namespace mmrf::field
