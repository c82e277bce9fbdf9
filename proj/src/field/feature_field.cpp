// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/field/feature_field.hpp"

#include "mmrf/core/error.hpp"

#include <cmath>

namespace mmrf::field {

namespace {

const char* kAxisName[3] = {"x", "y", "z"};

void check_spec(const FieldSpec& s)
{
    for (int a = 0; a < 3; ++a) {
        if (s.resolution[a] < 1)
            throw ContractError("field resolution must be >= 1 on every axis");
        if (!(s.bounds.max[a] > s.bounds.min[a]))
            throw ContractError("field bounds are empty along axis " + std::string(kAxisName[a]));
    }
    if (s.channels < 1)
        throw ContractError("field needs at least one channel");
    if (s.storage == Storage::cp && s.rank < 1)
        throw ContractError("CP field needs rank >= 1");
}

} // namespace

FeatureField::FeatureField(ParameterStore& store, const std::string& name, FieldSpec spec, std::mt19937_64& rng)
    : spec_(std::move(spec))
{
    check_spec(spec_);
    const auto c = static_cast<std::size_t>(spec_.channels);
    if (spec_.storage == Storage::dense) {
        std::uniform_real_distribution<Real> dist(-spec_.init_scale, spec_.init_scale);
        std::vector<Real> init(spec_.voxel_count() * c);
        for (auto& v : init)
            v = spec_.init_scale > 0 ? dist(rng) : 0.0;
        grid_ = store.add(name + ".grid", {spec_.voxel_count(), c}, std::move(init), "field");
    } else {
        const Real a = std::cbrt(spec_.init_scale);
        std::uniform_real_distribution<Real> dist(-a, a);
        for (int axis = 0; axis < 3; ++axis) {
            const auto n = static_cast<std::size_t>(spec_.resolution[axis]);
            std::vector<Real> init(c * spec_.rank * n);
            for (auto& v : init)
                v = a > 0 ? dist(rng) : 0.0;
            factors_[axis] = store.add(name + ".cp_" + kAxisName[axis], {c * spec_.rank, n}, std::move(init),
                                       "field");
        }
    }
}

FeatureField FeatureField::attach(const ParameterStore& store, const std::string& name, FieldSpec spec)
{
    check_spec(spec);
    FeatureField f;
    f.spec_ = std::move(spec);
    const auto c = static_cast<std::size_t>(f.spec_.channels);
    if (f.spec_.storage == Storage::dense) {
        f.grid_ = store.at(name + ".grid");
        if (store.rows(f.grid_) != f.spec_.voxel_count() || store.cols(f.grid_) != c)
            throw ContractError("parameter '" + name + ".grid' does not match the field spec");
    } else {
        for (int axis = 0; axis < 3; ++axis) {
            f.factors_[axis] = store.at(name + ".cp_" + kAxisName[axis]);
            if (store.rows(f.factors_[axis]) != c * f.spec_.rank ||
                store.cols(f.factors_[axis]) != static_cast<std::size_t>(f.spec_.resolution[axis]))
                throw ContractError("CP factor for axis " + std::string(kAxisName[axis]) +
                                    " does not match the field spec");
        }
    }
    return f;
}

Vec3 FeatureField::voxel_center(int i, int j, int k) const
{
    const Vec3 idx(i + 0.5, j + 0.5, k + 0.5);
    const Vec3 res(spec_.resolution[0], spec_.resolution[1], spec_.resolution[2]);
    return spec_.bounds.min + spec_.bounds.extent().cwiseProduct(idx.cwiseQuotient(res));
}

std::size_t FeatureField::voxel_index(int i, int j, int k) const
{
    return (static_cast<std::size_t>(k) * spec_.resolution[1] + j) * spec_.resolution[0] + i;
}

std::array<AxisTaps, 3> FeatureField::axis_taps(const Vec3& p) const
{
    std::array<AxisTaps, 3> taps;
    for (int a = 0; a < 3; ++a) {
        const int res = spec_.resolution[a];
        auto& t = taps[a];
        if (res == 1) {
            t.index = {0, 0};
            t.weight = {1.0, 0.0};
            continue;
        }
        Real u = (p[a] - spec_.bounds.min[a]) / (spec_.bounds.max[a] - spec_.bounds.min[a]) * res - 0.5;
        u = std::clamp(u, Real(0), Real(res - 1));
        int i0 = static_cast<int>(std::floor(u));
        i0 = std::min(i0, res - 2);
        const Real f = u - i0;
        t.index = {i0, i0 + 1};
        t.weight = {1.0 - f, f};
    }
    return taps;
}

Stencil FeatureField::stencil(const Vec3& p) const
{
    const auto taps = axis_taps(p);
    Stencil s;
    int n = 0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                s.voxel[n] = voxel_index(taps[0].index[dx], taps[1].index[dy], taps[2].index[dz]);
                s.weight[n] = taps[0].weight[dx] * taps[1].weight[dy] * taps[2].weight[dz];
                ++n;
            }
    return s;
}

std::vector<Real> FeatureField::sample(const ParameterStore& store, const Vec3& p, bool strict) const
{
    if (!p.allFinite())
        throw NonFiniteError("field query point is not finite");
    if (strict && !spec_.bounds.contains(p))
        throw OutOfBoundsError("field query point outside the bounding box");
    const auto c = static_cast<std::size_t>(spec_.channels);
    std::vector<Real> out(c, 0.0);
    if (spec_.storage == Storage::dense) {
        const auto s = stencil(p);
        const auto grid = store.value(grid_);
        for (int n = 0; n < 8; ++n)
            for (std::size_t ch = 0; ch < c; ++ch)
                out[ch] += s.weight[n] * grid[s.voxel[n] * c + ch];
        return out;
    }
    const auto taps = axis_taps(p);
    const auto rank = static_cast<std::size_t>(spec_.rank);
    std::array<std::span<const Real>, 3> fac{store.value(factors_[0]), store.value(factors_[1]),
                                             store.value(factors_[2])};
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t r = 0; r < rank; ++r) {
            Real prod = 1.0;
            for (int a = 0; a < 3; ++a) {
                const auto row = (ch * rank + r) * spec_.resolution[a];
                prod *= taps[a].weight[0] * fac[a][row + taps[a].index[0]] +
                        taps[a].weight[1] * fac[a][row + taps[a].index[1]];
            }
            out[ch] += prod;
        }
    }
    return out;
}

Var FeatureField::sample(Tape& tape, const Matrix& points) const
{
    if (points.cols() != 3)
        throw ContractError("field sampling expects points as an N×3 matrix");
    if (!points.allFinite())
        throw NonFiniteError("field query points contain a non-finite value");
    return spec_.storage == Storage::dense ? sample_dense(tape, points) : sample_cp(tape, points);
}

Var FeatureField::sample_dense(Tape& tape, const Matrix& points) const
{
    auto* store = tape.params();
    if (store == nullptr)
        throw ContractError("field sampling needs a tape bound to a parameter store");
    const auto n = points.rows();
    const auto c = spec_.channels;
    auto stencils = std::make_shared<std::vector<Stencil>>(static_cast<std::size_t>(n));
    Matrix out = Matrix::Zero(n, c);
    const Real* grid = store->value(grid_).data();
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto s = stencil(points.row(r).transpose());
        (*stencils)[r] = s;
        Real* o = out.data() + r * c;
        for (int k = 0; k < 8; ++k) {
            const Real w = s.weight[k];
            const Real* v = grid + s.voxel[k] * c;
            for (int ch = 0; ch < c; ++ch)
                o[ch] += w * v[ch];
        }
    }
    Var grid_var = tape.parameter(grid_);
    return tape.record(std::move(out), {grid_var}, [grid_var, stencils, c](Tape& tp, Var self) {
        auto g = tp.grad(self);
        Real* gg = tp.grad(grid_var).data();
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const auto& s = (*stencils)[r];
            const Real* gr = g.data() + r * c;
            for (int k = 0; k < 8; ++k) {
                const Real w = s.weight[k];
                Real* dst = gg + s.voxel[k] * c;
                for (int ch = 0; ch < c; ++ch)
                    dst[ch] += w * gr[ch];
            }
        }
    });
}

Var FeatureField::sample_cp(Tape& tape, const Matrix& points) const
{
    auto* store = tape.params();
    if (store == nullptr)
        throw ContractError("field sampling needs a tape bound to a parameter store");
    const auto n = points.rows();
    const int c = spec_.channels;
    const int rank = spec_.rank;
    const auto res = spec_.resolution;
    auto taps = std::make_shared<std::vector<std::array<AxisTaps, 3>>>(static_cast<std::size_t>(n));
    Matrix out = Matrix::Zero(n, c);
    std::array<const Real*, 3> fac{store->value(factors_[0]).data(), store->value(factors_[1]).data(),
                                   store->value(factors_[2]).data()};
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto t = axis_taps(points.row(r).transpose());
        (*taps)[r] = t;
        for (int ch = 0; ch < c; ++ch) {
            Real acc = 0.0;
            for (int q = 0; q < rank; ++q) {
                Real prod = 1.0;
                for (int a = 0; a < 3; ++a) {
                    const Real* row = fac[a] + static_cast<std::size_t>(ch * rank + q) * res[a];
                    prod *= t[a].weight[0] * row[t[a].index[0]] + t[a].weight[1] * row[t[a].index[1]];
                }
                acc += prod;
            }
            out(r, ch) = acc;
        }
    }
    std::array<Var, 3> vars{tape.parameter(factors_[0]), tape.parameter(factors_[1]), tape.parameter(factors_[2])};
    return tape.record(std::move(out), {vars[0], vars[1], vars[2]}, [vars, taps, c, rank, res](Tape& tp, Var self) {
        auto g = tp.grad(self);
        std::array<const Real*, 3> val{tp.value(vars[0]).data(), tp.value(vars[1]).data(), tp.value(vars[2]).data()};
        std::array<Real*, 3> grd{tp.grad(vars[0]).data(), tp.grad(vars[1]).data(), tp.grad(vars[2]).data()};
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const auto& t = (*taps)[r];
            for (int ch = 0; ch < c; ++ch) {
                const Real gc = g(r, ch);
                if (gc == 0.0)
                    continue;
                for (int q = 0; q < rank; ++q) {
                    std::array<Real, 3> f{};
                    for (int a = 0; a < 3; ++a) {
                        const Real* row = val[a] + static_cast<std::size_t>(ch * rank + q) * res[a];
                        f[a] = t[a].weight[0] * row[t[a].index[0]] + t[a].weight[1] * row[t[a].index[1]];
                    }
                    for (int a = 0; a < 3; ++a) {
                        const Real others = f[(a + 1) % 3] * f[(a + 2) % 3] * gc;
                        Real* row = grd[a] + static_cast<std::size_t>(ch * rank + q) * res[a];
                        row[t[a].index[0]] += t[a].weight[0] * others;
                        row[t[a].index[1]] += t[a].weight[1] * others;
                    }
                }
            }
        }
    });
}

std::vector<Real> FeatureField::materialize_dense(const ParameterStore& store) const
{
    const auto c = static_cast<std::size_t>(spec_.channels);
    std::vector<Real> out(spec_.voxel_count() * c);
    for (int k = 0; k < spec_.resolution[2]; ++k)
        for (int j = 0; j < spec_.resolution[1]; ++j)
            for (int i = 0; i < spec_.resolution[0]; ++i) {
                const auto f = sample(store, voxel_center(i, j, k));
                std::copy(f.begin(), f.end(), out.begin() + voxel_index(i, j, k) * c);
            }
    return out;
}

void FieldPair::validate() const
{
    const auto& a = coarse.spec();
    const auto& b = fine.spec();
    if (a.bounds.min != b.bounds.min || a.bounds.max != b.bounds.max)
        throw ContractError("coarse and fine fields must share one bounding box");
    for (int ax = 0; ax < 3; ++ax)
        if (b.resolution[ax] < a.resolution[ax])
            throw ContractError("fine field resolution must be >= coarse resolution on every axis");
}

std::array<int, 3> cube_resolution_for(std::size_t voxel_count)
{
    if (voxel_count < 1)
        throw ContractError("voxel budget must be positive");
    auto r = static_cast<std::size_t>(std::cbrt(static_cast<double>(voxel_count)));
    while ((r + 1) * (r + 1) * (r + 1) <= voxel_count)
        ++r;
    while (r > 1 && r * r * r > voxel_count)
        --r;
    const int ri = static_cast<int>(r);
    return {ri, ri, ri};
}

nlohmann::json to_json(const Aabb& b)
{
    return {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

Aabb aabb_from_json(const nlohmann::json& j)
{
    Aabb b;
    const auto mn = j.at("min").get<std::array<double, 3>>();
    const auto mx = j.at("max").get<std::array<double, 3>>();
    b.min = Vec3(mn[0], mn[1], mn[2]);
    b.max = Vec3(mx[0], mx[1], mx[2]);
    return b;
}

nlohmann::json to_json(const FieldSpec& s)
{
    return {{"bounds", to_json(s.bounds)},
            {"resolution", s.resolution},
            {"channels", s.channels},
            {"storage", s.storage == Storage::dense ? "dense" : "cp"},
            {"rank", s.rank},
            {"init_scale", s.init_scale}};
}

FieldSpec field_spec_from_json(const nlohmann::json& j)
{
    FieldSpec s;
    s.bounds = aabb_from_json(j.at("bounds"));
    s.resolution = j.at("resolution").get<std::array<int, 3>>();
    s.channels = j.at("channels").get<int>();
    const auto storage = j.at("storage").get<std::string>();
    if (storage == "dense")
        s.storage = Storage::dense;
    else if (storage == "cp")
        s.storage = Storage::cp;
    else
        throw FormatError("unknown field storage '" + storage + "'");
    s.rank = j.at("rank").get<int>();
    s.init_scale = j.at("init_scale").get<Real>();
    return s;
}

} // namespace mmrf::field
