// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/render/composite.hpp"

#include "mmrf/core/error.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace mmrf::render {

using diff::Matrix;
using diff::Real;
using diff::Tape;
using diff::Var;

namespace {

// Rounding in T·α can push the running opacity an ulp past 1; the last
// weight is trimmed so that Σw stays within [0, 1].
double capped_weight(double w, double opacity)
{
    return opacity + w > 1.0 ? 1.0 - opacity : w;
}

} // namespace

RenderedRay composite(std::span<const CompositeSample> samples, double far, const Background& background)
{
    RenderedRay out;
    out.weights.resize(samples.size(), 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].sigma >= 0))
            throw ContractError("negative or NaN density at sample " + std::to_string(i));
        if (i > 0 && !(samples[i].t > samples[i - 1].t))
            throw ContractError("sample positions are not strictly increasing at index " + std::to_string(i));
    }
    if (!samples.empty() && samples.back().t > far)
        throw ContractError("last sample lies beyond the far bound");

    double transmittance = 1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double delta = (i + 1 < samples.size() ? samples[i + 1].t : far) - samples[i].t;
        const double alpha = -std::expm1(-samples[i].sigma * delta);
        const double w = capped_weight(transmittance * alpha, out.opacity);
        out.weights[i] = w;
        out.rgb += w * samples[i].rgb;
        out.xspec += w * samples[i].xspec;
        out.depth += w * samples[i].t;
        out.opacity += w;
        transmittance *= 1.0 - alpha;
    }
    out.rgb += transmittance * background.rgb;
    out.xspec += transmittance * background.xspec;
    return out;
}

Var composite_colors(Tape& tape, Var sigma, Var colors, const Matrix& t, std::span<const double> far,
                     const Vec3& background, Matrix* weights_out, std::vector<double>* opacity_out,
                     std::vector<double>* depth_out)
{
    const auto rays = t.rows();
    const auto steps = t.cols();
    if (tape.rows(sigma) != rays * steps || tape.cols(sigma) != 1)
        throw ContractError("composite: sigma must be [R*S x 1]");
    if (tape.rows(colors) != rays * steps || tape.cols(colors) != 3)
        throw ContractError("composite: colors must be [R*S x 3]");
    if (static_cast<Eigen::Index>(far.size()) != rays)
        throw ContractError("composite: need one far bound per ray");

    auto deltas = std::make_shared<Matrix>(rays, steps);
    for (Eigen::Index r = 0; r < rays; ++r)
        for (Eigen::Index i = 0; i < steps; ++i) {
            const double next = i + 1 < steps ? t(r, i + 1) : far[r];
            const double d = next - t(r, i);
            if (d < 0)
                throw ContractError("composite: samples of ray " + std::to_string(r) + " are not sorted");
            (*deltas)(r, i) = d;
        }

    auto sig = tape.value(sigma);
    auto col = tape.value(colors);
    Matrix out(rays, 3);
    Matrix weights(rays, steps);
    if (opacity_out)
        opacity_out->assign(rays, 0.0);
    if (depth_out)
        depth_out->assign(rays, 0.0);
    for (Eigen::Index r = 0; r < rays; ++r) {
        Real trans = 1.0;
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        Real op = 0.0;
        Real depth = 0.0;
        for (Eigen::Index i = 0; i < steps; ++i) {
            const auto k = r * steps + i;
            const Real s = sig(k, 0);
            if (!(s >= 0))
                throw ContractError("composite: negative or NaN density");
            const Real alpha = -std::expm1(-s * (*deltas)(r, i));
            const Real w = capped_weight(trans * alpha, op);
            weights(r, i) = w;
            c += w * col.row(k).transpose();
            op += w;
            depth += w * t(r, i);
            trans *= 1.0 - alpha;
        }
        c += trans * background;
        out.row(r) = c.transpose();
        if (opacity_out)
            (*opacity_out)[r] = op;
        if (depth_out)
            (*depth_out)[r] = depth;
    }
    if (weights_out)
        *weights_out = weights;

    return tape.record(std::move(out), {sigma, colors}, [sigma, colors, deltas, background](Tape& tp, Var self) {
        auto g = tp.grad(self);
        auto sv = tp.value(sigma);
        auto cv = tp.value(colors);
        const auto nr = deltas->rows();
        const auto ns = deltas->cols();
        const bool want_sigma = tp.requires_grad(sigma);
        const bool want_colors = tp.requires_grad(colors);
        std::vector<Real> w(ns), trans_after(ns), proj(ns);
        for (Eigen::Index r = 0; r < nr; ++r) {
            const Eigen::Vector3d gr = g.row(r).transpose();
            Real trans = 1.0;
            for (Eigen::Index i = 0; i < ns; ++i) {
                const auto k = r * ns + i;
                const Real e = std::exp(-sv(k, 0) * (*deltas)(r, i));
                w[i] = trans * (1.0 - e);
                trans *= e;
                trans_after[i] = trans;
                proj[i] = cv.row(k).dot(gr);
            }
            if (want_colors) {
                auto gc = tp.grad(colors);
                for (Eigen::Index i = 0; i < ns; ++i)
                    gc.row(r * ns + i) += w[i] * gr.transpose();
            }
            if (want_sigma) {
                auto gs = tp.grad(sigma);
                const Real bg_term = trans * background.dot(gr);
                Real suffix = 0.0; // Σ_{i>k} w_i (c_i·g)
                for (Eigen::Index i = ns; i-- > 0;) {
                    gs(r * ns + i, 0) += (*deltas)(r, i) * (trans_after[i] * proj[i] - suffix - bg_term);
                    suffix += w[i] * proj[i];
                }
            }
        }
    });
}

} // namespace mmrf::render
