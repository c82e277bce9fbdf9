// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/render/renderer.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/field/encoding.hpp"
#include "mmrf/render/sampling.hpp"

#include <algorithm>

namespace mmrf::render {

using diff::Matrix;
using diff::Tape;
using diff::Var;

namespace {

/// Places the rows of `part` ([H×3], one per hitting ray) into an [R×3] matrix
/// whose other rows hold `fill`.
Var expand_rows(Tape& tape, Var part, const std::vector<Eigen::Index>& rows, Eigen::Index total, const Vec3& fill)
{
    Matrix out(total, 3);
    out.rowwise() = fill.transpose();
    auto p = tape.value(part);
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(rows[i]) = p.row(static_cast<Eigen::Index>(i));
    return tape.record(std::move(out), {part}, [part, rows](Tape& tp, Var self) {
        if (!tp.requires_grad(part))
            return;
        auto g = tp.grad(self);
        auto gp = tp.grad(part);
        for (std::size_t i = 0; i < rows.size(); ++i)
            gp.row(static_cast<Eigen::Index>(i)) += g.row(rows[i]);
    });
}

PassOutput run_pass(Tape& tape, const field::RadianceModel& model, field::Stage stage, const RayBundle& bundle,
                    const std::vector<Eigen::Index>& hit, const Matrix& t, const Matrix& enc_per_ray,
                    const RenderOptions& options)
{
    const auto total = static_cast<Eigen::Index>(bundle.size());
    const auto n_hit = static_cast<Eigen::Index>(hit.size());
    const auto steps = t.cols();

    PassOutput pass;
    pass.t = Matrix::Zero(total, steps);
    pass.weights = Matrix::Zero(total, steps);
    pass.opacity.assign(bundle.size(), 0.0);
    pass.depth.assign(bundle.size(), 0.0);
    if (n_hit == 0) {
        Matrix rgb(total, 3);
        rgb.rowwise() = options.background.rgb.transpose();
        Matrix xs(total, 3);
        xs.rowwise() = options.background.xspec.transpose();
        pass.rgb = tape.constant(std::move(rgb));
        pass.xspec = tape.constant(std::move(xs));
        return pass;
    }

    Matrix points(n_hit * steps, 3);
    std::vector<double> far(static_cast<std::size_t>(n_hit));
    for (Eigen::Index h = 0; h < n_hit; ++h) {
        const auto& ray = bundle.rays[hit[h]];
        far[h] = ray.far;
        for (Eigen::Index i = 0; i < steps; ++i) {
            points.row(h * steps + i) = (ray.origin + t(h, i) * ray.direction).transpose();
        }
    }
    const auto heads = model.query(tape, stage, points, tape.constant(enc_per_ray), steps);

    Matrix weights;
    std::vector<double> opacity;
    std::vector<double> depth;
    Var rgb = composite_colors(tape, heads.sigma, heads.rgb, t, far, options.background.rgb, &weights, &opacity,
                               &depth);
    Var xspec = composite_colors(tape, heads.sigma, heads.xspec, t, far, options.background.xspec);

    for (Eigen::Index h = 0; h < n_hit; ++h) {
        pass.t.row(hit[h]) = t.row(h);
        pass.weights.row(hit[h]) = weights.row(h);
        pass.opacity[hit[h]] = opacity[h];
        pass.depth[hit[h]] = depth[h];
    }
    pass.rgb = expand_rows(tape, rgb, hit, total, options.background.rgb);
    pass.xspec = expand_rows(tape, xspec, hit, total, options.background.xspec);
    return pass;
}

} // namespace

RenderResult render_rays(Tape& tape, const field::RadianceModel& model, const RayBundle& bundle,
                         const RenderOptions& options, std::mt19937_64* rng)
{
    if (options.n_coarse < 1 || options.n_fine < 0)
        throw ContractError("render needs n_coarse >= 1 and n_fine >= 0");
    bundle.validate();

    std::vector<Eigen::Index> hit;
    for (std::size_t i = 0; i < bundle.size(); ++i)
        if (bundle.rays[i].hits)
            hit.push_back(static_cast<Eigen::Index>(i));
    const auto n_hit = static_cast<Eigen::Index>(hit.size());

    const int freqs = model.spec().heads.dir_frequencies;
    Matrix enc_per_ray(n_hit, field::encoded_width(freqs));
    for (Eigen::Index h = 0; h < n_hit; ++h) {
        const auto e = field::encode_direction(bundle.rays[hit[h]].direction, freqs);
        for (std::size_t c = 0; c < e.size(); ++c)
            enc_per_ray(h, static_cast<Eigen::Index>(c)) = e[c];
    }

    Matrix t_coarse(n_hit, options.n_coarse);
    for (Eigen::Index h = 0; h < n_hit; ++h) {
        const auto t = sample_coarse(bundle.rays[hit[h]], options.n_coarse, rng);
        for (int i = 0; i < options.n_coarse; ++i)
            t_coarse(h, i) = t[i];
    }

    RenderResult result;
    result.coarse = run_pass(tape, model, field::Stage::coarse, bundle, hit, t_coarse, enc_per_ray, options);

    const int n_all = options.n_coarse + options.n_fine;
    Matrix t_fine(n_hit, n_all);
    std::vector<double> w(static_cast<std::size_t>(options.n_coarse));
    for (Eigen::Index h = 0; h < n_hit; ++h) {
        const auto& ray = bundle.rays[hit[h]];
        for (int i = 0; i < options.n_coarse; ++i)
            w[i] = result.coarse.weights(hit[h], i);
        std::vector<double> coarse(t_coarse.row(h).data(), t_coarse.row(h).data() + options.n_coarse);
        std::vector<double> merged = coarse;
        if (options.n_fine > 0)
            merged = merge_samples(coarse, sample_fine(ray, w, options.n_fine, rng));
        for (int i = 0; i < n_all; ++i)
            t_fine(h, i) = merged[i];
    }
    result.fine = run_pass(tape, model, field::Stage::fine, bundle, hit, t_fine, enc_per_ray, options);
    return result;
}

RenderedImages render_image(const field::RadianceModel& model, const CameraModel& camera,
                            const RenderOptions& options)
{
    camera.validate();
    auto all = generate_all_rays(camera);
    clip_to_box(all, model.bounds(), options.min_near);

    RenderedImages img{ImageF(camera.width, camera.height, 3), ImageF(camera.width, camera.height, 3),
                       ImageF(camera.width, camera.height, 1), ImageF(camera.width, camera.height, 1)};
    auto& store = const_cast<diff::ParameterStore&>(model.store());
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.chunk));
    for (std::size_t start = 0; start < all.size(); start += chunk) {
        RayBundle part;
        const auto end = std::min(all.size(), start + chunk);
        part.rays.assign(all.rays.begin() + static_cast<std::ptrdiff_t>(start),
                         all.rays.begin() + static_cast<std::ptrdiff_t>(end));
        Tape tape(&store);
        tape.set_grad_enabled(false);
        const auto res = render_rays(tape, model, part, options, nullptr);
        auto rgb = tape.value(res.fine.rgb);
        auto xs = tape.value(res.fine.xspec);
        for (std::size_t i = 0; i < part.size(); ++i) {
            const auto p = start + i;
            for (int c = 0; c < 3; ++c) {
                img.rgb.data[p * 3 + c] = rgb(static_cast<Eigen::Index>(i), c);
                img.xspec.data[p * 3 + c] = xs(static_cast<Eigen::Index>(i), c);
            }
            img.opacity.data[p] = res.fine.opacity[i];
            img.depth.data[p] = res.fine.depth[i];
        }
    }
    return img;
}

} // namespace mmrf::render
