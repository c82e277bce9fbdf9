// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "support/gradcheck.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/render/camera.hpp"
#include "mmrf/render/composite.hpp"
#include "mmrf/render/renderer.hpp"
#include "mmrf/render/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace mmrf::render {
namespace {

using diff::Matrix;
using diff::Tape;

CameraModel test_camera()
{
    CameraModel c;
    c.width = 8;
    c.height = 6;
    c.fx = 10;
    c.fy = 12;
    c.cx = 4;
    c.cy = 3;
    return c;
}

TEST(Camera, PrincipalAxisOfIdentityPose)
{
    const auto c = test_camera();
    const PixelCoord px{c.cx - 0.5, c.cy - 0.5};
    const auto b = generate_rays(c, std::span(&px, 1));
    ASSERT_EQ(b.size(), 1u);
    EXPECT_LT((b.rays[0].direction - Vec3(0, 0, -1)).norm(), 1e-15);
    EXPECT_EQ(b.rays[0].origin, Vec3::Zero());
}

TEST(Camera, TranslationShiftsOriginsOnly)
{
    auto c = test_camera();
    const auto a = generate_all_rays(c);
    c.pose.topRightCorner<3, 1>() = Vec3(1, -2, 3);
    const auto b = generate_all_rays(c, 4);
    ASSERT_EQ(a.size(), 48u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.rays[i].direction, b.rays[i].direction);
        EXPECT_EQ(b.rays[i].origin, Vec3(1, -2, 3));
        EXPECT_EQ(b.rays[i].frame, 4);
    }
}

TEST(Camera, YawedPoseRotatesPrincipalAxis)
{
    auto c = test_camera();
    // 90° about +y: camera -z maps to world -x.
    c.pose.topLeftCorner<3, 3>() << 0, 0, 1, 0, 1, 0, -1, 0, 0;
    EXPECT_NO_THROW(c.validate());
    const PixelCoord px{c.cx - 0.5, c.cy - 0.5};
    const auto b = generate_rays(c, std::span(&px, 1));
    EXPECT_LT((b.rays[0].direction - Vec3(-1, 0, 0)).norm(), 1e-15);
}

TEST(Camera, DirectionFormula)
{
    const auto c = test_camera();
    const PixelCoord px{2, 5};
    const auto r = generate_rays(c, std::span(&px, 1)).rays[0];
    const Vec3 d = Vec3((2 + 0.5 - 4) / 10.0, -(5 + 0.5 - 3) / 12.0, -1).normalized();
    EXPECT_LT((r.direction - d).norm(), 1e-15);
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-15);
}

TEST(Camera, RejectsOutOfImagePixelsAndBadPoses)
{
    auto c = test_camera();
    const PixelCoord bad{8, 0};
    EXPECT_THROW(generate_rays(c, std::span(&bad, 1)), ContractError);
    c.pose(0, 0) = -1; // determinant −1
    EXPECT_THROW(c.validate(), ContractError);
    c = test_camera();
    c.pose(0, 1) = 0.01;
    EXPECT_THROW(c.validate(), ContractError);
    c = test_camera();
    c.cx = 8;
    EXPECT_THROW(c.validate(), ContractError);
    c = test_camera();
    c.fy = 0;
    EXPECT_THROW(c.validate(), ContractError);
}

TEST(Camera, ScaledKeepsFieldOfView)
{
    auto c = test_camera();
    c.pose = look_at(Vec3(1, 2, 3), Vec3::Zero());
    const auto s = c.scaled(2.0);
    EXPECT_EQ(s.width * s.height, 4 * c.width * c.height);
    // The centre of pixel (0, 0) in c lies at (1, 1) in s, i.e. PixelCoord (0.5, 0.5).
    const PixelCoord pc{0, 0};
    const PixelCoord pc2{0.5, 0.5};
    const Vec3 d1 = generate_rays(c, std::span(&pc, 1)).rays[0].direction;
    const Vec3 d2 = generate_rays(s, std::span(&pc2, 1)).rays[0].direction;
    EXPECT_LT((d1 - d2).norm(), 1e-14);
}

TEST(Camera, LookAtIsRigidAndAimed)
{
    const Vec3 eye(3, 1, -2);
    const auto pose = look_at(eye, Vec3(0.5, 0, 0));
    EXPECT_TRUE(is_rotation(pose.topLeftCorner<3, 3>()));
    const Vec3 forward = -pose.block<3, 1>(0, 2);
    EXPECT_LT((forward - (Vec3(0.5, 0, 0) - eye).normalized()).norm(), 1e-15);
    EXPECT_THROW(look_at(Vec3(0, 2, 0), Vec3::Zero()), ContractError);
}

TEST(Camera, ClipMarksMissingRays)
{
    RayBundle b;
    Ray hit;
    hit.origin = Vec3(0, 0, 5);
    hit.direction = Vec3(0, 0, -1);
    Ray miss = hit;
    miss.direction = Vec3(0, 1, 0);
    Ray behind = hit;
    behind.direction = Vec3(0, 0, 1);
    b.rays = {hit, miss, behind};
    clip_to_box(b, Aabb{}, 0.0);
    EXPECT_TRUE(b.rays[0].hits);
    EXPECT_DOUBLE_EQ(b.rays[0].near, 4.0);
    EXPECT_DOUBLE_EQ(b.rays[0].far, 6.0);
    EXPECT_FALSE(b.rays[1].hits);
    EXPECT_FALSE(b.rays[2].hits);
    EXPECT_NO_THROW(b.validate());
}

TEST(Camera, JsonRoundTrip)
{
    auto c = test_camera();
    c.pose = look_at(Vec3(1, 2, 3), Vec3(0, 0.1, 0));
    const auto r = camera_from_json(to_json(c));
    EXPECT_EQ(r.pose, c.pose);
    EXPECT_EQ(r.fx, c.fx);
    EXPECT_EQ(r.cy, c.cy);
    EXPECT_EQ(r.width, c.width);
}

TEST(Sampling, CoarseMidpoints)
{
    EXPECT_EQ(sample_coarse(0.0, 2.0, 2), (std::vector<double>{0.5, 1.5}));
}

TEST(Sampling, CoarseJitterStaysInBins)
{
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        const int n = 1 + k % 70;
        const auto t = sample_coarse(1.0, 4.0, n, &rng);
        ASSERT_EQ(t.size(), static_cast<std::size_t>(n));
        const double bin = 3.0 / n;
        for (int i = 0; i < n; ++i) {
            EXPECT_GE(t[i], 1.0 + i * bin);
            EXPECT_LE(t[i], 1.0 + (i + 1) * bin);
            if (i > 0)
                EXPECT_GT(t[i], t[i - 1]);
        }
    }
    const auto t = sample_coarse(0.5, 7.0, 64);
    for (int i = 1; i < 64; ++i)
        EXPECT_GT(t[i], t[i - 1]);
    EXPECT_GE(t.front(), 0.5);
    EXPECT_LE(t.back(), 7.0);
}

TEST(Sampling, FineDeltaPdf)
{
    std::mt19937_64 rng(2);
    std::vector<double> w(16, 0.0);
    w[5] = 3.0;
    const double bin = 8.0 / 16;
    for (auto* r : {&rng, static_cast<std::mt19937_64*>(nullptr)}) {
        const auto t = sample_fine(0.0, 8.0, w, 200, r);
        ASSERT_EQ(t.size(), 200u);
        for (double v : t) {
            EXPECT_GE(v, 5 * bin);
            EXPECT_LE(v, 6 * bin);
        }
        EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
    }
}

TEST(Sampling, FineUniformWeightsPassChiSquare)
{
    std::mt19937_64 rng(3);
    const int bins = 32;
    const int draws = 100000;
    const std::vector<double> w(bins, 0.7);
    const auto t = sample_fine(2.0, 6.0, w, draws, &rng);
    std::vector<int> count(bins, 0);
    for (double v : t)
        ++count[std::min(bins - 1, static_cast<int>((v - 2.0) / 4.0 * bins))];
    const double expected = static_cast<double>(draws) / bins;
    double chi2 = 0;
    for (int c : count)
        chi2 += (c - expected) * (c - expected) / expected;
    const double df = bins - 1;
    EXPECT_LT(chi2, df + 3 * std::sqrt(2 * df));
}

TEST(Sampling, FineZeroWeightsFallBackToStratified)
{
    const std::vector<double> w(8, 0.0);
    EXPECT_EQ(sample_fine(1.0, 3.0, w, 5), sample_coarse(1.0, 3.0, 5));
    std::mt19937_64 rng(4);
    const auto t = sample_fine(1.0, 3.0, w, 5, &rng);
    for (int i = 0; i < 5; ++i) {
        EXPECT_GE(t[i], 1.0 + i * 0.4);
        EXPECT_LE(t[i], 1.0 + (i + 1) * 0.4);
    }
}

TEST(Sampling, FineRejectsNegativeWeights)
{
    const std::vector<double> w{1.0, -0.1, 2.0};
    EXPECT_THROW(sample_fine(0.0, 1.0, w, 4), ContractError);
    const std::vector<double> nan{1.0, std::nan(""), 2.0};
    EXPECT_THROW(sample_fine(0.0, 1.0, nan, 4), ContractError);
}

TEST(Sampling, MergeIsSortedUnion)
{
    const std::vector<double> a{0.1, 0.5, 0.9};
    const std::vector<double> b{0.2, 0.5, 1.0};
    EXPECT_EQ(merge_samples(a, b), (std::vector<double>{0.1, 0.2, 0.5, 0.5, 0.9, 1.0}));
}

TEST(Composite, EmptyMediumShowsBackground)
{
    std::vector<CompositeSample> s(4);
    for (int i = 0; i < 4; ++i) {
        s[i].t = i;
        s[i].rgb = Vec3(1, 0, 0);
    }
    const Background bg{Vec3(0.1, 0.2, 0.3), Vec3(0.4, 0.5, 0.6)};
    const auto r = composite(s, 5.0, bg);
    EXPECT_EQ(r.opacity, 0.0);
    EXPECT_EQ(r.rgb, bg.rgb);
    EXPECT_EQ(r.xspec, bg.xspec);
}

TEST(Composite, OpaqueSampleTakesItsColor)
{
    std::vector<CompositeSample> s(1);
    s[0].t = 1.0;
    s[0].sigma = 1e6;
    s[0].rgb = Vec3(0.2, 0.4, 0.6);
    s[0].xspec = Vec3(0.9, 0.8, 0.7);
    const auto r = composite(s, 2.0, Background{Vec3::Ones(), Vec3::Ones()});
    EXPECT_EQ(r.opacity, 1.0);
    EXPECT_LT((r.rgb - s[0].rgb).norm(), 1e-15);
    EXPECT_LT((r.xspec - s[0].xspec).norm(), 1e-15);
    EXPECT_DOUBLE_EQ(r.depth, 1.0);
}

TEST(Composite, TwoSampleHandExpansion)
{
    // α = (0.5, 1): σ₁δ₁ = ln 2, σ₂δ₂ large enough that exp underflows to 0.
    std::vector<CompositeSample> s(2);
    s[0] = {0.0, std::log(2.0), Vec3(1, 0, 0), Vec3::Zero()};
    s[1] = {1.0, 1e3, Vec3(0, 1, 0), Vec3::Zero()};
    const auto r = composite(s, 2.0, Background{});
    ASSERT_EQ(r.weights.size(), 2u);
    EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
    EXPECT_NEAR(r.weights[1], 0.5, 1e-15);
    EXPECT_NEAR(r.rgb[0], 0.5, 1e-15);
    EXPECT_NEAR(r.rgb[1], 0.5, 1e-15);
    EXPECT_EQ(r.rgb[2], 0.0);
    EXPECT_NEAR(r.opacity, 1.0, 1e-15);
}

TEST(Composite, RejectsBadInput)
{
    std::vector<CompositeSample> s(2);
    s[0].t = 1.0;
    s[1].t = 0.5;
    EXPECT_THROW(composite(s, 2.0, {}), ContractError);
    s[1].t = 1.0;
    EXPECT_THROW(composite(s, 2.0, {}), ContractError);
    s[1].t = 1.5;
    s[0].sigma = -1e-9;
    EXPECT_THROW(composite(s, 2.0, {}), ContractError);
    s[0].sigma = 0;
    EXPECT_THROW(composite(s, 1.2, {}), ContractError);
    EXPECT_NO_THROW(composite(s, 2.0, {}));
}

/// Random ray for the weight laws: sorted positions, mixed-scale densities.
std::vector<CompositeSample> random_ray(std::mt19937_64& rng, int n, double& far)
{
    auto ts = testing::random_values(rng, n, 0.0, 5.0);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<CompositeSample> s(ts.size());
    std::uniform_real_distribution<double> logsig(-4, 3);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        s[i].t = ts[i];
        s[i].sigma = std::pow(10.0, logsig(rng));
        s[i].rgb = Vec3(testing::random_values(rng, 3, 0, 1).data());
    }
    far = ts.back() + 0.1;
    return s;
}

TEST(Composite, WeightLaws)
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 2000; ++k) {
        double far = 0;
        const auto s = random_ray(rng, 1 + k % 64, far);
        const auto r = composite(s, far, {});
        double sum = 0;
        double keep = 1;
        for (std::size_t i = 0; i < s.size(); ++i) {
            EXPECT_GE(r.weights[i], 0.0);
            EXPECT_LE(r.weights[i], 1.0);
            sum += r.weights[i];
            const double delta = (i + 1 < s.size() ? s[i + 1].t : far) - s[i].t;
            keep *= std::exp(-s[i].sigma * delta);
        }
        EXPECT_GE(sum, 0.0);
        EXPECT_LE(sum, 1.0);
        EXPECT_NEAR(sum, r.opacity, 1e-12);
        EXPECT_NEAR(sum, 1 - keep, 1e-9);
        for (int c = 0; c < 3; ++c) {
            EXPECT_GE(r.rgb[c], 0.0);
            EXPECT_LE(r.rgb[c], 1.0);
        }
    }
}

TEST(Composite, BatchedMatchesSingleRay)
{
    std::mt19937_64 rng(6);
    const int rays = 5;
    const int steps = 9;
    Matrix t(rays, steps);
    Matrix sigma(rays * steps, 1);
    Matrix color(rays * steps, 3);
    std::vector<double> far(rays);
    std::vector<std::vector<CompositeSample>> single(rays);
    for (int r = 0; r < rays; ++r) {
        double f = 0;
        std::vector<CompositeSample> s;
        do {
            s = random_ray(rng, steps, f);
        } while (static_cast<int>(s.size()) != steps);
        far[r] = f;
        single[r] = s;
        for (int i = 0; i < steps; ++i) {
            t(r, i) = s[i].t;
            sigma(r * steps + i, 0) = s[i].sigma;
            color.row(r * steps + i) = s[i].rgb.transpose();
        }
    }
    const Vec3 bg(0.3, 0.6, 0.9);
    Tape tape;
    Matrix weights;
    std::vector<double> opacity;
    std::vector<double> depth;
    const Matrix out = tape.value(
        composite_colors(tape, tape.constant(sigma), tape.constant(color), t, far, bg, &weights, &opacity, &depth));
    for (int r = 0; r < rays; ++r) {
        const auto ref = composite(single[r], far[r], Background{bg, bg});
        EXPECT_LT((out.row(r).transpose() - ref.rgb).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_NEAR(opacity[r], ref.opacity, 1e-14);
        EXPECT_NEAR(depth[r], ref.depth, 1e-13);
        for (int i = 0; i < steps; ++i)
            EXPECT_NEAR(weights(r, i), ref.weights[i], 1e-15);
    }
}

/// Opacity of a slab σ on [a, b] along [0, far] with n stratified samples.
double slab_opacity(double sigma, double a, double b, double far, int n, std::mt19937_64* rng)
{
    const auto t = sample_coarse(0.0, far, n, rng);
    std::vector<CompositeSample> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        s[i].t = t[i];
        s[i].sigma = (t[i] >= a && t[i] <= b) ? sigma : 0.0;
    }
    return composite(s, far, {}).opacity;
}

TEST(Composite, SlabMatchesBeerLambert)
{
    for (double sigma : {0.3, 1.0, 2.5}) {
        const double exact = 1 - std::exp(-sigma * 1.5);
        const double got = slab_opacity(sigma, 1.0, 2.5, 4.0, 64, nullptr);
        EXPECT_LE(std::abs(got - exact), 0.01 * exact) << sigma;
    }
}

TEST(Composite, SlabErrorShrinksWithSampleCount)
{
    std::mt19937_64 rng(7);
    const double sigma = 1.3;
    const double exact = 1 - std::exp(-sigma * 0.77);
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {16, 32, 64, 128}) {
        double err = 0;
        for (int k = 0; k < 400; ++k)
            err += std::abs(slab_opacity(sigma, 0.61, 1.38, 3.0, n, &rng) - exact);
        err /= 400;
        EXPECT_LE(err, prev) << n;
        prev = err;
    }
}

field::ModelSpec tiny_model()
{
    field::ModelSpec m;
    m.coarse.bounds = Aabb{};
    m.coarse.resolution = {4, 4, 4};
    m.coarse.channels = 3;
    m.fine = m.coarse;
    m.fine.resolution = {6, 6, 6};
    m.heads.dir_frequencies = 1;
    m.heads.hidden = {8};
    m.seed = 3;
    return m;
}

RayBundle test_bundle(const Aabb& box)
{
    auto c = test_camera();
    c.pose = look_at(Vec3(0.5, 1.5, 3.0), Vec3::Zero());
    auto b = generate_all_rays(c);
    Ray miss;
    miss.origin = Vec3(0, 5, 0);
    miss.direction = Vec3(0, 1, 0);
    b.rays.push_back(miss);
    clip_to_box(b, box, 0.0);
    return b;
}

TEST(Renderer, ZeroParametersChainThroughCompositing)
{
    field::RadianceModel model(tiny_model());
    model.store().fill(0.0);
    const auto bundle = test_bundle(model.bounds());
    RenderOptions opt;
    opt.n_coarse = 16;
    opt.n_fine = 16;
    opt.background = Background{Vec3(0.1, 0.2, 0.3), Vec3(0.9, 0.0, 0.4)};
    Tape tape(&model.store());
    const auto res = render_rays(tape, model, bundle, opt);
    for (const PassOutput* pass : {&res.coarse, &res.fine}) {
        const Matrix rgb = tape.value(pass->rgb);
        const Matrix xs = tape.value(pass->xspec);
        for (std::size_t r = 0; r < bundle.size(); ++r) {
            const auto& ray = bundle.rays[r];
            // σ = softplus(0) everywhere inside, so Σδ = far − t₀.
            const double op = ray.hits ? 1 - std::exp(-std::log(2.0) * (ray.far - pass->t(r, 0))) : 0.0;
            EXPECT_NEAR(pass->opacity[r], op, 1e-12);
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(rgb(r, c), 0.5 * op + opt.background.rgb[c] * (1 - op), 1e-12);
                EXPECT_NEAR(xs(r, c), 0.5 * op + opt.background.xspec[c] * (1 - op), 1e-12);
            }
        }
    }
    EXPECT_FALSE(bundle.rays.back().hits);
    EXPECT_EQ(res.fine.opacity.back(), 0.0);
}

TEST(Renderer, FinePassUsesMergedSamples)
{
    field::RadianceModel model(tiny_model());
    const auto bundle = test_bundle(model.bounds());
    RenderOptions opt;
    opt.n_coarse = 8;
    opt.n_fine = 12;
    std::mt19937_64 rng(9);
    Tape tape(&model.store());
    const auto res = render_rays(tape, model, bundle, opt, &rng);
    EXPECT_EQ(res.coarse.t.cols(), 8);
    EXPECT_EQ(res.fine.t.cols(), 20);
    for (std::size_t r = 0; r < bundle.size(); ++r) {
        if (!bundle.rays[r].hits)
            continue;
        for (int i = 1; i < 20; ++i)
            EXPECT_LE(res.fine.t(r, i - 1), res.fine.t(r, i));
        for (int i = 0; i < 8; ++i) {
            const double tc = res.coarse.t(r, i);
            bool found = false;
            for (int j = 0; j < 20; ++j)
                found = found || res.fine.t(r, j) == tc;
            EXPECT_TRUE(found);
        }
        double sum = 0;
        for (int i = 0; i < 20; ++i) {
            EXPECT_GE(res.fine.weights(r, i), 0.0);
            sum += res.fine.weights(r, i);
        }
        EXPECT_NEAR(sum, res.fine.opacity[r], 1e-12);
        EXPECT_LE(sum, 1.0);
    }
}

TEST(Renderer, ImageMatchesBundleRender)
{
    field::RadianceModel model(tiny_model());
    auto cam = test_camera();
    cam.pose = look_at(Vec3(0.5, 1.5, 3.0), Vec3::Zero());
    RenderOptions opt;
    opt.n_coarse = 8;
    opt.n_fine = 8;
    opt.chunk = 7;
    const auto img = render_image(model, cam, opt);
    ASSERT_EQ(img.rgb.width, 8);
    ASSERT_EQ(img.rgb.height, 6);
    ASSERT_EQ(img.rgb.channels, 3);
    auto bundle = generate_all_rays(cam);
    clip_to_box(bundle, model.bounds());
    Tape tape(&model.store());
    const auto res = render_rays(tape, model, bundle, opt);
    const Matrix rgb = tape.value(res.fine.rgb);
    const Matrix xs = tape.value(res.fine.xspec);
    for (std::size_t p = 0; p < bundle.size(); ++p)
        for (int c = 0; c < 3; ++c) {
            // Chunking changes matrix sizes and with them the product kernels.
            EXPECT_NEAR(img.rgb.data[p * 3 + c], rgb(p, c), 1e-13);
            EXPECT_NEAR(img.xspec.data[p * 3 + c], xs(p, c), 1e-13);
        }
    const auto img2 = render_image(model, cam.scaled(2.0), opt);
    EXPECT_EQ(img2.rgb.pixel_count(), 4 * img.rgb.pixel_count());
}

TEST(Renderer, GradientsFlowIntoBothFields)
{
    field::RadianceModel model(tiny_model());
    const auto bundle = test_bundle(model.bounds());
    RenderOptions opt;
    opt.n_coarse = 8;
    opt.n_fine = 8;
    Tape tape(&model.store());
    const auto res = render_rays(tape, model, bundle, opt);
    const auto loss = diff::add(tape, diff::sum(tape, diff::add(tape, res.coarse.rgb, res.coarse.xspec)),
                                diff::sum(tape, diff::add(tape, res.fine.rgb, res.fine.xspec)));
    model.store().zero_grads();
    tape.backward(loss);
    for (const char* name : {"coarse.grid", "fine.grid", "density.layer0.weight", "rgb.layer0.weight",
                              "xspec.layer1.weight"}) {
        double norm = 0;
        for (double g : model.store().grad(model.store().at(name)))
            norm += g * g;
        EXPECT_GT(norm, 0.0) << name;
    }
}

} // namespace
} // namespace mmrf::render
