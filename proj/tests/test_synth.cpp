// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "support/sensor_oracles.hpp"

#include "mmrf/core/png_io.hpp"
#include "mmrf/sensors/events.hpp"
#include "mmrf/synth/dataset.hpp"
#include "mmrf/synth/scene.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace mmrf::synth {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "mmrf_test_synth" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Primitive box(Vec3 c, Vec3 size, double sigma, Vec3 rgb, double thermal)
{
    Primitive p;
    p.kind = PrimitiveKind::box;
    p.center = c;
    p.size = size;
    p.density = sigma;
    p.rgb = rgb;
    p.thermal = thermal;
    return p;
}

render::CameraModel small_camera(const Mat4& pose, int w = 12, int h = 10)
{
    return data::Intrinsics{w, h, 14.0, 14.0, w / 2.0, h / 2.0}.camera(pose);
}

Mat4 pose_at(const Vec3& eye)
{
    TrajectorySpec t;
    t.radius = eye.norm();
    return orbit_pose(t, 0);
}

TEST(Oracle, EmptySceneIsBackground)
{
    SyntheticScene s = builtin_scene("empty");
    s.background_rgb = {0.1, 0.2, 0.3};
    s.background_thermal = 0.4;
    const auto cam = small_camera(pose_at({3, 1, 0}));
    const auto rgb = oracle_render(s, cam, Modality::rgb);
    const auto th = oracle_render(s, cam, Modality::thermal);
    ASSERT_EQ(rgb.channels, 3);
    ASSERT_EQ(th.channels, 1);
    for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
        EXPECT_EQ(rgb.data[3 * p], 0.1);
        EXPECT_EQ(rgb.data[3 * p + 1], 0.2);
        EXPECT_EQ(rgb.data[3 * p + 2], 0.3);
        EXPECT_EQ(th.data[p], 0.4);
    }
}

TEST(Oracle, SlabClosedForm)
{
    const auto s = builtin_scene("slab");
    // Straight down the z axis through a 0.4 m slab of density 4.
    const double want = 1 - std::exp(-4.0 * 0.4);
    const Vec3 c = oracle_ray(s, {0.1, -0.2, 3}, {0, 0, -1}, Modality::rgb);
    EXPECT_NEAR(c.x(), 0.8 * want, 1e-14);
    EXPECT_NEAR(c.y(), 0.3 * want, 1e-14);
    EXPECT_NEAR(c.z(), 0.2 * want, 1e-14);
    const Vec3 t = oracle_ray(s, {0.1, -0.2, 3}, {0, 0, -1}, Modality::thermal);
    EXPECT_NEAR(t.x(), 0.7 * want + 0.2 * (1 - want), 1e-14);
    EXPECT_EQ(t.x(), t.z());
    // Starting inside the slab only the remaining 0.1 m counts.
    const Vec3 inside = oracle_ray(s, {0, 0, -0.1}, {0, 0, -1}, Modality::rgb);
    EXPECT_NEAR(inside.x(), 0.8 * (1 - std::exp(-0.4)), 1e-14);
    // Oblique path length scales with 1/cos.
    const Vec3 d = Vec3(0.1, 0, -1).normalized();
    const double len = 0.4 / std::abs(d.z());
    EXPECT_NEAR(oracle_ray(s, {0, 0, 3}, d, Modality::rgb).x(), 0.8 * (1 - std::exp(-4 * len)), 1e-13);
}

// Fine fixed-step integration with membership tested directly against the
// primitive geometry.
Vec3 numeric_ray(const SyntheticScene& s, const Vec3& o, const Vec3& d, double t0, double t1, int steps)
{
    const double dt = (t1 - t0) / steps;
    double trans = 1;
    Vec3 color = Vec3::Zero();
    for (int k = 0; k < steps; ++k) {
        const Vec3 p = o + (t0 + (k + 0.5) * dt) * d;
        double sigma = 0;
        Vec3 emit = Vec3::Zero();
        for (const auto& prim : s.primitives) {
            const Vec3 rel = (p - prim.center).cwiseAbs();
            const bool in = prim.kind == PrimitiveKind::box ? (rel.array() <= 0.5 * prim.size.array()).all()
                                                            : (p - prim.center).norm() <= prim.radius;
            if (in) {
                sigma += prim.density;
                emit += prim.density * prim.rgb;
            }
        }
        if (sigma > 0) {
            const double alpha = 1 - std::exp(-sigma * dt);
            color += trans * alpha * emit / sigma;
            trans *= 1 - alpha;
        }
    }
    return color + trans * s.background_rgb;
}

// Entry and exit of the ray through an axis-aligned box.
std::pair<double, double> slab_span(const Aabb& b, const Vec3& o, const Vec3& d)
{
    double lo = 0;
    double hi = 1e300;
    for (int a = 0; a < 3; ++a) {
        double u = (b.min[a] - o[a]) / d[a];
        double v = (b.max[a] - o[a]) / d[a];
        if (u > v)
            std::swap(u, v);
        lo = std::max(lo, u);
        hi = std::min(hi, v);
    }
    return {lo, hi};
}

TEST(Oracle, NestedBoxesMatchNumericIntegration)
{
    SyntheticScene s;
    s.bounds = {Vec3::Constant(-1.5), Vec3::Constant(1.5)};
    s.primitives.push_back(box({0, 0, 0}, {2, 2, 2}, 0.8, {0.2, 0.6, 0.3}, 0.3));
    s.primitives.push_back(box({0.1, -0.1, 0.2}, {0.8, 0.6, 0.7}, 1.5, {0.9, 0.1, 0.4}, 0.9));
    s.background_rgb = {0.05, 0.1, 0.2};
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 o(u(rng), u(rng), 4);
        const Vec3 d = (Vec3(u(rng), u(rng), 0) - o).normalized();
        // Outside the outer box the ray only sees background.
        const auto [t0, t1] = slab_span(s.primitives[0].bounding_box(), o, d);
        const Vec3 coarse = numeric_ray(s, o, d, t0, t1, 10000);
        const Vec3 fine = numeric_ray(s, o, d, t0, t1, 100000);
        const Vec3 got = oracle_ray(s, o, d, Modality::rgb);
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(got[c], coarse[c], 1e-4) << trial;
            EXPECT_NEAR(got[c], fine[c], 1e-5) << trial;
        }
    }
}

TEST(Oracle, RandomScenesMatchNumericIntegration)
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto s = random_scene(seed, 5);
        EXPECT_NO_THROW(s.validate());
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-0.6, 0.6);
        for (int trial = 0; trial < 5; ++trial) {
            const Vec3 o(3, u(rng), u(rng));
            const Vec3 d = (Vec3(0, u(rng), u(rng)) - o).normalized();
            const Vec3 want = numeric_ray(s, o, d, 0, 6, 20000);
            const Vec3 got = oracle_ray(s, o, d, Modality::rgb);
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(got[c], want[c], 1e-3) << seed << "/" << trial;
        }
    }
}

TEST(Scene, ValidationAndJson)
{
    auto s = builtin_scene("garden");
    EXPECT_NO_THROW(s.validate());
    const auto back = scene_from_json(to_json(s));
    EXPECT_EQ(to_json(back), to_json(s));
    auto bad = s;
    bad.primitives[0].density = -1;
    EXPECT_THROW(bad.validate(), ContractError);
    bad = s;
    bad.primitives[0].center.x() = 5;
    EXPECT_THROW(bad.validate(), ContractError);
    bad = s;
    bad.primitives[0].rgb.y() = 1.2;
    EXPECT_THROW(bad.validate(), ContractError);
    EXPECT_THROW(builtin_scene("moon"), ContractError);
}

TEST(Trajectory, PosesLookAtCentre)
{
    TrajectorySpec t;
    t.center = {0.1, -0.2, 0.3};
    for (double s : {0.0, 1.5, 7.0, 22.0}) {
        const Mat4 p = orbit_pose(t, s);
        const Mat3 r = p.block<3, 3>(0, 0);
        EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
        const Vec3 eye = p.block<3, 1>(0, 3);
        const Vec3 forward = -r.col(2);
        EXPECT_LT((forward - (t.center - eye).normalized()).norm(), 1e-12);
        EXPECT_NEAR(eye.y() - t.center.y(), t.height, 1e-12);
    }
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

DatasetOptions small_options()
{
    DatasetOptions o;
    o.intrinsics = {16, 12, 20.0, 20.0, 8.0, 6.0};
    o.event_supersample = 3;
    o.thermal_noise = 2.0;
    o.seed = 9;
    return o;
}

TEST(Dataset, TwoViewLayout)
{
    TrajectorySpec t;
    t.views = 2;
    t.arc = 0.3;
    const auto dir = fresh_dir("two");
    const auto m = generate_dataset(builtin_scene("garden"), t, small_options(), dir);
    ASSERT_EQ(m.frames.size(), 2u);
    EXPECT_LT(m.frames[0].time, m.frames[1].time);
    for (const auto& f : m.frames) {
        const auto rgb = read_png(dir / f.rgb);
        EXPECT_EQ(rgb.width, 16);
        EXPECT_EQ(rgb.channels, 3);
        const auto th = read_png16(dir / f.thermal);
        for (auto v : th.data) {
            EXPECT_GE(v, 2000 - 20);
            EXPECT_LE(v, 3000 + 20);
        }
    }
    EXPECT_TRUE(fs::exists(dir / "events.bin"));
    EXPECT_EQ(scene_from_json(nlohmann::json::parse(slurp(dir / "scene.json"))).primitives.size(), 6u);
    EXPECT_THROW(generate_dataset(builtin_scene("garden"), TrajectorySpec{.views = 1}, small_options(), dir),
                 ContractError);
}

TEST(Dataset, StaticTrajectoryHasNoEvents)
{
    TrajectorySpec t;
    t.views = 3;
    t.arc = 0;
    const auto dir = fresh_dir("static");
    generate_dataset(builtin_scene("garden"), t, small_options(), dir);
    EXPECT_TRUE(sensors::read_events(dir / "events.bin").events.empty());
}

TEST(Dataset, SameSeedSameBytes)
{
    TrajectorySpec t;
    t.views = 3;
    t.arc = 0.5;
    const auto a = fresh_dir("seed_a");
    const auto b = fresh_dir("seed_b");
    generate_dataset(builtin_scene("garden"), t, small_options(), a);
    generate_dataset(builtin_scene("garden"), t, small_options(), b);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file())
            continue;
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
    }
    EXPECT_EQ(files, 3u + 3u + 3u);
    auto other = small_options();
    other.seed = 10;
    const auto c = fresh_dir("seed_c");
    generate_dataset(builtin_scene("garden"), t, other, c);
    EXPECT_NE(slurp(a / "thermal/0000.png"), slurp(c / "thermal/0000.png"));
}

TEST(Dataset, EventsFollowRenderedLuminance)
{
    TrajectorySpec t;
    t.views = 3;
    t.arc = 0.6;
    auto opt = small_options();
    opt.event_supersample = 2;
    opt.event_threshold = 0.2;
    const auto dir = fresh_dir("events");
    const auto m = generate_dataset(builtin_scene("garden"), t, opt, dir);
    const auto stream = sensors::read_events(dir / "events.bin");
    EXPECT_FALSE(stream.events.empty());
    std::vector<ImageF> video;
    for (int s = 0; s <= 4; ++s)
        video.push_back(sensors::luminance(
            oracle_render(builtin_scene("garden"), m.intrinsics.camera(orbit_pose(t, s / 2.0)), Modality::rgb)));
    const std::vector<double> all{0.0};
    const auto acc = sensors::accumulate_events(stream, all, 1.0).frames[0];
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) {
            std::vector<double> series;
            for (const auto& f : video)
                series.push_back(f.at(x, y));
            EXPECT_EQ(acc.at(x, y), testing::reference_crossings(series, 0.2, 1e-4)) << x << "," << y;
        }
}

TEST(Lowlight, IdentityScaleAndThermal)
{
    TrajectorySpec t;
    t.views = 2;
    t.arc = 0.3;
    const auto src = fresh_dir("ll_src");
    const auto m = generate_dataset(builtin_scene("garden"), t, small_options(), src);
    const auto same = fresh_dir("ll_same");
    lowlight_variant(src, same, 1.0, 0.0, 1);
    const auto dark = fresh_dir("ll_dark");
    lowlight_variant(src, dark, 0.1, 0.0, 1);
    for (const auto& f : m.frames) {
        EXPECT_EQ(slurp(same / f.rgb), slurp(src / f.rgb));
        EXPECT_EQ(slurp(dark / f.thermal), slurp(src / f.thermal));
        const auto a = read_png(src / f.rgb);
        const auto b = read_png(dark / f.rgb);
        double sa = 0, sb = 0;
        for (std::size_t i = 0; i < a.data.size(); ++i) {
            sa += a.data[i];
            sb += b.data[i];
            // One quantisation step of slack per sample.
            EXPECT_LE(std::abs(b.data[i] - 0.1 * a.data[i]), 0.5 + 1e-9);
        }
        EXPECT_NEAR(sb / sa, 0.1, 0.01);
    }
    EXPECT_EQ(slurp(dark / "events.bin"), slurp(src / "events.bin"));
    const auto noisy = fresh_dir("ll_noisy");
    lowlight_variant(src, noisy, 0.1, 0.02, 3);
    const auto a = read_png(dark / m.frames[0].rgb);
    const auto b = read_png(noisy / m.frames[0].rgb);
    EXPECT_NE(a.data, b.data);
    EXPECT_THROW(lowlight_variant(src, fresh_dir("ll_bad"), 0.0, 0.0, 1), ContractError);
    EXPECT_THROW(lowlight_variant(src, fresh_dir("ll_bad"), 1.5, 0.0, 1), ContractError);
}

} // namespace
} // namespace mmrf::synth
