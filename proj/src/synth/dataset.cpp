// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/synth/dataset.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/core/png_io.hpp"
#include "mmrf/sensors/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace mmrf::synth {

namespace fs = std::filesystem;

Mat4 orbit_pose(const TrajectorySpec& t, double s)
{
    const double theta = t.arc * s / t.views;
    const Vec3 eye = t.center + Vec3(t.radius * std::cos(theta), t.height, t.radius * std::sin(theta));
    return render::look_at(eye, t.center);
}

namespace {

std::string frame_name(int index, const char* ext)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d.%s", index, ext);
    return buf;
}

void make_dirs(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

Image16 raw_thermal(const ImageF& thermal, const DatasetOptions& opt, std::mt19937_64& rng)
{
    std::normal_distribution<double> noise(0.0, 1.0);
    Image16 raw(thermal.width, thermal.height, 1);
    const double lo = opt.thermal_range.lo;
    const double span = opt.thermal_range.hi - opt.thermal_range.lo;
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        double v = lo + std::clamp(thermal.data[i], 0.0, 1.0) * span;
        if (opt.thermal_noise > 0)
            v += opt.thermal_noise * noise(rng);
        raw.data[i] = static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 65535.0));
    }
    return raw;
}

} // namespace

data::Manifest generate_dataset(const SyntheticScene& scene, const TrajectorySpec& trajectory,
                                const DatasetOptions& options, const fs::path& dir)
{
    scene.validate();
    if (trajectory.views < 2)
        throw ContractError("a dataset needs at least 2 views");
    if (!(trajectory.time_spacing > 0))
        throw ContractError("time spacing must be positive");
    if (options.event_supersample < 1)
        throw ContractError("event supersampling must be >= 1");
    if (options.thermal_range.lo < 0 || options.thermal_range.hi > 65535 ||
        options.thermal_range.hi <= options.thermal_range.lo)
        throw ContractError("thermal count range must satisfy 0 <= lo < hi <= 65535");

    make_dirs(dir / "rgb");
    make_dirs(dir / "thermal");
    std::mt19937_64 rng(options.seed);

    data::Manifest m;
    m.intrinsics = options.intrinsics;
    m.thermal_range = options.thermal_range;
    m.bounds = scene.bounds;
    m.background.rgb = scene.background_rgb;
    m.background.xspec = Vec3::Zero();
    m.scene = "scene.json";
    for (int k = 0; k < trajectory.views; ++k) {
        data::FrameRecord f;
        f.index = k;
        f.time = k * trajectory.time_spacing;
        f.rgb = "rgb/" + frame_name(k, "png");
        f.thermal = "thermal/" + frame_name(k, "png");
        f.pose = orbit_pose(trajectory, k);
        const auto cam = m.intrinsics.camera(f.pose);
        write_png(dir / f.rgb, to_8bit(oracle_render(scene, cam, Modality::rgb)));
        write_png16(dir / f.thermal, raw_thermal(oracle_render(scene, cam, Modality::thermal), options, rng));
        m.frames.push_back(std::move(f));
    }

    const int sub = options.event_supersample;
    std::vector<ImageF> video;
    std::vector<std::uint64_t> times;
    for (int s = 0; s <= (trajectory.views - 1) * sub; ++s) {
        const double idx = static_cast<double>(s) / sub;
        const auto cam = m.intrinsics.camera(orbit_pose(trajectory, idx));
        video.push_back(sensors::luminance(oracle_render(scene, cam, Modality::rgb)));
        times.push_back(sensors::seconds_to_us(idx * trajectory.time_spacing));
    }
    write_events(dir / m.events, sensors::synthesize_events(video, times, options.event_threshold));

    data::write_text(dir / *m.scene, data::dump_json(to_json(scene)));
    m.extra = {{"generator",
                {{"seed", options.seed},
                 {"event_threshold", options.event_threshold},
                 {"event_supersample", options.event_supersample},
                 {"thermal_noise", options.thermal_noise},
                 {"time_spacing", trajectory.time_spacing},
                 {"orbit",
                  {{"center", {trajectory.center.x(), trajectory.center.y(), trajectory.center.z()}},
                   {"radius", trajectory.radius},
                   {"height", trajectory.height},
                   {"arc", trajectory.arc}}}}}};
    data::write_manifest(dir, m);
    return m;
}

data::Manifest lowlight_variant(const fs::path& src, const fs::path& dst, double gain, double noise_sigma,
                                std::uint64_t seed)
{
    if (!(gain > 0 && gain <= 1))
        throw ContractError("low-light gain must lie in (0, 1]");
    if (!(noise_sigma >= 0))
        throw ContractError("low-light noise sigma must be >= 0");
    auto m = data::read_manifest(src);
    make_dirs(dst);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto copy = [&](const std::string& rel) {
        make_dirs((dst / rel).parent_path());
        std::error_code ec;
        fs::copy_file(src / rel, dst / rel, fs::copy_options::overwrite_existing, ec);
        if (ec)
            throw IoError("cannot copy " + (src / rel).string() + ": " + ec.message());
    };
    for (const auto& f : m.frames) {
        auto img = from_8bit(read_png(src / f.rgb));
        for (auto& v : img.data) {
            v *= gain;
            if (noise_sigma > 0)
                v += noise_sigma * noise(rng);
        }
        make_dirs((dst / f.rgb).parent_path());
        write_png(dst / f.rgb, to_8bit(img));
        copy(f.thermal);
    }
    copy(m.events);
    if (m.scene)
        copy(*m.scene);
    m.extra["lowlight"] = {{"gain", gain}, {"noise_sigma", noise_sigma}, {"seed", seed}};
    data::write_manifest(dst, m);
    return m;
}

} // namespace mmrf::synth
