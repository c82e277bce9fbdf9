// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/pipeline/dataset.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/core/hash.hpp"
#include "mmrf/core/png_io.hpp"

namespace mmrf::pipeline {

namespace fs = std::filesystem;

std::string_view to_string(Split s)
{
    return s == Split::train ? "train" : "holdout";
}

Split split_from_string(std::string_view name)
{
    if (name == "train")
        return Split::train;
    if (name == "holdout")
        return Split::holdout;
    throw ContractError("unknown split '" + std::string(name) + "' (expected train or holdout)");
}

struct SceneDataset::Cache {
    std::vector<std::optional<ImageF>> rgb;
    std::vector<std::optional<Image16>> raw_thermal;
    std::vector<std::optional<ImageF>> thermal;
    std::optional<sensors::EventStream> stream;
    std::vector<ImageF> events;
};

SceneDataset SceneDataset::load(const fs::path& dir, const PreprocessOptions& options)
{
    SceneDataset d;
    d.dir_ = dir;
    d.options_ = options;
    const auto manifest_path = dir / data::kManifestFile;
    if (!fs::exists(manifest_path))
        throw IoError("missing manifest: " + manifest_path.string());
    d.manifest_hash_ = fnv1a64(data::read_text(manifest_path));
    d.manifest_ = data::read_manifest(dir);
    auto& m = d.manifest_;
    const auto where = manifest_path.string();

    if (options.event_clip <= 0 || options.thermal.grid < 1 || options.thermal.smoothing_rounds < 0)
        throw ContractError("invalid preprocessing options");
    if (m.frames.empty())
        throw FormatError(where + ": no frames");
    try {
        m.intrinsics.camera(Mat4::Identity()).validate();
    } catch (const ContractError& e) {
        throw FormatError(where + ": intrinsics: " + e.what());
    }
    auto require_file = [&](const std::string& rel) {
        if (rel.empty() || !fs::is_regular_file(dir / rel))
            throw IoError("missing file referenced by " + where + ": " + (dir / rel).string());
    };
    for (std::size_t k = 0; k < m.frames.size(); ++k) {
        auto& f = m.frames[k];
        if (k > 0 && !(f.time > m.frames[k - 1].time))
            throw FormatError(where + ": frame times must be strictly increasing (frame " + std::to_string(k) + ")");
        if (!render::is_rotation(f.pose.topLeftCorner<3, 3>()) || f.pose.row(3) != Eigen::RowVector4d(0, 0, 0, 1))
            throw FormatError(where + ": frame " + std::to_string(k) + " pose is not a rigid transform");
        f.pose = data::to_renderer_pose(f.pose, m.convention);
        require_file(f.rgb);
        require_file(f.thermal);
    }
    require_file(m.events);
    if (m.scene)
        require_file(*m.scene);
    m.convention = data::Convention::opengl;

    d.cache_ = std::make_shared<Cache>();
    d.cache_->rgb.resize(m.frames.size());
    d.cache_->raw_thermal.resize(m.frames.size());
    d.cache_->thermal.resize(m.frames.size());
    return d;
}

render::CameraModel SceneDataset::camera(std::size_t frame) const
{
    return manifest_.intrinsics.camera(manifest_.frames.at(frame).pose);
}

namespace {

template <class Img>
void check_size(const Img& img, const data::Intrinsics& in, const fs::path& path)
{
    if (img.width != in.width || img.height != in.height)
        throw FormatError(path.string() + ": image is " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + ", manifest says " + std::to_string(in.width) + "x" +
                          std::to_string(in.height));
}

} // namespace

const ImageF& SceneDataset::rgb(std::size_t frame) const
{
    auto& slot = cache_->rgb.at(frame);
    if (!slot) {
        const auto path = dir_ / manifest_.frames[frame].rgb;
        auto img = read_png(path);
        check_size(img, manifest_.intrinsics, path);
        if (img.channels != 3)
            throw FormatError(path.string() + ": expected an RGB image");
        slot = from_8bit(img);
    }
    return *slot;
}

const Image16& SceneDataset::raw_thermal(std::size_t frame) const
{
    auto& slot = cache_->raw_thermal.at(frame);
    if (!slot) {
        const auto path = dir_ / manifest_.frames[frame].thermal;
        auto img = read_png16(path);
        check_size(img, manifest_.intrinsics, path);
        slot = std::move(img);
    }
    return *slot;
}

const ImageF& SceneDataset::thermal(std::size_t frame) const
{
    auto& slot = cache_->thermal.at(frame);
    if (!slot)
        slot = from_8bit(sensors::enhance_thermal(raw_thermal(frame), options_.thermal));
    return *slot;
}

const sensors::EventStream& SceneDataset::event_stream() const
{
    if (!cache_->stream) {
        auto s = sensors::read_events(dir_ / manifest_.events);
        if (s.width != width() || s.height != height())
            throw FormatError((dir_ / manifest_.events).string() + ": sensor size differs from the images");
        cache_->stream = std::move(s);
    }
    return *cache_->stream;
}

double SceneDataset::event_window() const
{
    const auto& f = manifest_.frames;
    if (f.size() < 2)
        return 1.0;
    return (f.back().time - f.front().time) / static_cast<double>(f.size() - 1);
}

const ImageF& SceneDataset::events(std::size_t frame) const
{
    if (frame >= frame_count())
        throw ContractError("frame " + std::to_string(frame) + " out of range");
    if (cache_->events.empty()) {
        std::vector<double> starts;
        for (const auto& f : manifest_.frames)
            starts.push_back(f.time);
        const auto acc = sensors::accumulate_events(event_stream(), starts, event_window());
        for (const auto& ef : acc.frames)
            cache_->events.push_back(sensors::normalize_event_frame(ef, options_.event_clip));
    }
    return cache_->events[frame];
}

std::vector<std::size_t> SceneDataset::split(Split s, int holdout_every) const
{
    if (holdout_every < 0)
        throw ContractError("holdout_every must be >= 0");
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < frame_count(); ++k) {
        const bool hold = holdout_every > 0 && k % static_cast<std::size_t>(holdout_every) == 0;
        if (hold == (s == Split::holdout))
            out.push_back(k);
    }
    return out;
}

} // namespace mmrf::pipeline
