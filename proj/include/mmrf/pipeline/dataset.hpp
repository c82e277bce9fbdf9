// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/data/manifest.hpp"
#include "mmrf/sensors/events.hpp"
#include "mmrf/sensors/thermal.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mmrf::pipeline {

struct PreprocessOptions {
    /// Event count mapped to full brightness in event frames.
    double event_clip = 5.0;
    sensors::ThermalEnhanceOptions thermal;
};

enum class Split { train, holdout };

std::string_view to_string(Split s);
Split split_from_string(std::string_view name);

/// A dataset directory with validated manifest, lazily decoded images and
/// cached derived images (enhanced thermal, event frames).
class SceneDataset {
public:
    /// Validates the manifest, every referenced path, frame times and poses.
    /// Poses are converted to the renderer's convention.
    static SceneDataset load(const std::filesystem::path& dir, const PreprocessOptions& options = {});

    const std::filesystem::path& dir() const { return dir_; }
    const data::Manifest& manifest() const { return manifest_; }
    const PreprocessOptions& preprocess() const { return options_; }
    /// FNV-1a of the manifest file bytes.
    std::uint64_t manifest_hash() const { return manifest_hash_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    std::size_t frame_count() const { return manifest_.frames.size(); }
    int width() const { return manifest_.intrinsics.width; }
    int height() const { return manifest_.intrinsics.height; }
    render::CameraModel camera(std::size_t frame) const;

    /// 3-channel RGB in [0,1].
    const ImageF& rgb(std::size_t frame) const;
    const Image16& raw_thermal(std::size_t frame) const;
    /// Enhanced thermal, 1 channel in [0,1] (8-bit value / 255).
    const ImageF& thermal(std::size_t frame) const;
    /// Normalized event frame of the window starting at the frame's time, 1 channel.
    const ImageF& events(std::size_t frame) const;
    const sensors::EventStream& event_stream() const;
    /// Event window length: the mean frame period.
    double event_window() const;

    /// Frame positions in the split: holdout = every `holdout_every`-th frame
    /// starting at 0, train = the rest. holdout_every = 0 puts every frame in train.
    std::vector<std::size_t> split(Split s, int holdout_every) const;

private:
    struct Cache;

    std::filesystem::path dir_;
    data::Manifest manifest_;
    PreprocessOptions options_;
    std::uint64_t manifest_hash_ = 0;
    std::vector<std::string> warnings_;
    std::shared_ptr<Cache> cache_;
};

} // namespace mmrf::pipeline
