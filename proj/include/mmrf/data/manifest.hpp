// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/geometry.hpp"
#include "mmrf/render/camera.hpp"
#include "mmrf/render/composite.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmrf::data {

inline constexpr const char* kManifestFormat = "mmrf-dataset";
inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";

/// Camera axis conventions a manifest may declare.
///  - "opengl": x right, y up, camera looks along −z (the renderer's own).
///  - "opencv": x right, y down, camera looks along +z.
enum class Convention { opengl, opencv };

std::string_view to_string(Convention c);
Convention convention_from_string(std::string_view name);
/// Converts a camera-to-world pose from `from` to the renderer's convention.
Mat4 to_renderer_pose(const Mat4& pose, Convention from);

struct Intrinsics {
    int width = 0;
    int height = 0;
    double fx = 1;
    double fy = 1;
    double cx = 0;
    double cy = 0;

    render::CameraModel camera(const Mat4& pose) const;
    friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

struct FrameRecord {
    int index = 0;
    double time = 0;
    /// Paths relative to the dataset directory.
    std::string rgb;
    std::string thermal;
    Mat4 pose = Mat4::Identity();
};

struct ThermalRange {
    int lo = 2000;
    int hi = 3000;
};

/// Parsed manifest document. Paths stay relative to the dataset directory.
struct Manifest {
    Convention convention = Convention::opengl;
    Intrinsics intrinsics;
    std::vector<FrameRecord> frames;
    std::string events = "events.bin";
    std::optional<std::string> scene;
    ThermalRange thermal_range;
    Aabb bounds;
    render::Background background;
    /// Free-form provenance (generator settings, low-light parameters, ...).
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const Manifest& m);
/// Throws FormatError naming `where` and the offending key on schema violations.
Manifest manifest_from_json(const nlohmann::json& j, const std::string& where);

/// Writes DIR/manifest.json with stable key order and formatting.
void write_manifest(const std::filesystem::path& dir, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& dir);

/// Text of a JSON document as written to disk (2-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace mmrf::data
