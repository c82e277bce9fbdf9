// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/data/manifest.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/field/feature_field.hpp"

#include <fstream>
#include <sstream>

namespace mmrf::data {

std::string_view to_string(Convention c)
{
    return c == Convention::opengl ? "opengl" : "opencv";
}

Convention convention_from_string(std::string_view name)
{
    if (name == "opengl")
        return Convention::opengl;
    if (name == "opencv")
        return Convention::opencv;
    throw FormatError("unknown camera convention '" + std::string(name) + "' (expected opengl or opencv)");
}

Mat4 to_renderer_pose(const Mat4& pose, Convention from)
{
    if (from == Convention::opengl)
        return pose;
    // Flip the camera y and z axes.
    Mat4 flip = Mat4::Identity();
    flip(1, 1) = -1;
    flip(2, 2) = -1;
    return pose * flip;
}

render::CameraModel Intrinsics::camera(const Mat4& pose) const
{
    return {width, height, fx, fy, cx, cy, pose};
}

namespace {

nlohmann::json vec_json(const Vec3& v)
{
    return {v.x(), v.y(), v.z()};
}

Vec3 vec_from(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3)
        throw FormatError("expected 3 numbers");
    return {v[0], v[1], v[2]};
}

} // namespace

nlohmann::json to_json(const Manifest& m)
{
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : m.frames)
        frames.push_back({{"index", f.index},
                          {"time", f.time},
                          {"rgb", f.rgb},
                          {"thermal", f.thermal},
                          {"pose", render::pose_to_json(f.pose)}});
    nlohmann::json j = {{"format", kManifestFormat},
                        {"version", kManifestVersion},
                        {"convention", std::string(to_string(m.convention))},
                        {"intrinsics",
                         {{"width", m.intrinsics.width},
                          {"height", m.intrinsics.height},
                          {"fx", m.intrinsics.fx},
                          {"fy", m.intrinsics.fy},
                          {"cx", m.intrinsics.cx},
                          {"cy", m.intrinsics.cy}}},
                        {"frames", frames},
                        {"events", m.events},
                        {"thermal_range", {{"lo", m.thermal_range.lo}, {"hi", m.thermal_range.hi}}},
                        {"bounds", field::to_json(m.bounds)},
                        {"background", {{"rgb", vec_json(m.background.rgb)}, {"xspec", vec_json(m.background.xspec)}}},
                        {"extra", m.extra}};
    if (m.scene)
        j["scene"] = *m.scene;
    return j;
}

Manifest manifest_from_json(const nlohmann::json& j, const std::string& where)
{
    std::string key;
    try {
        Manifest m;
        key = "format";
        if (j.at("format").get<std::string>() != kManifestFormat)
            throw FormatError("unexpected format tag");
        key = "version";
        if (j.at("version").get<int>() != kManifestVersion)
            throw FormatError("unsupported version");
        key = "convention";
        m.convention = convention_from_string(j.at("convention").get<std::string>());
        key = "intrinsics";
        const auto& in = j.at("intrinsics");
        m.intrinsics = {in.at("width").get<int>(), in.at("height").get<int>(), in.at("fx").get<double>(),
                        in.at("fy").get<double>(),  in.at("cx").get<double>(),    in.at("cy").get<double>()};
        key = "frames";
        for (const auto& f : j.at("frames")) {
            FrameRecord r;
            r.index = f.at("index").get<int>();
            r.time = f.at("time").get<double>();
            r.rgb = f.at("rgb").get<std::string>();
            r.thermal = f.at("thermal").get<std::string>();
            r.pose = render::pose_from_json(f.at("pose"));
            m.frames.push_back(std::move(r));
        }
        key = "events";
        m.events = j.at("events").get<std::string>();
        key = "scene";
        if (j.contains("scene"))
            m.scene = j.at("scene").get<std::string>();
        key = "thermal_range";
        m.thermal_range = {j.at("thermal_range").at("lo").get<int>(), j.at("thermal_range").at("hi").get<int>()};
        key = "bounds";
        m.bounds = field::aabb_from_json(j.at("bounds"));
        key = "background";
        m.background.rgb = vec_from(j.at("background").at("rgb"));
        m.background.xspec = vec_from(j.at("background").at("xspec"));
        key = "extra";
        if (j.contains("extra"))
            m.extra = j.at("extra");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(where + ": manifest key '" + key + "': " + e.what());
    } catch (const Error& e) {
        throw FormatError(where + ": manifest key '" + key + "': " + e.what());
    }
}

std::string dump_json(const nlohmann::json& j)
{
    return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f)
        throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m)
{
    write_text(dir / kManifestFile, dump_json(to_json(m)));
}

Manifest read_manifest(const std::filesystem::path& dir)
{
    const auto path = dir / kManifestFile;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return manifest_from_json(j, path.string());
}

} // namespace mmrf::data
