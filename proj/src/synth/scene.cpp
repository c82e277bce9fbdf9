// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/synth/scene.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/field/feature_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mmrf::synth {

std::optional<std::pair<double, double>> Primitive::intersect(const Vec3& origin, const Vec3& dir) const
{
    if (kind == PrimitiveKind::box)
        return bounding_box().intersect(origin, dir);
    const Vec3 oc = origin - center;
    const double a = dir.squaredNorm();
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - radius * radius;
    const double disc = b * b - a * c;
    if (!(disc > 0))
        return std::nullopt;
    const double s = std::sqrt(disc);
    return std::make_pair((-b - s) / a, (-b + s) / a);
}

bool Primitive::contains(const Vec3& p) const
{
    if (kind == PrimitiveKind::box)
        return bounding_box().contains(p);
    return (p - center).squaredNorm() <= radius * radius;
}

Aabb Primitive::bounding_box() const
{
    if (kind == PrimitiveKind::box)
        return {center - 0.5 * size, center + 0.5 * size};
    return {center - Vec3::Constant(radius), center + Vec3::Constant(radius)};
}

void SyntheticScene::validate() const
{
    if (!((bounds.max.array() > bounds.min.array()).all()))
        throw ContractError("scene bounds are empty");
    auto unit = [](double v) { return v >= 0 && v <= 1; };
    if (!unit(background_thermal) || !(background_rgb.array() >= 0).all() || !(background_rgb.array() <= 1).all())
        throw ContractError("scene background outside [0,1]");
    for (std::size_t i = 0; i < primitives.size(); ++i) {
        const auto& p = primitives[i];
        const auto tag = "primitive " + std::to_string(i);
        if (!(p.density >= 0) || !std::isfinite(p.density))
            throw ContractError(tag + " has negative or non-finite density");
        if (p.kind == PrimitiveKind::box && !(p.size.array() > 0).all())
            throw ContractError(tag + " has a non-positive size");
        if (p.kind == PrimitiveKind::sphere && !(p.radius > 0))
            throw ContractError(tag + " has a non-positive radius");
        if (!bounds.contains(p.bounding_box()))
            throw ContractError(tag + " leaves the scene bounds");
        if (!(p.rgb.array() >= 0).all() || !(p.rgb.array() <= 1).all() || !unit(p.thermal))
            throw ContractError(tag + " has colors outside [0,1]");
    }
}

PointSample query_point(const SyntheticScene& scene, const Vec3& p)
{
    PointSample s;
    for (const auto& prim : scene.primitives) {
        if (!prim.contains(p))
            continue;
        s.sigma += prim.density;
        s.rgb += prim.density * prim.rgb;
        s.thermal += prim.density * prim.thermal;
    }
    if (s.sigma > 0) {
        s.rgb /= s.sigma;
        s.thermal /= s.sigma;
    }
    return s;
}

Vec3 oracle_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir, Modality m, double t_min)
{
    struct Span {
        double t0, t1;
        const Primitive* prim;
    };
    std::vector<Span> spans;
    std::vector<double> cuts;
    for (const auto& prim : scene.primitives) {
        const auto hit = prim.intersect(origin, dir);
        if (!hit)
            continue;
        const double t0 = std::max(hit->first, t_min);
        const double t1 = hit->second;
        if (!(t1 > t0))
            continue;
        spans.push_back({t0, t1, &prim});
        cuts.push_back(t0);
        cuts.push_back(t1);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    Vec3 color = Vec3::Zero();
    double transmittance = 1.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        double sigma = 0;
        Vec3 emit = Vec3::Zero();
        for (const auto& s : spans) {
            if (s.t0 <= a && s.t1 >= b) {
                sigma += s.prim->density;
                emit += s.prim->density *
                        (m == Modality::rgb ? s.prim->rgb : Vec3::Constant(s.prim->thermal));
            }
        }
        if (sigma <= 0)
            continue;
        const double alpha = -std::expm1(-sigma * (b - a));
        color += transmittance * alpha * (emit / sigma);
        transmittance *= 1 - alpha;
    }
    const Vec3 bg = m == Modality::rgb ? scene.background_rgb : Vec3::Constant(scene.background_thermal);
    return color + transmittance * bg;
}

ImageF oracle_render(const SyntheticScene& scene, const render::CameraModel& camera, Modality m)
{
    scene.validate();
    camera.validate();
    const auto rays = render::generate_all_rays(camera);
    const int channels = m == Modality::rgb ? 3 : 1;
    ImageF img(camera.width, camera.height, channels);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        const Vec3 c = oracle_ray(scene, rays.rays[i].origin, rays.rays[i].direction, m);
        for (int ch = 0; ch < channels; ++ch)
            img.data[i * channels + ch] = c[ch];
    }
    return img;
}

namespace {

Primitive box(Vec3 center, Vec3 size, double density, Vec3 rgb, double thermal)
{
    Primitive p;
    p.kind = PrimitiveKind::box;
    p.center = center;
    p.size = size;
    p.density = density;
    p.rgb = rgb;
    p.thermal = thermal;
    return p;
}

Primitive sphere(Vec3 center, double radius, double density, Vec3 rgb, double thermal)
{
    Primitive p;
    p.kind = PrimitiveKind::sphere;
    p.center = center;
    p.radius = radius;
    p.density = density;
    p.rgb = rgb;
    p.thermal = thermal;
    return p;
}

} // namespace

SyntheticScene builtin_scene(const std::string& name)
{
    SyntheticScene s;
    if (name == "empty")
        return s;
    if (name == "slab") {
        s.primitives.push_back(box({0, 0, 0}, {1.6, 1.6, 0.4}, 4.0, {0.8, 0.3, 0.2}, 0.7));
        s.background_thermal = 0.2;
        return s;
    }
    if (name == "garden") {
        // Soil bed, two leafy blocks and three warm fruit.
        s.primitives.push_back(box({0, -0.8, 0}, {1.9, 0.3, 1.9}, 12.0, {0.45, 0.3, 0.18}, 0.35));
        s.primitives.push_back(box({-0.45, -0.25, -0.3}, {0.5, 0.8, 0.5}, 6.0, {0.2, 0.6, 0.2}, 0.3));
        s.primitives.push_back(box({0.5, -0.35, 0.35}, {0.6, 0.6, 0.4}, 6.0, {0.25, 0.5, 0.15}, 0.3));
        s.primitives.push_back(sphere({-0.45, 0.35, -0.3}, 0.25, 20.0, {0.45, 0.1, 0.5}, 0.9));
        s.primitives.push_back(sphere({0.5, 0.15, 0.35}, 0.22, 20.0, {0.5, 0.15, 0.55}, 0.85));
        s.primitives.push_back(sphere({0.1, -0.45, -0.55}, 0.18, 20.0, {0.9, 0.75, 0.2}, 0.8));
        s.background_thermal = 0.2;
        return s;
    }
    throw ContractError("unknown scene '" + name + "' (expected garden, slab, empty or a scene file)");
}

SyntheticScene random_scene(std::uint64_t seed, int count)
{
    if (count < 0)
        throw ContractError("random_scene needs count >= 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SyntheticScene s;
    s.background_rgb = Vec3(u(rng), u(rng), u(rng)) * 0.3;
    s.background_thermal = 0.3 * u(rng);
    for (int i = 0; i < count; ++i) {
        const double half = 0.15 + 0.3 * u(rng);
        Vec3 c;
        for (int a = 0; a < 3; ++a)
            c[a] = (1 - half) * (2 * u(rng) - 1);
        const double density = 0.5 + 4.5 * u(rng);
        const Vec3 rgb(u(rng), u(rng), u(rng));
        const double thermal = u(rng);
        if (u(rng) < 0.5)
            s.primitives.push_back(box(c, Vec3(2 * half, 2 * half * (0.5 + 0.5 * u(rng)), 2 * half), density, rgb,
                                       thermal));
        else
            s.primitives.push_back(sphere(c, half, density, rgb, thermal));
    }
    s.validate();
    return s;
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

nlohmann::json to_json(const SyntheticScene& s)
{
    nlohmann::json prims = nlohmann::json::array();
    for (const auto& p : s.primitives) {
        nlohmann::json j = {{"kind", p.kind == PrimitiveKind::box ? "box" : "sphere"},
                            {"center", vec_json(p.center)},
                            {"density", p.density},
                            {"rgb", vec_json(p.rgb)},
                            {"thermal", p.thermal}};
        if (p.kind == PrimitiveKind::box)
            j["size"] = vec_json(p.size);
        else
            j["radius"] = p.radius;
        prims.push_back(std::move(j));
    }
    return {{"bounds", field::to_json(s.bounds)},
            {"background", {{"rgb", vec_json(s.background_rgb)}, {"thermal", s.background_thermal}}},
            {"primitives", prims}};
}

SyntheticScene scene_from_json(const nlohmann::json& j)
{
    try {
        SyntheticScene s;
        if (j.contains("bounds"))
            s.bounds = field::aabb_from_json(j.at("bounds"));
        if (j.contains("background")) {
            s.background_rgb = vec_from(j.at("background").at("rgb"));
            s.background_thermal = j.at("background").at("thermal").get<double>();
        }
        for (const auto& pj : j.at("primitives")) {
            Primitive p;
            const auto kind = pj.at("kind").get<std::string>();
            if (kind == "box") {
                p.kind = PrimitiveKind::box;
                p.size = vec_from(pj.at("size"));
            } else if (kind == "sphere") {
                p.kind = PrimitiveKind::sphere;
                p.radius = pj.at("radius").get<double>();
            } else {
                throw FormatError("unknown primitive kind '" + kind + "'");
            }
            p.center = vec_from(pj.at("center"));
            p.density = pj.at("density").get<double>();
            p.rgb = vec_from(pj.at("rgb"));
            p.thermal = pj.at("thermal").get<double>();
            s.primitives.push_back(p);
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("scene description: ") + e.what());
    }
}

} // namespace mmrf::synth
