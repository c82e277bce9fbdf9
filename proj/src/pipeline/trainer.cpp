// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/pipeline/trainer.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/core/hash.hpp"
#include "mmrf/diff/checkpoint.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace mmrf::pipeline {

namespace {

// Training allocates the same large buffers every step; keeping them in the
// heap instead of fresh mmaps avoids page-fault churn.
void keep_large_blocks_in_heap()
{
#if defined(__GLIBC__)
    static const bool done = [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        return true;
    }();
    (void)done;
#endif
}

bool bits_equal(double a, double b)
{
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

} // namespace

bool TrainTrace::same_losses(const TrainTrace& other) const
{
    if (records.size() != other.records.size() || checkpoints != other.checkpoints)
        return false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& a = records[i];
        const auto& b = other.records[i];
        if (a.iteration != b.iteration || !bits_equal(a.l_rgb, b.l_rgb) || !bits_equal(a.l_th, b.l_th) ||
            !bits_equal(a.l_reg, b.l_reg) || !bits_equal(a.total, b.total))
            return false;
    }
    return true;
}

nlohmann::json to_json(const TrainTrace& t)
{
    nlohmann::json rec = nlohmann::json::array();
    for (const auto& r : t.records)
        rec.push_back({{"iteration", r.iteration},
                       {"l_rgb", r.l_rgb},
                       {"l_th", r.l_th},
                       {"l_reg", r.l_reg},
                       {"total", r.total},
                       {"wall_seconds", r.wall_seconds}});
    return {{"records", rec}, {"checkpoints", t.checkpoints}, {"warnings", t.warnings}};
}

render::RenderOptions render_options(const TrainConfig& c, const data::Manifest& m)
{
    render::RenderOptions o;
    o.n_coarse = c.n_coarse;
    o.n_fine = c.n_fine;
    o.background = m.background;
    return o;
}

field::ModelSpec model_spec(const TrainConfig& c, const data::Manifest& m)
{
    auto spec = c.model;
    spec.coarse.bounds = m.bounds;
    spec.fine.bounds = m.bounds;
    return spec;
}

namespace {

diff::AdamOptions adam_options(const TrainConfig& c)
{
    diff::AdamOptions o;
    o.lr = c.lr;
    o.group_lr["field"] = c.field_lr;
    o.final_lr_factor = c.final_lr_factor;
    o.decay_steps = c.iterations;
    return o;
}

class PixelSampler {
public:
    PixelSampler(const SceneDataset& d, const TrainConfig& c)
        : frames_(d.split(Split::train, c.holdout_every)), width_(d.width()), height_(d.height()),
          stratify_(c.stratify_frames)
    {
        if (frames_.empty())
            throw ContractError("no training frames left after the holdout split");
    }

    std::vector<PixelRef> draw(std::mt19937_64& rng, int batch) const
    {
        const auto per_frame = static_cast<std::uint64_t>(width_) * height_;
        std::vector<PixelRef> out(static_cast<std::size_t>(batch));
        if (stratify_) {
            std::uniform_int_distribution<std::uint64_t> pix(0, per_frame - 1);
            for (int i = 0; i < batch; ++i) {
                const auto p = pix(rng);
                out[i] = {frames_[static_cast<std::size_t>(i) % frames_.size()], static_cast<int>(p % width_),
                          static_cast<int>(p / width_)};
            }
            return out;
        }
        std::uniform_int_distribution<std::uint64_t> any(0, per_frame * frames_.size() - 1);
        for (int i = 0; i < batch; ++i) {
            const auto k = any(rng);
            const auto p = k % per_frame;
            out[i] = {frames_[k / per_frame], static_cast<int>(p % width_), static_cast<int>(p / width_)};
        }
        return out;
    }

private:
    std::vector<std::size_t> frames_;
    int width_;
    int height_;
    bool stratify_;
};

metrics::Supervision gather_truth(const SceneDataset& d, std::span<const PixelRef> pixels)
{
    const auto n = static_cast<Eigen::Index>(pixels.size());
    metrics::Supervision s;
    s.rgb.resize(n, 3);
    s.thermal.resize(n, 3);
    s.events.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pixels[i];
        const auto& rgb = d.rgb(p.frame);
        const double th = d.thermal(p.frame).at(p.x, p.y);
        const double ev = d.events(p.frame).at(p.x, p.y);
        for (int c = 0; c < 3; ++c) {
            s.rgb(i, c) = rgb.at(p.x, p.y, c);
            s.thermal(i, c) = th;
            s.events(i, c) = ev;
        }
    }
    return s;
}

render::RayBundle make_rays(const SceneDataset& d, std::span<const PixelRef> pixels, const Aabb& bounds)
{
    render::RayBundle bundle;
    bundle.rays.reserve(pixels.size());
    std::vector<render::CameraModel> cams;
    for (std::size_t f = 0; f < d.frame_count(); ++f)
        cams.push_back(d.camera(f));
    for (const auto& p : pixels) {
        const render::PixelCoord px{static_cast<double>(p.x), static_cast<double>(p.y)};
        auto one = render::generate_rays(cams[p.frame], std::span(&px, 1), static_cast<int>(p.frame));
        bundle.rays.push_back(one.rays.front());
    }
    render::clip_to_box(bundle, bounds);
    return bundle;
}

std::string breakdown(const TraceRecord& r)
{
    std::ostringstream s;
    s.precision(17);
    s << "l_rgb=" << r.l_rgb << " l_th=" << r.l_th << " l_reg=" << r.l_reg << " total=" << r.total;
    return s.str();
}

} // namespace

void save_model(const std::filesystem::path& path, const field::RadianceModel& model, const diff::Adam* optimizer,
                const TrainConfig& config, const SceneDataset& dataset, int iterations_done)
{
    const auto ro = render_options(config, dataset.manifest());
    const auto& in = dataset.manifest().intrinsics;
    nlohmann::json meta = {
        {"kind", "mmrf-model"},
        {"config", to_json(config)},
        {"config_hash", hex64(config_hash(config))},
        {"manifest_hash", hex64(dataset.manifest_hash())},
        {"dataset", std::filesystem::absolute(dataset.dir()).lexically_normal().string()},
        {"intrinsics",
         {{"width", in.width}, {"height", in.height}, {"fx", in.fx}, {"fy", in.fy}, {"cx", in.cx}, {"cy", in.cy}}},
        {"model", field::to_json(model.spec())},
        {"render",
         {{"background_rgb", {ro.background.rgb.x(), ro.background.rgb.y(), ro.background.rgb.z()}},
          {"background_xspec", {ro.background.xspec.x(), ro.background.xspec.y(), ro.background.xspec.z()}}}},
        {"iterations_done", iterations_done}};
    diff::save_checkpoint(path, model.store(), optimizer, meta);
}

LoadedModel load_model(const std::filesystem::path& path)
{
    auto ck = diff::load_checkpoint(path);
    const auto& meta = ck.metadata;
    try {
        if (meta.at("kind").get<std::string>() != "mmrf-model")
            throw FormatError(path.string() + ": not a model checkpoint");
        auto spec = field::model_spec_from_json(meta.at("model"));
        auto config = train_config_from_json(meta.at("config"));
        render::RenderOptions ro;
        ro.n_coarse = config.n_coarse;
        ro.n_fine = config.n_fine;
        const auto bg = meta.at("render").at("background_rgb").get<std::vector<double>>();
        const auto bx = meta.at("render").at("background_xspec").get<std::vector<double>>();
        if (bg.size() != 3 || bx.size() != 3)
            throw FormatError(path.string() + ": background must have 3 entries");
        ro.background.rgb = Vec3(bg[0], bg[1], bg[2]);
        ro.background.xspec = Vec3(bx[0], bx[1], bx[2]);
        const auto& in = meta.at("intrinsics");
        data::Intrinsics intr{in.at("width").get<int>(), in.at("height").get<int>(), in.at("fx").get<double>(),
                              in.at("fy").get<double>(),  in.at("cx").get<double>(),    in.at("cy").get<double>()};
        return {field::RadianceModel(spec, std::move(ck.params)), std::move(config), ro, intr, meta};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": checkpoint metadata: " + e.what());
    }
}

TrainResult train(const SceneDataset& dataset, const TrainConfig& config, const std::filesystem::path& checkpoint,
                  const TrainHooks& hooks)
{
    config.validate();
    keep_large_blocks_in_heap();
    const auto& manifest = dataset.manifest();
    TrainResult res{field::RadianceModel(model_spec(config, manifest)), diff::Adam(adam_options(config)), {}};
    auto& model = res.model;
    const auto options = render_options(config, manifest);
    const PixelSampler sampler(dataset, config);
    std::mt19937_64 rng(config.seed);
    const auto t0 = std::chrono::steady_clock::now();

    for (int it = 1; it <= config.iterations; ++it) {
        const auto pixels = sampler.draw(rng, config.batch);
        if (hooks.on_batch)
            hooks.on_batch(it, pixels);
        const auto bundle = make_rays(dataset, pixels, model.bounds());
        const auto truth = gather_truth(dataset, pixels);

        diff::Tape tape(&model.store());
        const auto out = render::render_rays(tape, model, bundle, options, &rng);
        std::vector<metrics::PassPrediction> passes{{out.fine.rgb, out.fine.xspec}};
        if (config.supervise_coarse)
            passes.push_back({out.coarse.rgb, out.coarse.xspec});
        auto loss = metrics::total_loss(tape, config.weights, passes, truth, config.strict_modalities);

        TraceRecord rec;
        rec.iteration = it;
        for (const auto& p : loss.per_pass) {
            rec.l_rgb += p.rgb;
            rec.l_th += p.thermal;
            rec.l_reg += p.reg;
        }
        rec.total = tape.scalar(loss.total);
        if (!std::isfinite(rec.total))
            throw NonFiniteError("non-finite loss at iteration " + std::to_string(it) + ": " + breakdown(rec));
        if (it == 1)
            res.trace.warnings = loss.warnings;

        model.store().zero_grads();
        tape.backward(loss.total);
        res.optimizer.step(model.store());
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.trace.records.push_back(rec);
        if (hooks.on_iteration)
            hooks.on_iteration(rec);

        if (!checkpoint.empty() && config.checkpoint_every > 0 && it % config.checkpoint_every == 0 &&
            it != config.iterations) {
            auto p = checkpoint;
            p += ".iter" + std::to_string(it);
            save_model(p, model, &res.optimizer, config, dataset, it);
            res.trace.checkpoints.push_back(it);
        }
    }
    if (!checkpoint.empty()) {
        save_model(checkpoint, model, &res.optimizer, config, dataset, config.iterations);
        res.trace.checkpoints.push_back(config.iterations);
    }
    return res;
}

} // namespace mmrf::pipeline
