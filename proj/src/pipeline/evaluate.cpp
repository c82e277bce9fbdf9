// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/pipeline/evaluate.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/core/hash.hpp"
#include "mmrf/core/png_io.hpp"
#include "mmrf/data/manifest.hpp"
#include "mmrf/metrics/image_metrics.hpp"

#include <cmath>
#include <sstream>

namespace mmrf::pipeline {

namespace fs = std::filesystem;

Head head_from_string(std::string_view name)
{
    if (name == "rgb")
        return Head::rgb;
    if (name == "xspec")
        return Head::xspec;
    throw ContractError("unknown head '" + std::string(name) + "' (valid heads: rgb, xspec)");
}

std::string_view to_string(Head h)
{
    return h == Head::rgb ? "rgb" : "xspec";
}

void render_view(const fs::path& checkpoint, const render::CameraModel& camera, Head head, const fs::path& out_png)
{
    const auto loaded = load_model(checkpoint);
    const auto img = render::render_image(loaded.model, camera, loaded.render);
    write_png(out_png, to_8bit(head == Head::rgb ? img.rgb : img.xspec));
}

PairScore score_pair(const ImageF& rendered, const ImageF& truth)
{
    const ImageF t = truth.channels == 1 && rendered.channels == 3 ? replicate_to_rgb(truth) : truth;
    PairScore s;
    s.psnr = metrics::psnr_capped(rendered, t);
    s.ssim = metrics::ssim(rendered, t);
    double dist = 0;
    const auto ch = static_cast<std::size_t>(rendered.channels);
    for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
        double d2 = 0;
        for (std::size_t c = 0; c < ch; ++c) {
            const double d = rendered.data[p * ch + c] - t.data[p * ch + c];
            d2 += d * d;
        }
        dist += std::sqrt(d2);
    }
    s.distance = dist / static_cast<double>(rendered.pixel_count());
    return s;
}

EvalReport evaluate(const field::RadianceModel& model, const render::RenderOptions& options,
                    const SceneDataset& dataset, Split split, int holdout_every)
{
    const auto frames = dataset.split(split, holdout_every);
    if (frames.empty())
        throw ContractError(std::string("the ") + std::string(to_string(split)) + " split is empty");
    EvalReport r;
    r.split = split;
    for (auto f : frames) {
        const auto img = render::render_image(model, dataset.camera(f), options);
        ViewScores v;
        v.frame = f;
        v.rgb = score_pair(img.rgb, dataset.rgb(f));
        v.xspec_thermal = score_pair(img.xspec, dataset.thermal(f));
        v.xspec_rgb = score_pair(img.xspec, dataset.rgb(f));
        v.xspec_events = score_pair(img.xspec, dataset.events(f));
        r.views.push_back(v);
    }
    auto accumulate = [&](PairScore ViewScores::*member) {
        PairScore m;
        for (const auto& v : r.views) {
            m.psnr += (v.*member).psnr;
            m.ssim += (v.*member).ssim;
            m.distance += (v.*member).distance;
        }
        const double n = static_cast<double>(r.views.size());
        m.psnr /= n;
        m.ssim /= n;
        m.distance /= n;
        return m;
    };
    r.mean.rgb = accumulate(&ViewScores::rgb);
    r.mean.xspec_thermal = accumulate(&ViewScores::xspec_thermal);
    r.mean.xspec_rgb = accumulate(&ViewScores::xspec_rgb);
    r.mean.xspec_events = accumulate(&ViewScores::xspec_events);
    return r;
}

namespace {

nlohmann::json score_json(const PairScore& s)
{
    return {{"psnr", s.psnr}, {"ssim", s.ssim}, {"distance", s.distance}};
}

nlohmann::json view_json(const ViewScores& v)
{
    return {{"rgb", {{"rgb", score_json(v.rgb)}}},
            {"xspec",
             {{"thermal", score_json(v.xspec_thermal)},
              {"rgb", score_json(v.xspec_rgb)},
              {"events", score_json(v.xspec_events)}}}};
}

} // namespace

nlohmann::json to_json(const EvalReport& r, const TrainConfig& config, std::uint64_t manifest_hash)
{
    nlohmann::json views = nlohmann::json::array();
    for (const auto& v : r.views) {
        auto j = view_json(v);
        j["frame"] = v.frame;
        views.push_back(std::move(j));
    }
    return {{"split", std::string(to_string(r.split))},
            {"view_count", r.views.size()},
            {"views", views},
            {"mean", view_json(r.mean)},
            {"psnr_cap", metrics::kPsnrCap},
            {"loss_weights", metrics::to_json(config.weights)},
            {"config", to_json(config)},
            {"config_hash", hex64(config_hash(config))},
            {"manifest_hash", hex64(manifest_hash)}};
}

nlohmann::json ablate(const SceneDataset& dataset, const TrainConfig& base, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

    nlohmann::json rows = nlohmann::json::array();
    std::ostringstream tsv;
    tsv.precision(6);
    tsv << "config\trgb_psnr\trgb_ssim\txspec_thermal_psnr\txspec_thermal_ssim\txspec_rgb_distance\t"
           "xspec_events_distance\n";
    for (auto a : metrics::kAllAblations) {
        auto config = base;
        config.weights = metrics::ablation_weights(a, base.weights);
        std::string name(metrics::to_string(a));
        for (auto& ch : name)
            if (ch == '+')
                ch = '_';
        const auto result = train(dataset, config, out_dir / (name + ".ckpt"));
        const auto report =
            evaluate(result.model, render_options(config, dataset.manifest()), dataset, Split::holdout,
                     config.holdout_every);
        data::write_text(out_dir / (name + ".json"),
                         data::dump_json(to_json(report, config, dataset.manifest_hash())));
        const auto& m = report.mean;
        rows.push_back({{"config", std::string(metrics::to_string(a))},
                        {"loss_weights", metrics::to_json(config.weights)},
                        {"final_loss", result.trace.records.empty() ? 0.0 : result.trace.records.back().total},
                        {"mean", view_json(m)}});
        tsv << metrics::to_string(a) << '\t' << m.rgb.psnr << '\t' << m.rgb.ssim << '\t' << m.xspec_thermal.psnr
            << '\t' << m.xspec_thermal.ssim << '\t' << m.xspec_rgb.distance << '\t' << m.xspec_events.distance
            << '\n';
    }
    nlohmann::json summary = {{"rows", rows},
                              {"base_config", to_json(base)},
                              {"manifest_hash", hex64(dataset.manifest_hash())}};
    data::write_text(out_dir / "ablation.json", data::dump_json(summary));
    data::write_text(out_dir / "ablation.tsv", tsv.str());
    return summary;
}

} // namespace mmrf::pipeline
