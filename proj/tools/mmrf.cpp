// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synth, lowlight, train, render, eval, ablate.
// Failures print one JSON line {"error": kind, "message": text} to stderr.

#include "mmrf/core/error.hpp"
#include "mmrf/core/hash.hpp"
#include "mmrf/data/manifest.hpp"
#include "mmrf/pipeline/evaluate.hpp"
#include "mmrf/synth/dataset.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mmrf;

namespace {

enum ExitCode { ok = 0, usage = 2, contract = 3, io = 4, format = 5, non_finite = 6, internal = 7 };

int fail(const std::string& kind, const std::string& message, int code)
{
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
    return code;
}

std::pair<int, int> parse_resolution(const std::string& s)
{
    int w = 0;
    int h = 0;
    char x = 0;
    if (std::sscanf(s.c_str(), "%d%c%d", &w, &x, &h) != 3 || (x != 'x' && x != 'X') || w < 1 || h < 1)
        throw ContractError("resolution must look like WxH, got '" + s + "'");
    return {w, h};
}

synth::SyntheticScene load_scene(const std::string& name)
{
    if (fs::is_regular_file(name))
        return synth::scene_from_json(nlohmann::json::parse(data::read_text(name)));
    return synth::builtin_scene(name);
}

struct TrainArgs {
    pipeline::TrainConfig config;
    std::vector<std::string> enable;
    std::vector<std::string> disable;
    std::vector<int> hidden;
    int coarse_res = 0;
    int fine_res = 0;
    std::string storage;
    std::string ablation;
    bool no_coarse_supervision = false;

    void add_to(CLI::App* cmd)
    {
        auto& c = config;
        cmd->add_option("--iters", c.iterations, "Training iterations")->capture_default_str();
        cmd->add_option("--batch", c.batch, "Rays per iteration")->capture_default_str();
        cmd->add_option("--coarse", c.n_coarse, "Coarse samples per ray")->capture_default_str();
        cmd->add_option("--fine", c.n_fine, "Fine samples per ray")->capture_default_str();
        cmd->add_option("--lr", c.lr, "Learning rate of the head networks")->capture_default_str();
        cmd->add_option("--field-lr", c.field_lr, "Learning rate of the feature volumes")->capture_default_str();
        cmd->add_option("--lr-final-factor", c.final_lr_factor, "Final learning-rate fraction")
            ->capture_default_str();
        cmd->add_option("--w-rgb", c.weights.w_rgb, "RGB loss weight")->capture_default_str();
        cmd->add_option("--w-th", c.weights.w_th, "Thermal loss weight")->capture_default_str();
        cmd->add_option("--w-reg", c.weights.w_reg, "Cross-spectral loss weight")->capture_default_str();
        cmd->add_option("--enable", enable, "Enable loss terms (rgb, th, reg)");
        cmd->add_option("--disable", disable, "Disable loss terms (rgb, th, reg)");
        cmd->add_option("--ablation", ablation, "Modality preset: rgb, rgb+events, rgb+thermal, thermal, "
                                                "thermal+events, all");
        cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        cmd->add_flag("--deterministic", c.deterministic, "Deterministic mode (always on)");
        cmd->add_option("--holdout-every", c.holdout_every, "Hold out every N-th frame (0: none)")
            ->capture_default_str();
        cmd->add_option("--checkpoint-every", c.checkpoint_every, "Intermediate checkpoint interval")
            ->capture_default_str();
        cmd->add_flag("--no-coarse-supervision", no_coarse_supervision, "Supervise the fine pass only");
        cmd->add_flag("--stratify-frames", c.stratify_frames, "Equal rays per training frame");
        cmd->add_flag("--strict", c.strict_modalities, "Missing modalities are errors");
        cmd->add_option("--hidden", hidden, "Hidden widths of the color heads");
        cmd->add_option("--dir-freqs", c.model.heads.dir_frequencies, "Direction encoding frequencies")
            ->capture_default_str();
        cmd->add_option("--channels", c.model.coarse.channels, "Feature channels")->capture_default_str();
        cmd->add_option("--coarse-res", coarse_res, "Coarse volume resolution per axis");
        cmd->add_option("--fine-res", fine_res, "Fine volume resolution per axis");
        cmd->add_option("--storage", storage, "Volume storage: dense or cp");
        cmd->add_option("--rank", c.model.coarse.rank, "CP rank")->capture_default_str();
        cmd->add_option("--model-seed", c.model.seed, "Initialization seed")->capture_default_str();
        cmd->add_option("--event-clip", c.preprocess.event_clip, "Events mapped to full event-frame range")
            ->capture_default_str();
        cmd->add_option("--thermal-grid", c.preprocess.thermal.grid, "Thermal range grid cells per axis")
            ->capture_default_str();
        cmd->add_option("--thermal-smoothing", c.preprocess.thermal.smoothing_rounds,
                        "Thermal range smoothing rounds")
            ->capture_default_str();
    }

    pipeline::TrainConfig finish()
    {
        auto c = config;
        if (!ablation.empty())
            c.weights = metrics::ablation_weights(metrics::ablation_from_string(ablation), c.weights);
        auto flag = [&](const std::string& name, bool on) {
            if (name == "rgb")
                c.weights.enable_rgb = on;
            else if (name == "th")
                c.weights.enable_th = on;
            else if (name == "reg")
                c.weights.enable_reg = on;
            else
                throw ContractError("unknown loss term '" + name + "' (expected rgb, th, reg)");
        };
        for (const auto& e : enable)
            flag(e, true);
        for (const auto& d : disable)
            flag(d, false);
        if (!hidden.empty())
            c.model.heads.hidden = hidden;
        c.model.fine.channels = c.model.coarse.channels;
        c.model.fine.rank = c.model.coarse.rank;
        if (coarse_res > 0)
            c.model.coarse.resolution = {coarse_res, coarse_res, coarse_res};
        if (fine_res > 0)
            c.model.fine.resolution = {fine_res, fine_res, fine_res};
        if (!storage.empty()) {
            field::Storage st;
            if (storage == "dense")
                st = field::Storage::dense;
            else if (storage == "cp")
                st = field::Storage::cp;
            else
                throw ContractError("unknown storage '" + storage + "' (expected dense or cp)");
            c.model.coarse.storage = st;
            c.model.fine.storage = st;
        }
        if (no_coarse_supervision)
            c.supervise_coarse = false;
        c.validate();
        return c;
    }
};

int run(int argc, char** argv)
{
    CLI::App app{"Multi-modal radiance field toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-modal dataset");
    std::string scene_name = "garden";
    std::string res = "64x64";
    std::string synth_out;
    synth::TrajectorySpec traj;
    synth::DatasetOptions dopt;
    synth_cmd->add_option("--scene", scene_name, "Built-in scene name or scene JSON file")->capture_default_str();
    synth_cmd->add_option("--views", traj.views, "Number of views")->capture_default_str();
    synth_cmd->add_option("--res", res, "Image resolution WxH")->capture_default_str();
    synth_cmd->add_option("--event-threshold", dopt.event_threshold, "Log-intensity contrast threshold")
        ->capture_default_str();
    synth_cmd->add_option("--event-supersample", dopt.event_supersample, "Sub-frames per view gap for events")
        ->capture_default_str();
    synth_cmd->add_option("--thermal-noise", dopt.thermal_noise, "Raw thermal read noise (counts)")
        ->capture_default_str();
    synth_cmd->add_option("--orbit-radius", traj.radius, "Orbit radius")->capture_default_str();
    synth_cmd->add_option("--orbit-height", traj.height, "Orbit height")->capture_default_str();
    synth_cmd->add_option("--orbit-arc", traj.arc, "Swept orbit angle in radians")->capture_default_str();
    synth_cmd->add_option("--seed", dopt.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();

    // lowlight
    auto* low_cmd = app.add_subcommand("lowlight", "Write a darkened copy of a dataset");
    std::string low_src;
    std::string low_dst;
    double gain = 0.1;
    double noise = 0.0;
    std::uint64_t low_seed = 0;
    low_cmd->add_option("--data", low_src, "Source dataset")->required();
    low_cmd->add_option("--out", low_dst, "Output directory")->required();
    low_cmd->add_option("--gain", gain, "RGB gain in (0, 1]")->capture_default_str();
    low_cmd->add_option("--noise", noise, "Gaussian noise sigma")->capture_default_str();
    low_cmd->add_option("--seed", low_seed, "Noise seed")->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
    std::string data_dir;
    std::string ckpt_out;
    std::string trace_out;
    TrainArgs targs;
    train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
    train_cmd->add_option("--out", ckpt_out, "Checkpoint path")->required();
    train_cmd->add_option("--trace", trace_out, "Write the training trace as JSON");
    targs.add_to(train_cmd);

    // render
    auto* render_cmd = app.add_subcommand("render", "Render one view of a checkpoint");
    std::string ckpt_in;
    int frame_idx = -1;
    std::string pose_file;
    std::string head = "rgb";
    std::string png_out;
    std::string render_data;
    double scale = 1.0;
    render_cmd->add_option("--ckpt", ckpt_in, "Checkpoint")->required();
    auto* fi = render_cmd->add_option("--frame-idx", frame_idx, "Frame position in the dataset");
    auto* pf = render_cmd->add_option("--pose-file", pose_file, "JSON file with a 4x4 camera-to-world pose");
    fi->excludes(pf);
    render_cmd->add_option("--data", render_data, "Dataset (defaults to the one recorded in the checkpoint)");
    render_cmd->add_option("--head", head, "Head to render: rgb or xspec")->capture_default_str();
    render_cmd->add_option("--scale", scale, "Resolution factor")->capture_default_str();
    render_cmd->add_option("--out", png_out, "Output PNG")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
    std::string eval_data;
    std::string split = "holdout";
    std::string report_out;
    bool allow_mismatch = false;
    eval_cmd->add_option("--ckpt", ckpt_in, "Checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--split", split, "holdout or train")->capture_default_str();
    eval_cmd->add_option("--report", report_out, "Report path")->required();
    eval_cmd->add_flag("--allow-mismatch", allow_mismatch, "Evaluate on a dataset other than the training one");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the six modality subsets");
    std::string ablate_out;
    TrainArgs aargs;
    ablate_cmd->add_option("--data", data_dir, "Dataset directory")->required();
    ablate_cmd->add_option("--out", ablate_out, "Output directory")->required();
    aargs.add_to(ablate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("UsageError", e.what(), usage);
    }

    if (synth_cmd->parsed()) {
        const auto [w, h] = parse_resolution(res);
        dopt.intrinsics = {w, h, 2.5 * w, 2.5 * w, 0.5 * w, 0.5 * h};
        const auto m = synth::generate_dataset(load_scene(scene_name), traj, dopt, synth_out);
        std::cout << nlohmann::json{{"dataset", synth_out}, {"frames", m.frames.size()}}.dump() << std::endl;
    } else if (low_cmd->parsed()) {
        const auto m = synth::lowlight_variant(low_src, low_dst, gain, noise, low_seed);
        std::cout << nlohmann::json{{"dataset", low_dst}, {"frames", m.frames.size()}}.dump() << std::endl;
    } else if (train_cmd->parsed()) {
        const auto config = targs.finish();
        const auto ds = pipeline::SceneDataset::load(data_dir, config.preprocess);
        const auto result = pipeline::train(ds, config, ckpt_out);
        if (!trace_out.empty())
            data::write_text(trace_out, data::dump_json(pipeline::to_json(result.trace)));
        const auto& last = result.trace.records;
        std::cout << nlohmann::json{{"checkpoint", ckpt_out},
                                    {"iterations", config.iterations},
                                    {"final_loss", last.empty() ? 0.0 : last.back().total}}
                         .dump()
                  << std::endl;
    } else if (render_cmd->parsed()) {
        const auto loaded = pipeline::load_model(ckpt_in);
        render::CameraModel cam;
        if (frame_idx >= 0) {
            const auto dir = render_data.empty() ? loaded.metadata.at("dataset").get<std::string>() : render_data;
            const auto ds = pipeline::SceneDataset::load(dir, loaded.config.preprocess);
            if (static_cast<std::size_t>(frame_idx) >= ds.frame_count())
                throw ContractError("frame index " + std::to_string(frame_idx) + " out of range (dataset has " +
                                    std::to_string(ds.frame_count()) + " frames)");
            cam = ds.camera(static_cast<std::size_t>(frame_idx));
        } else if (!pose_file.empty()) {
            cam = loaded.intrinsics.camera(render::pose_from_json(nlohmann::json::parse(data::read_text(pose_file))));
        } else {
            throw ContractError("render needs --frame-idx or --pose-file");
        }
        const auto h = pipeline::head_from_string(head);
        pipeline::render_view(ckpt_in, scale == 1.0 ? cam : cam.scaled(scale), h, png_out);
        std::cout << nlohmann::json{{"image", png_out}}.dump() << std::endl;
    } else if (eval_cmd->parsed()) {
        const auto loaded = pipeline::load_model(ckpt_in);
        const auto ds = pipeline::SceneDataset::load(eval_data, loaded.config.preprocess);
        const auto recorded = loaded.metadata.at("manifest_hash").get<std::string>();
        if (recorded != hex64(ds.manifest_hash()) && !allow_mismatch)
            throw ContractError("dataset manifest hash " + hex64(ds.manifest_hash()) +
                                " differs from the checkpoint's " + recorded + " (use --allow-mismatch)");
        const auto report =
            pipeline::evaluate(loaded.model, loaded.render, ds, pipeline::split_from_string(split),
                               loaded.config.holdout_every);
        data::write_text(report_out, data::dump_json(pipeline::to_json(report, loaded.config, ds.manifest_hash())));
        std::cout << nlohmann::json{{"report", report_out},
                                    {"rgb_psnr", report.mean.rgb.psnr},
                                    {"rgb_ssim", report.mean.rgb.ssim},
                                    {"xspec_thermal_psnr", report.mean.xspec_thermal.psnr}}
                         .dump()
                  << std::endl;
    } else if (ablate_cmd->parsed()) {
        const auto config = aargs.finish();
        const auto ds = pipeline::SceneDataset::load(data_dir, config.preprocess);
        pipeline::ablate(ds, config, ablate_out);
        std::cout << nlohmann::json{{"ablation", (fs::path(ablate_out) / "ablation.json").string()}}.dump()
                  << std::endl;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const ContractError& e) {
        return fail("ContractError", e.what(), contract);
    } catch (const IoError& e) {
        return fail("IoError", e.what(), io);
    } catch (const FormatError& e) {
        return fail("FormatError", e.what(), format);
    } catch (const NonFiniteError& e) {
        return fail("NonFiniteError", e.what(), non_finite);
    } catch (const OutOfBoundsError& e) {
        return fail("OutOfBoundsError", e.what(), contract);
    } catch (const nlohmann::json::exception& e) {
        return fail("FormatError", e.what(), format);
    } catch (const std::exception& e) {
        return fail("InternalError", e.what(), internal);
    }
}
