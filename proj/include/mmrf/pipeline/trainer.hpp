// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/adam.hpp"
#include "mmrf/field/model.hpp"
#include "mmrf/pipeline/config.hpp"
#include "mmrf/pipeline/dataset.hpp"
#include "mmrf/render/renderer.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mmrf::pipeline {

struct TraceRecord {
    int iteration = 0;
    /// Unweighted term values summed over the supervised passes.
    double l_rgb = 0;
    double l_th = 0;
    double l_reg = 0;
    double total = 0;
    double wall_seconds = 0;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
    /// Iterations after which a checkpoint was written.
    std::vector<int> checkpoints;
    std::vector<std::string> warnings;

    /// True when the loss columns of both traces are bitwise equal (wall time ignored).
    bool same_losses(const TrainTrace& other) const;
};

nlohmann::json to_json(const TrainTrace& t);

struct PixelRef {
    std::size_t frame = 0;
    int x = 0;
    int y = 0;
};

struct TrainHooks {
    /// Sees every sampled batch before rendering.
    std::function<void(int iteration, std::span<const PixelRef>)> on_batch;
    std::function<void(const TraceRecord&)> on_iteration;
};

struct TrainResult {
    field::RadianceModel model;
    diff::Adam optimizer;
    TrainTrace trace;
};

/// Render settings implied by a config and dataset.
render::RenderOptions render_options(const TrainConfig& c, const data::Manifest& m);
/// Model layout for a config on a dataset (bounds taken from the manifest).
field::ModelSpec model_spec(const TrainConfig& c, const data::Manifest& m);

/// Runs the optimization. When `checkpoint` is non-empty the final state is
/// saved there, plus `<checkpoint>.iterN` every config.checkpoint_every steps.
/// Throws NonFiniteError with the iteration and term breakdown if the loss
/// stops being finite.
TrainResult train(const SceneDataset& dataset, const TrainConfig& config,
                  const std::filesystem::path& checkpoint = {}, const TrainHooks& hooks = {});

/// Everything a checkpoint carries besides raw parameters.
struct LoadedModel {
    field::RadianceModel model;
    TrainConfig config;
    render::RenderOptions render;
    data::Intrinsics intrinsics;
    nlohmann::json metadata;
};

/// Checkpoint with the model layout, config, render settings, dataset
/// directory, intrinsics and manifest hash in its metadata.
void save_model(const std::filesystem::path& path, const field::RadianceModel& model, const diff::Adam* optimizer,
                const TrainConfig& config, const SceneDataset& dataset, int iterations_done);
LoadedModel load_model(const std::filesystem::path& path);

} // namespace mmrf::pipeline
