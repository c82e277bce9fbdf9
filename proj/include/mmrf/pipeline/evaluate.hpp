// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/pipeline/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mmrf::pipeline {

enum class Head { rgb, xspec };

Head head_from_string(std::string_view name);
std::string_view to_string(Head h);

/// Renders one head of a checkpoint at `camera` and writes an 8-bit PNG.
void render_view(const std::filesystem::path& checkpoint, const render::CameraModel& camera, Head head,
                 const std::filesystem::path& out_png);

/// Score of one image pair. PSNR is capped at kPsnrCap.
struct PairScore {
    double psnr = 0;
    double ssim = 0;
    /// Mean over pixels of the Euclidean distance between 3-channel colors.
    double distance = 0;
};

struct ViewScores {
    std::size_t frame = 0;
    PairScore rgb;            ///< rgb head vs RGB image
    PairScore xspec_thermal;  ///< xspec head vs enhanced thermal
    PairScore xspec_rgb;      ///< xspec head vs RGB image
    PairScore xspec_events;   ///< xspec head vs event frame
};

struct EvalReport {
    Split split = Split::holdout;
    std::vector<ViewScores> views;
    ViewScores mean;
};

PairScore score_pair(const ImageF& rendered, const ImageF& truth);

/// Renders every view of the split with both heads and scores them.
/// Throws ContractError for an empty split.
EvalReport evaluate(const field::RadianceModel& model, const render::RenderOptions& options,
                    const SceneDataset& dataset, Split split, int holdout_every);

/// Report document with per-view scores, means, loss weights, config and hashes.
nlohmann::json to_json(const EvalReport& r, const TrainConfig& config, std::uint64_t manifest_hash);

/// Trains and evaluates the six modality subsets, writing per-run checkpoints
/// and reports plus ablation.json and ablation.tsv into `out_dir`.
/// Returns the summary document.
nlohmann::json ablate(const SceneDataset& dataset, const TrainConfig& base, const std::filesystem::path& out_dir);

} // namespace mmrf::pipeline
