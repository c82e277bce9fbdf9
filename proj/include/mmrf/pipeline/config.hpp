// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/field/model.hpp"
#include "mmrf/metrics/losses.hpp"
#include "mmrf/pipeline/dataset.hpp"

#include <json.hpp>

#include <cstdint>

namespace mmrf::pipeline {

struct TrainConfig {
    /// Desk-scale default; long runs use 30000.
    int iterations = 2000;
    int batch = 1024;
    int n_coarse = 64;
    int n_fine = 64;
    /// Field layout and head sizes. Bounds are replaced by the dataset's.
    field::ModelSpec model = default_model();
    metrics::LossWeights weights;
    /// Adam learning rate of the head MLPs.
    double lr = 1e-3;
    /// Adam learning rate of the feature volumes.
    double field_lr = 2e-2;
    /// Both rates decay exponentially to this fraction over the run (1 = constant).
    double final_lr_factor = 0.1;
    std::uint64_t seed = 0;
    /// Fixed ray order and serial reductions; the implementation is always
    /// single-threaded, so this is recorded for provenance only.
    bool deterministic = true;
    int holdout_every = 8;
    /// Save an intermediate checkpoint every N iterations (0 = only at the end).
    int checkpoint_every = 0;
    /// Apply the losses to the coarse pass as well as the fine pass.
    bool supervise_coarse = true;
    /// Draw the same number of rays from every training frame instead of
    /// sampling pixels uniformly over all frames.
    bool stratify_frames = false;
    /// Missing modality is an error instead of a warning.
    bool strict_modalities = false;
    PreprocessOptions preprocess;

    static field::ModelSpec default_model();
    /// Throws ContractError on out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
/// FNV-1a of the canonical JSON text of the config.
std::uint64_t config_hash(const TrainConfig& c);

} // namespace mmrf::pipeline
