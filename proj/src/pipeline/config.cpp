// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/pipeline/config.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/core/hash.hpp"

#include <cmath>

namespace mmrf::pipeline {

field::ModelSpec TrainConfig::default_model()
{
    field::ModelSpec m;
    m.coarse.resolution = {32, 32, 32};
    m.fine.resolution = {64, 64, 64};
    return m;
}

void TrainConfig::validate() const
{
    if (iterations < 0)
        throw ContractError("iterations must be >= 0");
    if (batch < 1 || n_coarse < 1 || n_fine < 1)
        throw ContractError("batch and sample counts must be >= 1");
    if (!(lr > 0) || !(field_lr > 0) || !std::isfinite(lr) || !std::isfinite(field_lr))
        throw ContractError("learning rates must be positive");
    if (!(final_lr_factor > 0 && final_lr_factor <= 1))
        throw ContractError("final_lr_factor must lie in (0, 1]");
    if (holdout_every < 0 || checkpoint_every < 0)
        throw ContractError("holdout_every and checkpoint_every must be >= 0");
    weights.validate();
    if (!weights.any_enabled())
        throw ContractError("all loss terms are disabled");
    if (model.coarse.channels != model.fine.channels)
        throw ContractError("coarse and fine fields must have the same channel count");
}

nlohmann::json to_json(const TrainConfig& c)
{
    return {{"iterations", c.iterations},
            {"batch", c.batch},
            {"n_coarse", c.n_coarse},
            {"n_fine", c.n_fine},
            {"model", field::to_json(c.model)},
            {"weights", metrics::to_json(c.weights)},
            {"lr", c.lr},
            {"field_lr", c.field_lr},
            {"final_lr_factor", c.final_lr_factor},
            {"seed", c.seed},
            {"deterministic", c.deterministic},
            {"holdout_every", c.holdout_every},
            {"checkpoint_every", c.checkpoint_every},
            {"supervise_coarse", c.supervise_coarse},
            {"stratify_frames", c.stratify_frames},
            {"strict_modalities", c.strict_modalities},
            {"preprocess",
             {{"event_clip", c.preprocess.event_clip},
              {"thermal_grid", c.preprocess.thermal.grid},
              {"thermal_smoothing_rounds", c.preprocess.thermal.smoothing_rounds}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& j)
{
    try {
        TrainConfig c;
        c.iterations = j.at("iterations").get<int>();
        c.batch = j.at("batch").get<int>();
        c.n_coarse = j.at("n_coarse").get<int>();
        c.n_fine = j.at("n_fine").get<int>();
        c.model = field::model_spec_from_json(j.at("model"));
        c.weights = metrics::loss_weights_from_json(j.at("weights"));
        c.lr = j.at("lr").get<double>();
        c.field_lr = j.at("field_lr").get<double>();
        c.final_lr_factor = j.at("final_lr_factor").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.deterministic = j.at("deterministic").get<bool>();
        c.holdout_every = j.at("holdout_every").get<int>();
        c.checkpoint_every = j.at("checkpoint_every").get<int>();
        c.supervise_coarse = j.at("supervise_coarse").get<bool>();
        c.stratify_frames = j.at("stratify_frames").get<bool>();
        c.strict_modalities = j.at("strict_modalities").get<bool>();
        const auto& p = j.at("preprocess");
        c.preprocess.event_clip = p.at("event_clip").get<double>();
        c.preprocess.thermal.grid = p.at("thermal_grid").get<int>();
        c.preprocess.thermal.smoothing_rounds = p.at("thermal_smoothing_rounds").get<int>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("train config: ") + e.what());
    }
}

std::uint64_t config_hash(const TrainConfig& c)
{
    return fnv1a64(to_json(c).dump());
}

} // namespace mmrf::pipeline
