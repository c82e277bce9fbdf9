// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/tape.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace mmrf::metrics {

using diff::Matrix;
using diff::Tape;
using diff::Var;

/// (1/R)·Σ_r ‖rendered_r − truth_r‖² for [R×3] batches: channels summed, rays averaged.
Var mean_squared_residual(Tape& tape, Var rendered, const Matrix& truth);
double mean_squared_residual(const Matrix& rendered, const Matrix& truth);

Var loss_rgb(Tape& tape, Var rendered, const Matrix& truth);
Var loss_thermal(Tape& tape, Var rendered, const Matrix& truth);
/// Cross-spectral term: residual to the RGB truth plus residual to the event
/// truth. Truths are constants, so only `rendered` receives gradient.
Var loss_reg(Tape& tape, Var rendered, const Matrix& truth_rgb, const Matrix& truth_ev);

double loss_rgb(const Matrix& rendered, const Matrix& truth);
double loss_thermal(const Matrix& rendered, const Matrix& truth);
double loss_reg(const Matrix& rendered, const Matrix& truth_rgb, const Matrix& truth_ev);

struct LossWeights {
    double w_rgb = 1.0;
    double w_th = 1.0;
    double w_reg = 1.0;
    bool enable_rgb = true;
    bool enable_th = true;
    bool enable_reg = true;
    /// The two halves of the cross-spectral term can be switched separately.
    bool reg_rgb_part = true;
    bool reg_event_part = true;

    /// Throws ContractError on negative or non-finite weights.
    void validate() const;
    bool any_enabled() const;
    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j);

/// w_rgb·L_rgb + w_th·L_th + w_reg·L_reg over enabled terms.
double total_loss(const LossWeights& w, double l_rgb, double l_th, double l_reg);

/// Per-ray targets, each [R×3]. Thermal and event truths are the 1-channel
/// images replicated to 3 channels. A modality may be absent.
struct Supervision {
    Matrix rgb;
    Matrix thermal;
    Matrix events;
    bool has_rgb = true;
    bool has_thermal = true;
    bool has_events = true;

    Eigen::Index rays() const;
    /// Throws ContractError unless every available truth is [R×3] with values in [0,1].
    void validate() const;
};

/// Head outputs of one render pass, each [R×3].
struct PassPrediction {
    Var rgb;
    Var xspec;
};

struct TermValues {
    double rgb = 0;
    double thermal = 0;
    double reg = 0;
};

struct LossResult {
    Var total;
    /// Unweighted term values, one entry per pass (e.g. coarse, fine).
    std::vector<TermValues> per_pass;
    /// Terms or term parts skipped because a modality was missing.
    std::vector<std::string> warnings;
};

/// Weighted sum of the enabled terms over all passes. A term that needs a
/// missing modality is skipped with a warning, or throws ContractError when
/// `strict`. Throws ContractError when no term is enabled.
LossResult total_loss(Tape& tape, const LossWeights& w, const std::vector<PassPrediction>& passes,
                      const Supervision& truth, bool strict = false);

/// Modality subsets compared in the ablation study.
enum class Ablation { rgb, rgb_events, rgb_thermal, thermal, thermal_events, all };

inline constexpr std::array<Ablation, 6> kAllAblations{Ablation::rgb,     Ablation::rgb_events,
                                                       Ablation::rgb_thermal, Ablation::thermal,
                                                       Ablation::thermal_events, Ablation::all};

std::string_view to_string(Ablation a);
Ablation ablation_from_string(std::string_view name);
/// Enable flags for a subset; weights of enabled terms are taken from `base`.
LossWeights ablation_weights(Ablation a, const LossWeights& base = {});

} // namespace mmrf::metrics
