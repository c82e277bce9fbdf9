// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/metrics/losses.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/diff/ops.hpp"

#include <cmath>

namespace mmrf::metrics {

namespace {

void check_batch(Eigen::Index rows, Eigen::Index cols, const Matrix& truth, const char* what)
{
    if (rows < 1)
        throw ContractError(std::string(what) + ": empty batch");
    if (truth.rows() != rows || truth.cols() != cols)
        throw ContractError(std::string(what) + ": truth is " + std::to_string(truth.rows()) + "x" +
                            std::to_string(truth.cols()) + ", rendered is " + std::to_string(rows) + "x" +
                            std::to_string(cols));
}

} // namespace

Var mean_squared_residual(Tape& tape, Var rendered, const Matrix& truth)
{
    check_batch(tape.rows(rendered), tape.cols(rendered), truth, "loss");
    const Matrix diff = tape.value(rendered) - truth;
    const double n = static_cast<double>(diff.rows());
    Matrix out(1, 1);
    out(0, 0) = diff.squaredNorm() / n;
    return tape.record(std::move(out), {rendered}, [rendered, diff, n](Tape& tp, Var self) {
        if (tp.requires_grad(rendered))
            tp.grad(rendered) += (2.0 * tp.grad(self)(0, 0) / n) * diff;
    });
}

double mean_squared_residual(const Matrix& rendered, const Matrix& truth)
{
    check_batch(rendered.rows(), rendered.cols(), truth, "loss");
    return (rendered - truth).squaredNorm() / static_cast<double>(rendered.rows());
}

Var loss_rgb(Tape& tape, Var rendered, const Matrix& truth)
{
    return mean_squared_residual(tape, rendered, truth);
}

Var loss_thermal(Tape& tape, Var rendered, const Matrix& truth)
{
    return mean_squared_residual(tape, rendered, truth);
}

Var loss_reg(Tape& tape, Var rendered, const Matrix& truth_rgb, const Matrix& truth_ev)
{
    return diff::add(tape, mean_squared_residual(tape, rendered, truth_rgb),
                     mean_squared_residual(tape, rendered, truth_ev));
}

double loss_rgb(const Matrix& rendered, const Matrix& truth)
{
    return mean_squared_residual(rendered, truth);
}

double loss_thermal(const Matrix& rendered, const Matrix& truth)
{
    return mean_squared_residual(rendered, truth);
}

double loss_reg(const Matrix& rendered, const Matrix& truth_rgb, const Matrix& truth_ev)
{
    return mean_squared_residual(rendered, truth_rgb) + mean_squared_residual(rendered, truth_ev);
}

void LossWeights::validate() const
{
    for (double w : {w_rgb, w_th, w_reg})
        if (!std::isfinite(w) || w < 0)
            throw ContractError("loss weights must be finite and >= 0");
    if (enable_reg && !reg_rgb_part && !reg_event_part)
        throw ContractError("cross-spectral term enabled with both parts switched off");
}

bool LossWeights::any_enabled() const
{
    return enable_rgb || enable_th || enable_reg;
}

nlohmann::json to_json(const LossWeights& w)
{
    return {{"w_rgb", w.w_rgb},
            {"w_th", w.w_th},
            {"w_reg", w.w_reg},
            {"enable_rgb", w.enable_rgb},
            {"enable_th", w.enable_th},
            {"enable_reg", w.enable_reg},
            {"reg_rgb_part", w.reg_rgb_part},
            {"reg_event_part", w.reg_event_part}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j)
{
    LossWeights w;
    w.w_rgb = j.at("w_rgb").get<double>();
    w.w_th = j.at("w_th").get<double>();
    w.w_reg = j.at("w_reg").get<double>();
    w.enable_rgb = j.at("enable_rgb").get<bool>();
    w.enable_th = j.at("enable_th").get<bool>();
    w.enable_reg = j.at("enable_reg").get<bool>();
    w.reg_rgb_part = j.at("reg_rgb_part").get<bool>();
    w.reg_event_part = j.at("reg_event_part").get<bool>();
    w.validate();
    return w;
}

double total_loss(const LossWeights& w, double l_rgb, double l_th, double l_reg)
{
    w.validate();
    if (!w.any_enabled())
        throw ContractError("all loss terms are disabled");
    double total = 0;
    if (w.enable_rgb)
        total += w.w_rgb * l_rgb;
    if (w.enable_th)
        total += w.w_th * l_th;
    if (w.enable_reg)
        total += w.w_reg * l_reg;
    return total;
}

Eigen::Index Supervision::rays() const
{
    if (has_rgb)
        return rgb.rows();
    if (has_thermal)
        return thermal.rows();
    if (has_events)
        return events.rows();
    return 0;
}

void Supervision::validate() const
{
    if (!has_rgb && !has_thermal && !has_events)
        throw ContractError("supervision has no modality");
    const auto n = rays();
    auto check = [n](bool has, const Matrix& m, const char* name) {
        if (!has)
            return;
        if (m.rows() != n || m.cols() != 3)
            throw ContractError(std::string(name) + " truth must be " + std::to_string(n) + "x3");
        if (!m.allFinite() || m.minCoeff() < 0 || m.maxCoeff() > 1)
            throw ContractError(std::string(name) + " truth has values outside [0,1]");
    };
    check(has_rgb, rgb, "rgb");
    check(has_thermal, thermal, "thermal");
    check(has_events, events, "event");
}

LossResult total_loss(Tape& tape, const LossWeights& w, const std::vector<PassPrediction>& passes,
                      const Supervision& truth, bool strict)
{
    w.validate();
    if (!w.any_enabled())
        throw ContractError("all loss terms are disabled");
    if (passes.empty())
        throw ContractError("total loss needs at least one render pass");
    truth.validate();

    LossResult res;
    auto missing = [&](const std::string& what) {
        if (strict)
            throw ContractError(what);
        res.warnings.push_back(what);
    };
    const bool use_rgb = w.enable_rgb && truth.has_rgb;
    const bool use_th = w.enable_th && truth.has_thermal;
    const bool reg_rgb = w.enable_reg && w.reg_rgb_part && truth.has_rgb;
    const bool reg_ev = w.enable_reg && w.reg_event_part && truth.has_events;
    if (w.enable_rgb && !truth.has_rgb)
        missing("rgb term skipped: no rgb truth");
    if (w.enable_th && !truth.has_thermal)
        missing("thermal term skipped: no thermal truth");
    if (w.enable_reg && w.reg_rgb_part && !truth.has_rgb)
        missing("cross-spectral rgb part skipped: no rgb truth");
    if (w.enable_reg && w.reg_event_part && !truth.has_events)
        missing("cross-spectral event part skipped: no event truth");

    std::vector<Var> weighted;
    for (const auto& p : passes) {
        TermValues tv;
        if (use_rgb) {
            Var l = loss_rgb(tape, p.rgb, truth.rgb);
            tv.rgb = tape.scalar(l);
            weighted.push_back(diff::scale(tape, l, w.w_rgb));
        }
        if (use_th) {
            Var l = loss_thermal(tape, p.xspec, truth.thermal);
            tv.thermal = tape.scalar(l);
            weighted.push_back(diff::scale(tape, l, w.w_th));
        }
        if (reg_rgb || reg_ev) {
            Var l;
            if (reg_rgb && reg_ev)
                l = loss_reg(tape, p.xspec, truth.rgb, truth.events);
            else
                l = mean_squared_residual(tape, p.xspec, reg_rgb ? truth.rgb : truth.events);
            tv.reg = tape.scalar(l);
            weighted.push_back(diff::scale(tape, l, w.w_reg));
        }
        res.per_pass.push_back(tv);
    }
    if (weighted.empty())
        throw ContractError("no loss term could be evaluated with the available modalities");
    res.total = weighted.front();
    for (std::size_t i = 1; i < weighted.size(); ++i)
        res.total = diff::add(tape, res.total, weighted[i]);
    return res;
}

std::string_view to_string(Ablation a)
{
    switch (a) {
    case Ablation::rgb: return "rgb";
    case Ablation::rgb_events: return "rgb+events";
    case Ablation::rgb_thermal: return "rgb+thermal";
    case Ablation::thermal: return "thermal";
    case Ablation::thermal_events: return "thermal+events";
    case Ablation::all: return "all";
    }
    return "all";
}

Ablation ablation_from_string(std::string_view name)
{
    for (auto a : kAllAblations)
        if (to_string(a) == name)
            return a;
    throw ContractError("unknown ablation '" + std::string(name) +
                        "' (expected rgb, rgb+events, rgb+thermal, thermal, thermal+events, all)");
}

LossWeights ablation_weights(Ablation a, const LossWeights& base)
{
    LossWeights w = base;
    w.enable_rgb = a == Ablation::rgb || a == Ablation::rgb_events || a == Ablation::rgb_thermal ||
                   a == Ablation::all;
    w.enable_th = a == Ablation::rgb_thermal || a == Ablation::thermal || a == Ablation::thermal_events ||
                  a == Ablation::all;
    w.enable_reg = a == Ablation::rgb_events || a == Ablation::thermal_events || a == Ablation::all;
    w.reg_rgb_part = a != Ablation::thermal_events;
    w.reg_event_part = true;
    if (!w.enable_rgb)
        w.w_rgb = 0;
    if (!w.enable_th)
        w.w_th = 0;
    if (!w.enable_reg)
        w.w_reg = 0;
    return w;
}

} // namespace mmrf::metrics
