// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/parameter_store.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mmrf::diff {

struct AdamOptions {
    Real lr = 1e-3;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real eps = 1e-8;
    /// Learning rate is multiplied by final_lr_factor^(min(step/decay_steps, 1)).
    /// decay_steps == 0 disables the schedule.
    Real final_lr_factor = 1.0;
    std::int64_t decay_steps = 0;
    /// Per-group base learning rates overriding `lr`.
    std::map<std::string, Real> group_lr;
};

/// Adam with bias correction. Moments are allocated lazily to match the store.
class Adam {
public:
    Adam() = default;
    explicit Adam(AdamOptions options) : options_(std::move(options)) {}

    /// One update using the gradients currently held by `params`.
    /// Throws NonFiniteError naming the parameter if any gradient is not finite,
    /// before touching any value; throws as well if the update itself produced
    /// a non-finite value.
    void step(ParameterStore& params);

    std::int64_t step_count() const { return step_; }
    const AdamOptions& options() const { return options_; }
    Real learning_rate(const std::string& group) const;

    const std::vector<std::vector<Real>>& first_moments() const { return m_; }
    const std::vector<std::vector<Real>>& second_moments() const { return v_; }

    void restore(std::int64_t step, std::vector<std::vector<Real>> m, std::vector<std::vector<Real>> v);

private:
    void ensure_shapes(const ParameterStore& params);

    AdamOptions options_;
    std::int64_t step_ = 0;
    std::vector<std::vector<Real>> m_;
    std::vector<std::vector<Real>> v_;
};

} // namespace mmrf::diff
