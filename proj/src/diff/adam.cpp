// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/diff/adam.hpp"

#include "mmrf/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace mmrf::diff {

Real Adam::learning_rate(const std::string& group) const
{
    auto it = options_.group_lr.find(group);
    Real lr = it == options_.group_lr.end() ? options_.lr : it->second;
    if (options_.decay_steps > 0) {
        const Real progress =
            std::min<Real>(1.0, static_cast<Real>(step_) / static_cast<Real>(options_.decay_steps));
        lr *= std::pow(options_.final_lr_factor, progress);
    }
    return lr;
}

void Adam::ensure_shapes(const ParameterStore& params)
{
    if (m_.size() > params.size())
        throw ContractError("optimizer state has more entries than the parameter store");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto n = params.entries()[i].value.size();
        if (i >= m_.size()) {
            m_.emplace_back(n, 0.0);
            v_.emplace_back(n, 0.0);
        } else if (m_[i].size() != n || v_[i].size() != n) {
            throw ContractError("optimizer moments for '" + params.entries()[i].name +
                                "' do not match the parameter shape");
        }
    }
}

void Adam::step(ParameterStore& params)
{
    ensure_shapes(params);
    for (const auto& e : params.entries())
        for (std::size_t k = 0; k < e.grad.size(); ++k)
            if (!std::isfinite(e.grad[k]))
                throw NonFiniteError("non-finite gradient in parameter '" + e.name + "' at index " +
                                     std::to_string(k));

    const auto t = static_cast<Real>(step_ + 1);
    const Real b1 = options_.beta1;
    const Real b2 = options_.beta2;
    const Real corr1 = 1.0 - std::pow(b1, t);
    const Real corr2 = 1.0 - std::pow(b2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& e = params.entry(ParamId{i});
        const Real lr = learning_rate(e.group);
        const Real step_size = lr / corr1;
        const Real inv_sqrt_corr2 = 1.0 / std::sqrt(corr2);
        auto& m = m_[i];
        auto& v = v_[i];
        const Real* g = e.grad.data();
        Real* p = e.value.data();
        const std::size_t n = e.value.size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = b1 * m[k] + (1 - b1) * g[k];
            v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k];
            p[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_corr2 + options_.eps);
        }
        for (std::size_t k = 0; k < n; ++k)
            if (!std::isfinite(p[k]))
                throw NonFiniteError("optimizer step produced a non-finite value in '" + e.name + "'");
    }
    ++step_;
}

void Adam::restore(std::int64_t step, std::vector<std::vector<Real>> m, std::vector<std::vector<Real>> v)
{
    if (m.size() != v.size())
        throw ContractError("first and second moment lists differ in length");
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i].size() != v[i].size())
            throw ContractError("moment arrays differ in length");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
}

} // namespace mmrf::diff
