// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/diff/mlp.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/diff/ops.hpp"

#include <cmath>

namespace mmrf::diff {

Real glorot_bound(int fan_in, int fan_out)
{
    return std::sqrt(6.0 / static_cast<Real>(fan_in + fan_out));
}

std::vector<int> Mlp::layer_sizes() const
{
    std::vector<int> sizes{spec_.in_width};
    sizes.insert(sizes.end(), spec_.hidden.begin(), spec_.hidden.end());
    sizes.push_back(spec_.out_width);
    return sizes;
}

Mlp::Mlp(ParameterStore& store, const std::string& name, MlpSpec spec, std::mt19937_64& rng,
         const std::string& group)
    : spec_(std::move(spec))
{
    if (spec_.in_width < 1 || spec_.out_width < 1)
        throw ContractError("mlp '" + name + "' needs positive input and output widths");
    const auto sizes = layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        if (fan_out < 1)
            throw ContractError("mlp '" + name + "' has an empty hidden layer");
        const Real bound = glorot_bound(fan_in, fan_out);
        std::uniform_real_distribution<Real> dist(-bound, bound);
        std::vector<Real> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (auto& v : w)
            v = dist(rng);
        const auto prefix = name + ".layer" + std::to_string(l);
        weights_.push_back(store.add(prefix + ".weight",
                                     {static_cast<std::size_t>(fan_in), static_cast<std::size_t>(fan_out)},
                                     std::move(w), group));
        biases_.push_back(store.add(prefix + ".bias", {static_cast<std::size_t>(fan_out)}, group));
    }
}

Mlp Mlp::attach(const ParameterStore& store, const std::string& name, MlpSpec spec)
{
    Mlp m;
    m.spec_ = std::move(spec);
    const auto sizes = m.layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto prefix = name + ".layer" + std::to_string(l);
        auto w = store.at(prefix + ".weight");
        auto b = store.at(prefix + ".bias");
        if (store.rows(w) != static_cast<std::size_t>(sizes[l]) ||
            store.cols(w) != static_cast<std::size_t>(sizes[l + 1]))
            throw ContractError("parameter '" + prefix + ".weight' shape does not match the mlp spec");
        m.weights_.push_back(w);
        m.biases_.push_back(b);
    }
    return m;
}

namespace {

void check_finite(ConstMatrixMap x, Eigen::Index group, Eigen::Index col_offset)
{
    bool finite = true;
    const Real* p = x.data();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        finite = finite && std::isfinite(p[i]);
    if (finite)
        return;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            if (!std::isfinite(x(r, c)))
                throw NonFiniteError("mlp input is not finite at row " + std::to_string(r * group) +
                                     ", column " + std::to_string(c + col_offset));
}

} // namespace

Var Mlp::forward(Tape& tape, Var input, Var shared, Eigen::Index group) const
{
    const auto width = tape.cols(input) + (shared.valid() ? tape.cols(shared) : 0);
    if (width != spec_.in_width)
        throw ContractError("mlp expects input width " + std::to_string(spec_.in_width) + ", got " +
                            std::to_string(width));
    check_finite(tape.value(input), 1, 0);
    if (shared.valid())
        check_finite(tape.value(shared), group, tape.cols(input));
    Var h = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const bool last = l + 1 == weights_.size();
        const auto act = last ? spec_.output_activation : spec_.hidden_activation;
        h = dense(tape, h, tape.parameter(weights_[l]), tape.parameter(biases_[l]), act, l == 0 ? shared : Var{},
                  group);
    }
    return h;
}

} // namespace mmrf::diff
