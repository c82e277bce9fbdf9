// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/ops.hpp"

#include <random>
#include <string>
#include <vector>

namespace mmrf::diff {

struct MlpSpec {
    int in_width = 0;
    std::vector<int> hidden;
    int out_width = 0;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::linear;
};

/// Fully connected network whose weights live in a ParameterStore.
///
/// Layer l maps rows of width sizes[l] to sizes[l+1] as x·W + b with W stored
/// [in×out]. Weights start Glorot-uniform, biases zero.
class Mlp {
public:
    Mlp() = default;
    Mlp(ParameterStore& store, const std::string& name, MlpSpec spec, std::mt19937_64& rng,
        const std::string& group = "mlp");

    /// Binds to parameters already present in `store` (e.g. after loading a checkpoint).
    static Mlp attach(const ParameterStore& store, const std::string& name, MlpSpec spec);

    /// Forward on a batch [N×in_width]. Throws ContractError on width mismatch and
    /// NonFiniteError naming the first non-finite input entry.
    ///
    /// With `shared` given, the layer input is [input, shared repeated `group`
    /// times], without materializing the repeated matrix.
    Var forward(Tape& tape, Var input, Var shared = {}, Eigen::Index group = 1) const;

    const MlpSpec& spec() const { return spec_; }
    std::size_t layer_count() const { return weights_.size(); }
    ParamId weight(std::size_t layer) const { return weights_.at(layer); }
    ParamId bias(std::size_t layer) const { return biases_.at(layer); }
    std::vector<int> layer_sizes() const;

private:
    MlpSpec spec_;
    std::vector<ParamId> weights_;
    std::vector<ParamId> biases_;
};

/// Glorot/Xavier uniform bound sqrt(6/(fan_in+fan_out)).
Real glorot_bound(int fan_in, int fan_out);

} // namespace mmrf::diff
