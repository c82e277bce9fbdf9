// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/parameter_store.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace mmrf::diff {

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// Handle to a node on a Tape.
struct Var {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t id = npos;

    bool valid() const { return id != npos; }
};

/// Records matrix-valued operations in execution order and replays their
/// local derivative rules in reverse.
///
/// Three node kinds exist: constants (never receive gradients), parameter views
/// (alias a ParameterStore entry; their gradients accumulate straight into the
/// store) and op outputs. Intermediate gradients are reset at the start of every
/// backward call, parameter gradients are not.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, Var self)>;

    explicit Tape(ParameterStore* params = nullptr) : params_(params) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    ParameterStore* params() const { return params_; }

    /// With gradients disabled, parameter views are treated as constants and no
    /// backward rules are kept (inference).
    void set_grad_enabled(bool on) { grad_enabled_ = on; }
    bool grad_enabled() const { return grad_enabled_; }

    Var constant(Matrix value);
    Var parameter(ParamId id);

    /// Appends an op output. `inputs` decide whether the node needs a gradient;
    /// `backward` reads grad(self) and accumulates into the gradients of its inputs.
    Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
    Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward);

    ConstMatrixMap value(Var v) const;
    MatrixMap grad(Var v);
    Eigen::Index rows(Var v) const;
    Eigen::Index cols(Var v) const;
    bool requires_grad(Var v) const;

    /// Scalar read helper for 1×1 nodes.
    Real scalar(Var v) const;

    /// Propagates `output_grad` (same shape as `output`) back through every
    /// recorded op in reverse order.
    void backward(Var output, const Matrix& output_grad);
    /// Shorthand for a 1×1 output seeded with 1.
    void backward(Var scalar_output);

    std::size_t size() const { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Matrix value;
        Matrix grad;
        std::optional<ParamId> param;
        BackwardFn backward;
        bool needs_grad = false;
    };

    const Node& node(Var v) const;
    Node& node(Var v);

    ParameterStore* params_ = nullptr;
    bool grad_enabled_ = true;
    std::vector<Node> nodes_;
};

} // namespace mmrf::diff
