// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/diff/tape.hpp"

#include "mmrf/core/error.hpp"

#include <string>

namespace mmrf::diff {

const Tape::Node& Tape::node(Var v) const
{
    if (!v.valid() || v.id >= nodes_.size())
        throw ContractError("invalid tape variable");
    return nodes_[v.id];
}

Tape::Node& Tape::node(Var v)
{
    if (!v.valid() || v.id >= nodes_.size())
        throw ContractError("invalid tape variable");
    return nodes_[v.id];
}

Var Tape::constant(Matrix value)
{
    Node n;
    n.rows = value.rows();
    n.cols = value.cols();
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Tape::parameter(ParamId id)
{
    if (params_ == nullptr)
        throw ContractError("tape has no parameter store");
    Node n;
    n.rows = static_cast<Eigen::Index>(params_->rows(id));
    n.cols = static_cast<Eigen::Index>(params_->cols(id));
    n.param = id;
    n.needs_grad = grad_enabled_;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward)
{
    return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward)
{
    Node n;
    n.rows = value.rows();
    n.cols = value.cols();
    n.value = std::move(value);
    for (auto in : inputs)
        n.needs_grad = n.needs_grad || node(in).needs_grad;
    if (n.needs_grad)
        n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

ConstMatrixMap Tape::value(Var v) const
{
    const auto& n = node(v);
    if (n.param)
        return ConstMatrixMap(params_->value(*n.param).data(), n.rows, n.cols);
    return ConstMatrixMap(n.value.data(), n.rows, n.cols);
}

MatrixMap Tape::grad(Var v)
{
    auto& n = node(v);
    if (n.param)
        return MatrixMap(params_->grad(*n.param).data(), n.rows, n.cols);
    if (n.grad.rows() != n.rows || n.grad.cols() != n.cols)
        n.grad = Matrix::Zero(n.rows, n.cols);
    return MatrixMap(n.grad.data(), n.rows, n.cols);
}

Eigen::Index Tape::rows(Var v) const { return node(v).rows; }
Eigen::Index Tape::cols(Var v) const { return node(v).cols; }
bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }

Real Tape::scalar(Var v) const
{
    const auto& n = node(v);
    if (n.rows != 1 || n.cols != 1)
        throw ContractError("scalar() on a " + std::to_string(n.rows) + "x" + std::to_string(n.cols) +
                            " node");
    return value(v)(0, 0);
}

void Tape::backward(Var output, const Matrix& output_grad)
{
    if (nodes_.empty() || !output.valid() || output.id >= nodes_.size())
        throw ContractError("backward called without a recorded forward pass");
    auto& out = nodes_[output.id];
    if (output_grad.rows() != out.rows || output_grad.cols() != out.cols)
        throw ContractError("output gradient shape " + std::to_string(output_grad.rows()) + "x" +
                            std::to_string(output_grad.cols()) + " does not match output " +
                            std::to_string(out.rows) + "x" + std::to_string(out.cols));
    for (auto& n : nodes_)
        if (!n.param && n.needs_grad)
            n.grad.setZero(n.rows, n.cols);
    if (!out.needs_grad)
        return;
    grad(output) += output_grad;
    for (std::size_t i = output.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.backward)
            n.backward(*this, Var{i});
    }
}

void Tape::backward(Var scalar_output)
{
    backward(scalar_output, Matrix::Ones(1, 1));
}

void Tape::clear()
{
    nodes_.clear();
}

} // namespace mmrf::diff
