// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/diff/ops.hpp"

#include "mmrf/core/error.hpp"

#include <cmath>
#include <string>

namespace mmrf::diff {

namespace {

void require_same_shape(const Tape& t, Var a, Var b, const char* op)
{
    if (t.rows(a) != t.rows(b) || t.cols(a) != t.cols(b))
        throw ContractError(std::string(op) + ": shape mismatch " + std::to_string(t.rows(a)) + "x" +
                            std::to_string(t.cols(a)) + " vs " + std::to_string(t.rows(b)) + "x" +
                            std::to_string(t.cols(b)));
}

template <class Fwd, class Deriv>
Var unary(Tape& t, Var a, Fwd fwd, Deriv deriv)
{
    Matrix out = t.value(a).unaryExpr(fwd);
    return t.record(std::move(out), {a}, [a, deriv](Tape& tp, Var self) {
        if (!tp.requires_grad(a))
            return;
        auto x = tp.value(a);
        auto y = tp.value(self);
        auto g = tp.grad(self);
        auto ga = tp.grad(a);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            ga.data()[i] += g.data()[i] * deriv(x.data()[i], y.data()[i]);
    });
}

} // namespace

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
    }
    return "linear";
}

Activation activation_from_string(std::string_view name)
{
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softplus") return Activation::softplus;
    throw ContractError("unknown activation '" + std::string(name) + "'");
}

Real sigmoid(Real x)
{
    if (x >= 0) {
        const Real e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const Real e = std::exp(x);
    return e / (1.0 + e);
}

Real softplus(Real x)
{
    return std::max(x, Real(0)) + std::log1p(std::exp(-std::abs(x)));
}

Real softplus_inverse(Real y)
{
    if (!(y > 0))
        throw ContractError("softplus_inverse needs a positive argument");
    // log(exp(y) - 1) written to stay finite for large y
    return y + std::log(-std::expm1(-y));
}

Var matmul(Tape& t, Var a, Var b)
{
    if (t.cols(a) != t.rows(b))
        throw ContractError("matmul: inner dimensions " + std::to_string(t.cols(a)) + " and " +
                            std::to_string(t.rows(b)) + " differ");
    Matrix out = t.value(a) * t.value(b);
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
        auto g = tp.grad(self);
        if (tp.requires_grad(a))
            tp.grad(a).noalias() += g * tp.value(b).transpose();
        if (tp.requires_grad(b))
            tp.grad(b).noalias() += tp.value(a).transpose() * g;
    });
}

Var add_row(Tape& t, Var x, Var row)
{
    if (t.rows(row) != 1 || t.cols(row) != t.cols(x))
        throw ContractError("add_row: row must be 1x" + std::to_string(t.cols(x)));
    Matrix out = t.value(x);
    out.rowwise() += t.value(row).row(0);
    return t.record(std::move(out), {x, row}, [x, row](Tape& tp, Var self) {
        auto g = tp.grad(self);
        if (tp.requires_grad(x))
            tp.grad(x) += g;
        if (tp.requires_grad(row)) {
            auto gr = tp.grad(row);
            for (Eigen::Index r = 0; r < g.rows(); ++r)
                gr.row(0) += g.row(r);
        }
    });
}

Var add(Tape& t, Var a, Var b)
{
    require_same_shape(t, a, b, "add");
    Matrix out = t.value(a) + t.value(b);
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
        auto g = tp.grad(self);
        if (tp.requires_grad(a))
            tp.grad(a) += g;
        if (tp.requires_grad(b))
            tp.grad(b) += g;
    });
}

Var sub(Tape& t, Var a, Var b)
{
    require_same_shape(t, a, b, "sub");
    Matrix out = t.value(a) - t.value(b);
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
        auto g = tp.grad(self);
        if (tp.requires_grad(a))
            tp.grad(a) += g;
        if (tp.requires_grad(b))
            tp.grad(b) -= g;
    });
}

Var mul(Tape& t, Var a, Var b)
{
    require_same_shape(t, a, b, "mul");
    Matrix out = t.value(a).cwiseProduct(t.value(b));
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
        auto g = tp.grad(self);
        if (tp.requires_grad(a))
            tp.grad(a) += g.cwiseProduct(tp.value(b));
        if (tp.requires_grad(b))
            tp.grad(b) += g.cwiseProduct(tp.value(a));
    });
}

Var scale(Tape& t, Var a, Real s)
{
    Matrix out = t.value(a) * s;
    return t.record(std::move(out), {a}, [a, s](Tape& tp, Var self) {
        if (tp.requires_grad(a))
            tp.grad(a) += tp.grad(self) * s;
    });
}

Var square(Tape& t, Var a)
{
    return unary(t, a, [](Real x) { return x * x; }, [](Real x, Real) { return 2 * x; });
}

Var sin(Tape& t, Var a)
{
    return unary(t, a, [](Real x) { return std::sin(x); }, [](Real x, Real) { return std::cos(x); });
}

Var cos(Tape& t, Var a)
{
    return unary(t, a, [](Real x) { return std::cos(x); }, [](Real x, Real) { return -std::sin(x); });
}

Var relu(Tape& t, Var a)
{
    return unary(t, a, [](Real x) { return x > 0 ? x : Real(0); },
                 [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

Var sigmoid(Tape& t, Var a)
{
    return unary(t, a, [](Real x) { return sigmoid(x); }, [](Real, Real y) { return y * (1 - y); });
}

Var softplus(Tape& t, Var a)
{
    return unary(t, a, [](Real x) { return softplus(x); }, [](Real x, Real) { return sigmoid(x); });
}

Var activate(Tape& t, Var a, Activation kind)
{
    switch (kind) {
    case Activation::linear: return a;
    case Activation::relu: return relu(t, a);
    case Activation::sigmoid: return sigmoid(t, a);
    case Activation::softplus: return softplus(t, a);
    }
    return a;
}

namespace {

void apply_activation(MatrixMap z, Activation act)
{
    Real* p = z.data();
    const Eigen::Index n = z.size();
    switch (act) {
    case Activation::linear: break;
    case Activation::relu:
        for (Eigen::Index i = 0; i < n; ++i)
            p[i] = p[i] > 0 ? p[i] : Real(0);
        break;
    case Activation::sigmoid:
        for (Eigen::Index i = 0; i < n; ++i)
            p[i] = sigmoid(p[i]);
        break;
    case Activation::softplus:
        for (Eigen::Index i = 0; i < n; ++i)
            p[i] = softplus(p[i]);
        break;
    }
}

// Derivative of the activation expressed through its output y.
Real activation_slope(Activation act, Real y)
{
    switch (act) {
    case Activation::linear: return 1;
    case Activation::relu: return y > 0 ? Real(1) : Real(0);
    case Activation::sigmoid: return y * (1 - y);
    case Activation::softplus: return -std::expm1(-y);
    }
    return 1;
}

} // namespace

Var dense(Tape& t, Var x, Var w, Var b, Activation act, Var shared, Eigen::Index group)
{
    const auto n = t.rows(x);
    const auto k = t.cols(x);
    const auto ks = shared.valid() ? t.cols(shared) : Eigen::Index(0);
    const auto m = t.cols(w);
    if (t.rows(w) != k + ks)
        throw ContractError("dense: weight has " + std::to_string(t.rows(w)) + " rows, inputs give " +
                            std::to_string(k + ks));
    if (t.rows(b) != 1 || t.cols(b) != m)
        throw ContractError("dense: bias must be 1x" + std::to_string(m));
    if (shared.valid() && (group < 1 || t.rows(shared) * group != n))
        throw ContractError("dense: shared input rows times group must equal the batch size");

    Matrix out(n, m);
    out.noalias() = t.value(x) * t.value(w).topRows(k);
    if (shared.valid()) {
        const Matrix s = t.value(shared) * t.value(w).bottomRows(ks);
        for (Eigen::Index r = 0; r < n; ++r)
            out.row(r) += s.row(r / group);
    }
    out.rowwise() += t.value(b).row(0);
    apply_activation(MatrixMap(out.data(), n, m), act);

    std::vector<Var> inputs{x, w, b};
    if (shared.valid())
        inputs.push_back(shared);
    return t.record(std::move(out), inputs, [x, w, b, act, shared, group, k, ks](Tape& tp, Var self) {
        auto y = tp.value(self);
        auto g = tp.grad(self);
        Matrix gz(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < gz.size(); ++i)
            gz.data()[i] = g.data()[i] * activation_slope(act, y.data()[i]);
        if (tp.requires_grad(b)) {
            auto gb = tp.grad(b);
            for (Eigen::Index r = 0; r < gz.rows(); ++r)
                gb.row(0) += gz.row(r);
        }
        if (tp.requires_grad(w))
            tp.grad(w).topRows(k).noalias() += tp.value(x).transpose() * gz;
        if (tp.requires_grad(x))
            tp.grad(x).noalias() += gz * tp.value(w).topRows(k).transpose();
        if (!shared.valid())
            return;
        const bool need_w = tp.requires_grad(w);
        const bool need_s = tp.requires_grad(shared);
        if (!need_w && !need_s)
            return;
        Matrix gs = Matrix::Zero(tp.rows(shared), gz.cols());
        for (Eigen::Index r = 0; r < gz.rows(); ++r)
            gs.row(r / group) += gz.row(r);
        if (need_w)
            tp.grad(w).bottomRows(ks).noalias() += tp.value(shared).transpose() * gs;
        if (need_s)
            tp.grad(shared).noalias() += gs * tp.value(w).bottomRows(ks).transpose();
    });
}

Var sum(Tape& t, Var a)
{
    Matrix out(1, 1);
    out(0, 0) = t.value(a).sum();
    return t.record(std::move(out), {a}, [a](Tape& tp, Var self) {
        if (tp.requires_grad(a))
            tp.grad(a).array() += tp.grad(self)(0, 0);
    });
}

Var mean(Tape& t, Var a)
{
    const auto n = t.value(a).size();
    if (n == 0)
        throw ContractError("mean of an empty matrix");
    return scale(t, sum(t, a), 1.0 / static_cast<Real>(n));
}

Var concat_cols(Tape& t, const std::vector<Var>& parts)
{
    if (parts.empty())
        throw ContractError("concat_cols: no inputs");
    const auto rows = t.rows(parts.front());
    Eigen::Index cols = 0;
    for (auto p : parts) {
        if (t.rows(p) != rows)
            throw ContractError("concat_cols: row counts differ");
        cols += t.cols(p);
    }
    Matrix out(rows, cols);
    Eigen::Index c = 0;
    for (auto p : parts) {
        out.middleCols(c, t.cols(p)) = t.value(p);
        c += t.cols(p);
    }
    return t.record(std::move(out), parts, [parts](Tape& tp, Var self) {
        auto g = tp.grad(self);
        Eigen::Index c0 = 0;
        for (auto p : parts) {
            const auto w = tp.cols(p);
            if (tp.requires_grad(p))
                tp.grad(p) += g.middleCols(c0, w);
            c0 += w;
        }
    });
}

Var slice_cols(Tape& t, Var a, Eigen::Index start, Eigen::Index count)
{
    if (start < 0 || count < 0 || start + count > t.cols(a))
        throw ContractError("slice_cols: range out of bounds");
    Matrix out = t.value(a).middleCols(start, count);
    return t.record(std::move(out), {a}, [a, start, count](Tape& tp, Var self) {
        if (tp.requires_grad(a))
            tp.grad(a).middleCols(start, count) += tp.grad(self);
    });
}

Var repeat_rows(Tape& t, Var a, Eigen::Index times)
{
    if (times < 1)
        throw ContractError("repeat_rows: times must be >= 1");
    auto x = t.value(a);
    Matrix out(x.rows() * times, x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index k = 0; k < times; ++k)
            out.row(r * times + k) = x.row(r);
    return t.record(std::move(out), {a}, [a, times](Tape& tp, Var self) {
        if (!tp.requires_grad(a))
            return;
        auto g = tp.grad(self);
        auto ga = tp.grad(a);
        for (Eigen::Index r = 0; r < ga.rows(); ++r)
            for (Eigen::Index k = 0; k < times; ++k)
                ga.row(r) += g.row(r * times + k);
    });
}

} // namespace mmrf::diff
