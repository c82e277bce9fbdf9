// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/tape.hpp"

#include <string_view>
#include <vector>

namespace mmrf::diff {

enum class Activation { linear, relu, sigmoid, softplus };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Elementwise scalar helpers shared by ops, oracles and plain evaluation paths.
Real sigmoid(Real x);
Real softplus(Real x);
/// Inverse of softplus for y > 0.
Real softplus_inverse(Real y);

/// [N×K]·[K×M] matrix product.
Var matmul(Tape& t, Var a, Var b);
/// Adds a 1×M row to every row of an N×M matrix.
Var add_row(Tape& t, Var x, Var row);

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
/// Hadamard product.
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, Real s);
Var square(Tape& t, Var a);
Var sin(Tape& t, Var a);
Var cos(Tape& t, Var a);

Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var softplus(Tape& t, Var a);
Var activate(Tape& t, Var a, Activation kind);

/// Fused layer act(x·W[0:k] + repeat(s·W[k:], group) + b) with k = cols(x).
///
/// `shared` is optional; when given it has rows(x)/group rows and each of its rows
/// feeds `group` consecutive rows of x. Only the output is stored.
Var dense(Tape& t, Var x, Var w, Var b, Activation act, Var shared = {}, Eigen::Index group = 1);

/// Sum of all entries, 1×1.
Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);

/// Horizontal concatenation; all parts share a row count.
Var concat_cols(Tape& t, const std::vector<Var>& parts);
Var slice_cols(Tape& t, Var a, Eigen::Index start, Eigen::Index count);
/// Repeats each row `times` times consecutively: row r lands at rows r*times..r*times+times-1.
Var repeat_rows(Tape& t, Var a, Eigen::Index times);

} // namespace mmrf::diff
