// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/field/encoding.hpp"

#include "mmrf/core/error.hpp"
#include "mmrf/diff/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mmrf::field {

namespace {

void check_unit(double norm, const std::string& where)
{
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6)
        throw ContractError("direction " + where + " is not unit length (|d| = " + std::to_string(norm) + ")");
}

} // namespace

std::vector<double> encode_direction(const Vec3& d, int frequencies)
{
    if (frequencies < 0)
        throw ContractError("frequency count must be >= 0");
    check_unit(d.norm(), "");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(encoded_width(frequencies)));
    out.insert(out.end(), {d.x(), d.y(), d.z()});
    for (int k = 0; k < frequencies; ++k) {
        const double f = std::ldexp(std::numbers::pi, k);
        for (int a = 0; a < 3; ++a)
            out.push_back(std::sin(f * d[a]));
        for (int a = 0; a < 3; ++a)
            out.push_back(std::cos(f * d[a]));
    }
    return out;
}

diff::Var encode_directions(diff::Tape& tape, diff::Var directions, int frequencies)
{
    if (frequencies < 0)
        throw ContractError("frequency count must be >= 0");
    if (tape.cols(directions) != 3)
        throw ContractError("directions must be an N×3 matrix");
    auto d = tape.value(directions);
    for (Eigen::Index r = 0; r < d.rows(); ++r)
        check_unit(d.row(r).norm(), "at row " + std::to_string(r));
    std::vector<diff::Var> parts{directions};
    for (int k = 0; k < frequencies; ++k) {
        auto scaled = diff::scale(tape, directions, std::ldexp(std::numbers::pi, k));
        parts.push_back(diff::sin(tape, scaled));
        parts.push_back(diff::cos(tape, scaled));
    }
    return diff::concat_cols(tape, parts);
}

} // namespace mmrf::field
