// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mmrf::diff {

using Real = double;

/// Index of a parameter inside a ParameterStore.
struct ParamId {
    std::size_t index = static_cast<std::size_t>(-1);

    bool valid() const { return index != static_cast<std::size_t>(-1); }
    friend bool operator==(ParamId, ParamId) = default;
};

/// Named dense arrays of trainable values with same-shaped gradient accumulators.
///
/// Shapes are row-major. A parameter may carry a group tag ("field", "mlp", ...)
/// so the optimizer can apply per-group learning rates.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        std::string group;
        std::vector<std::size_t> shape;
        std::vector<Real> value;
        std::vector<Real> grad;
    };

    ParamId add(std::string name, std::vector<std::size_t> shape, std::string group = "default");
    ParamId add(std::string name, std::vector<std::size_t> shape, std::vector<Real> init,
                std::string group = "default");

    ParamId find(const std::string& name) const;
    ParamId at(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    std::size_t total_elements() const;

    const Entry& entry(ParamId id) const { return entries_.at(id.index); }
    Entry& entry(ParamId id) { return entries_.at(id.index); }
    const std::vector<Entry>& entries() const { return entries_; }

    std::span<Real> value(ParamId id) { return entry(id).value; }
    std::span<const Real> value(ParamId id) const { return entry(id).value; }
    std::span<Real> grad(ParamId id) { return entry(id).grad; }
    std::span<const Real> grad(ParamId id) const { return entry(id).grad; }

    /// Rows/cols of the parameter viewed as a matrix (1-D arrays are 1×n).
    std::size_t rows(ParamId id) const;
    std::size_t cols(ParamId id) const;

    void zero_grads();
    void fill(Real v);

    /// True when every value and gradient buffer is finite.
    bool all_finite() const;

    /// Bitwise equality of names, shapes and values (gradients ignored).
    bool same_values(const ParameterStore& other) const;

private:
    std::vector<Entry> entries_;
};

std::size_t shape_elements(const std::vector<std::size_t>& shape);

} // namespace mmrf::diff
