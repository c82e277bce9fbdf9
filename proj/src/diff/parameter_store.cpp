// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/diff/parameter_store.hpp"

#include "mmrf/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mmrf::diff {

std::size_t shape_elements(const std::vector<std::size_t>& shape)
{
    std::size_t n = 1;
    for (auto d : shape)
        n *= d;
    return shape.empty() ? 0 : n;
}

ParamId ParameterStore::add(std::string name, std::vector<std::size_t> shape, std::string group)
{
    const auto n = shape_elements(shape);
    return add(std::move(name), std::move(shape), std::vector<Real>(n, 0.0), std::move(group));
}

ParamId ParameterStore::add(std::string name, std::vector<std::size_t> shape, std::vector<Real> init,
                            std::string group)
{
    if (shape.empty() || shape.size() > 2)
        throw ContractError("parameter '" + name + "' must be 1-D or 2-D");
    if (find(name).valid())
        throw ContractError("duplicate parameter name '" + name + "'");
    const auto n = shape_elements(shape);
    if (init.size() != n)
        throw ContractError("parameter '" + name + "' initializer has " + std::to_string(init.size()) +
                            " values, shape needs " + std::to_string(n));
    Entry e;
    e.name = std::move(name);
    e.group = std::move(group);
    e.shape = std::move(shape);
    e.value = std::move(init);
    e.grad.assign(n, 0.0);
    entries_.push_back(std::move(e));
    return ParamId{entries_.size() - 1};
}

ParamId ParameterStore::find(const std::string& name) const
{
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name)
            return ParamId{i};
    return ParamId{};
}

ParamId ParameterStore::at(const std::string& name) const
{
    auto id = find(name);
    if (!id.valid())
        throw ContractError("unknown parameter '" + name + "'");
    return id;
}

std::size_t ParameterStore::total_elements() const
{
    std::size_t n = 0;
    for (const auto& e : entries_)
        n += e.value.size();
    return n;
}

std::size_t ParameterStore::rows(ParamId id) const
{
    const auto& s = entry(id).shape;
    return s.size() == 1 ? 1 : s[0];
}

std::size_t ParameterStore::cols(ParamId id) const
{
    const auto& s = entry(id).shape;
    return s.size() == 1 ? s[0] : s[1];
}

void ParameterStore::zero_grads()
{
    for (auto& e : entries_)
        std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

void ParameterStore::fill(Real v)
{
    for (auto& e : entries_)
        std::fill(e.value.begin(), e.value.end(), v);
}

bool ParameterStore::all_finite() const
{
    for (const auto& e : entries_) {
        for (auto v : e.value)
            if (!std::isfinite(v))
                return false;
        for (auto g : e.grad)
            if (!std::isfinite(g))
                return false;
    }
    return true;
}

bool ParameterStore::same_values(const ParameterStore& other) const
{
    if (entries_.size() != other.entries_.size())
        return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.shape != b.shape || a.group != b.group)
            return false;
        if (std::memcmp(a.value.data(), b.value.data(), a.value.size() * sizeof(Real)) != 0)
            return false;
    }
    return true;
}

} // namespace mmrf::diff
