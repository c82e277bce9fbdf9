// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/render/camera.hpp"

#include <random>
#include <span>
#include <vector>

namespace mmrf::render {

/// Stratified samples over [near, far]: one per equal-width bin, uniformly
/// jittered inside the bin when `rng` is given, at the bin midpoint otherwise.
std::vector<double> sample_coarse(double near, double far, int n, std::mt19937_64* rng = nullptr);
std::vector<double> sample_coarse(const Ray& ray, int n, std::mt19937_64* rng = nullptr);

/// Inverse-CDF samples from the piecewise-constant density over the coarse bins
/// (bin i = i-th equal slice of [near, far], mass ∝ coarse_weights[i]). All-zero
/// weights fall back to stratified uniform sampling. Result is sorted.
/// Throws ContractError on negative or non-finite weights.
std::vector<double> sample_fine(double near, double far, std::span<const double> coarse_weights, int n,
                                std::mt19937_64* rng = nullptr);
std::vector<double> sample_fine(const Ray& ray, std::span<const double> coarse_weights, int n,
                                std::mt19937_64* rng = nullptr);

/// Sorted union of two sorted sample lists.
std::vector<double> merge_samples(std::span<const double> a, std::span<const double> b);

} // namespace mmrf::render
