// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/render/sampling.hpp"

#include "mmrf/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace mmrf::render {

std::vector<double> sample_coarse(double near, double far, int n, std::mt19937_64* rng)
{
    if (n < 1)
        throw ContractError("sample count must be >= 1");
    if (!(near < far))
        throw ContractError("sample_coarse needs near < far");
    const double step = (far - near) / n;
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = rng ? jitter(*rng) : 0.5;
        t[i] = near + (i + u) * step;
    }
    return t;
}

std::vector<double> sample_coarse(const Ray& ray, int n, std::mt19937_64* rng)
{
    return sample_coarse(ray.near, ray.far, n, rng);
}

std::vector<double> sample_fine(double near, double far, std::span<const double> coarse_weights, int n,
                                std::mt19937_64* rng)
{
    if (n < 1)
        throw ContractError("sample count must be >= 1");
    if (coarse_weights.empty())
        throw ContractError("sample_fine needs at least one coarse weight");
    if (!(near < far))
        throw ContractError("sample_fine needs near < far");
    double total = 0.0;
    for (double w : coarse_weights) {
        if (!std::isfinite(w) || w < 0)
            throw ContractError("coarse weights must be finite and non-negative");
        total += w;
    }
    if (total <= 0)
        return sample_coarse(near, far, n, rng);

    const auto bins = coarse_weights.size();
    std::vector<double> cdf(bins + 1, 0.0);
    for (std::size_t i = 0; i < bins; ++i)
        cdf[i + 1] = cdf[i] + coarse_weights[i] / total;
    cdf[bins] = 1.0;

    std::vector<double> u(static_cast<std::size_t>(n));
    if (rng) {
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        for (auto& x : u)
            x = dist(*rng);
        std::sort(u.begin(), u.end());
    } else {
        for (int j = 0; j < n; ++j)
            u[j] = (j + 0.5) / n;
    }

    const double width = (far - near) / static_cast<double>(bins);
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        // first bin whose upper CDF edge is strictly above u; zero-mass bins are skipped
        auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u[j]);
        auto bin = static_cast<std::size_t>(std::distance(cdf.begin() + 1, it));
        bin = std::min(bin, bins - 1);
        while (bin > 0 && coarse_weights[bin] <= 0)
            --bin;
        const double mass = cdf[bin + 1] - cdf[bin];
        double frac = mass > 0 ? (u[j] - cdf[bin]) / mass : 0.5;
        frac = std::clamp(frac, 0.0, 1.0);
        t[j] = near + (static_cast<double>(bin) + frac) * width;
    }
    std::sort(t.begin(), t.end());
    return t;
}

std::vector<double> sample_fine(const Ray& ray, std::span<const double> coarse_weights, int n, std::mt19937_64* rng)
{
    return sample_fine(ray.near, ray.far, coarse_weights, n, rng);
}

std::vector<double> merge_samples(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> out(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
    return out;
}

} // namespace mmrf::render
