// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/metrics/image_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mmrf::metrics {

namespace {

void check_pair(const ImageF& a, const ImageF& b)
{
    if (!a.same_shape(b))
        throw ContractError("image shapes differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                            "x" + std::to_string(a.channels) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height) + "x" + std::to_string(b.channels));
    if (a.empty())
        throw ContractError("metric of an empty image");
}

std::vector<double> gaussian_kernel(int size, double sigma)
{
    std::vector<double> k(static_cast<std::size_t>(size));
    const double c = 0.5 * (size - 1);
    double sum = 0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k)
        v /= sum;
    return k;
}

// Separable "valid" filtering of a w×h plane; output is (w−n+1)×(h−n+1).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k)
{
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int i = 0; i < n; ++i)
                s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int i = 0; i < n; ++i)
                s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

} // namespace

double mse(const ImageF& a, const ImageF& b)
{
    check_pair(a, b);
    double sum = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr_from_mse(double mse_value, double max_value)
{
    if (!(max_value > 0))
        throw ContractError("psnr needs a positive max value");
    if (!(mse_value >= 0))
        throw ContractError("psnr needs a non-negative mse");
    if (mse_value == 0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_value * max_value / mse_value);
}

double psnr(const ImageF& a, const ImageF& b, double max_value)
{
    if (!(max_value > 0))
        throw ContractError("psnr needs a positive max value");
    return psnr_from_mse(mse(a, b), max_value);
}

double psnr_capped(const ImageF& a, const ImageF& b, double max_value)
{
    return std::min(psnr(a, b, max_value), kPsnrCap);
}

double ssim(const ImageF& a, const ImageF& b, const SsimOptions& opt)
{
    check_pair(a, b);
    if (opt.window < 1 || !(opt.sigma > 0) || !(opt.dynamic_range > 0))
        throw ContractError("invalid ssim options");
    if (a.width < opt.window || a.height < opt.window)
        throw ContractError("image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                            " is smaller than the " + std::to_string(opt.window) + "x" +
                            std::to_string(opt.window) + " ssim window");
    const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
    const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
    const auto kernel = gaussian_kernel(opt.window, opt.sigma);
    const int w = a.width;
    const int h = a.height;
    const auto n = static_cast<std::size_t>(w) * h;

    double total = 0;
    std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
    for (int c = 0; c < a.channels; ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            const double x = a.data[p * a.channels + c];
            const double y = b.data[p * b.channels + c];
            pa[p] = x;
            pb[p] = y;
            aa[p] = x * x;
            bb[p] = y * y;
            ab[p] = x * y;
        }
        const auto mu_a = filter_valid(pa, w, h, kernel);
        const auto mu_b = filter_valid(pb, w, h, kernel);
        const auto e_aa = filter_valid(aa, w, h, kernel);
        const auto e_bb = filter_valid(bb, w, h, kernel);
        const auto e_ab = filter_valid(ab, w, h, kernel);
        double sum = 0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i];
            const double mb = mu_b[i];
            const double va = e_aa[i] - ma * ma;
            const double vb = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            sum += ((2 * (ma * mb) + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / a.channels;
}

} // namespace mmrf::metrics
