// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/image.hpp"

namespace mmrf::metrics {

inline constexpr double kPsnrCap = 99.0;

double mse(const ImageF& a, const ImageF& b);
/// 10·log10(max_value²/mse); +infinity for mse = 0.
double psnr_from_mse(double mse_value, double max_value = 1.0);
/// 10·log10(max_value²/MSE); +infinity when the images are equal.
double psnr(const ImageF& a, const ImageF& b, double max_value = 1.0);
/// psnr() limited to kPsnrCap, for reports.
double psnr_capped(const ImageF& a, const ImageF& b, double max_value = 1.0);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over all fully contained windows, averaged over channels.
/// Throws ContractError for mismatched shapes or images smaller than the window.
double ssim(const ImageF& a, const ImageF& b, const SsimOptions& opt = {});

} // namespace mmrf::metrics
