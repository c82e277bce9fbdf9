// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/image.hpp"
#include "mmrf/field/model.hpp"
#include "mmrf/render/camera.hpp"
#include "mmrf/render/composite.hpp"

#include <random>
#include <vector>

namespace mmrf::render {

struct RenderOptions {
    int n_coarse = 64;
    int n_fine = 64;
    Background background;
    /// Rays start no closer than this to their origin.
    double min_near = 0.0;
    /// Rays rendered per tape when rendering whole images.
    int chunk = 4096;
};

/// One pass (coarse or fine) over a bundle. Colors are [R×3] over all rays of
/// the bundle; rays that miss the box contribute constant background rows.
struct PassOutput {
    diff::Var rgb;
    diff::Var xspec;
    diff::Matrix weights;        ///< [R×S], zero rows for missing rays
    diff::Matrix t;              ///< [R×S] sample positions
    std::vector<double> opacity; ///< per ray
    std::vector<double> depth;   ///< per ray
};

struct RenderResult {
    PassOutput coarse;
    PassOutput fine;
};

/// Coarse pass on the coarse field with stratified samples, then a fine pass on
/// the fine field over the merged coarse + importance samples. Rays must already
/// carry near/far (see clip_to_box). With `rng`, coarse and fine samples are
/// randomized; without it the sampling is deterministic.
RenderResult render_rays(diff::Tape& tape, const field::RadianceModel& model, const RayBundle& bundle,
                         const RenderOptions& options, std::mt19937_64* rng = nullptr);

struct RenderedImages {
    ImageF rgb;     ///< 3 channels
    ImageF xspec;   ///< 3 channels
    ImageF opacity; ///< 1 channel
    ImageF depth;   ///< 1 channel
};

/// Deterministic full-image render (fine pass) of both heads.
RenderedImages render_image(const field::RadianceModel& model, const CameraModel& camera,
                            const RenderOptions& options);

} // namespace mmrf::render
