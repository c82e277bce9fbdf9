// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/core/image.hpp"

#include <algorithm>
#include <cmath>

namespace mmrf {

Image8 to_8bit(const ImageF& img)
{
    Image8 out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        out.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
    return out;
}

ImageF from_8bit(const Image8& img)
{
    ImageF out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = img.data[i] / 255.0;
    return out;
}

ImageF replicate_to_rgb(const ImageF& gray)
{
    if (gray.channels != 1)
        throw ContractError("replicate_to_rgb expects a single-channel image");
    ImageF out(gray.width, gray.height, 3);
    for (std::size_t p = 0; p < gray.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c)
            out.data[p * 3 + c] = gray.data[p];
    return out;
}

} // namespace mmrf
