// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/error.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mmrf {

/// Interleaved row-major image, pixel (x, y) channel c at ((y·width + x)·channels + c).
template <class T>
struct ImageT {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<T> data;

    ImageT() = default;
    ImageT(int w, int h, int c, T fill = T{})
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill)
    {
        if (w < 0 || h < 0 || c < 0)
            throw ContractError("negative image dimensions");
    }

    bool empty() const { return data.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int x, int y, int c = 0) const
    {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    bool same_shape(const ImageT& o) const
    {
        return width == o.width && height == o.height && channels == o.channels;
    }
    friend bool operator==(const ImageT&, const ImageT&) = default;
};

using ImageF = ImageT<double>;
using Image8 = ImageT<std::uint8_t>;
using Image16 = ImageT<std::uint16_t>;

/// round(255·clamp(v, 0, 1)) per sample.
Image8 to_8bit(const ImageF& img);
/// v / 255.
ImageF from_8bit(const Image8& img);
/// Repeats a 1-channel image into 3 channels.
ImageF replicate_to_rgb(const ImageF& gray);

} // namespace mmrf
