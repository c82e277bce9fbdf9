// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/image.hpp"

#include <filesystem>

namespace mmrf {

/// 8-bit gray (1 channel) or RGB (3 channels) PNG.
void write_png(const std::filesystem::path& path, const Image8& img);
/// 16-bit grayscale PNG.
void write_png16(const std::filesystem::path& path, const Image16& img);

/// Reads an 8-bit gray/RGB PNG; palette and alpha are rejected.
Image8 read_png(const std::filesystem::path& path);
/// Reads a 16-bit grayscale PNG.
Image16 read_png16(const std::filesystem::path& path);

} // namespace mmrf
