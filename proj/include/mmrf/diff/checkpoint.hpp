// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/diff/adam.hpp"
#include "mmrf/diff/parameter_store.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace mmrf::diff {

/// On-disk layout (all integers little-endian):
///
///   bytes 0..7   magic "MMRFCKPT"
///   u32          format version (kCheckpointVersion)
///   u64          length of the JSON header in bytes
///   ...          JSON header: metadata, optimizer options/step, parameter table
///   ...          for each parameter in table order: values as f64, then (when
///                the header says so) first and second Adam moments as f64
///
/// Values are written as raw IEEE-754 bits, so save→load is exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ParameterStore params;
    std::optional<Adam> optimizer;
    nlohmann::json metadata;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params, const Adam* optimizer,
                     const nlohmann::json& metadata);

Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const AdamOptions& o);
AdamOptions adam_options_from_json(const nlohmann::json& j);

} // namespace mmrf::diff
