// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmrf/core/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmrf::sensors {

struct Event {
    std::uint64_t t_us = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t polarity = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Time-ordered events of one sensor.
struct EventStream {
    int width = 0;
    int height = 0;
    std::vector<Event> events;

    /// Throws ContractError on decreasing timestamps, out-of-range pixels or a
    /// polarity other than ±1.
    void validate() const;
    friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Signed polarity sums over the window [t_start, t_end).
struct EventFrame {
    int width = 0;
    int height = 0;
    double t_start = 0;
    double t_end = 0;
    std::vector<std::int64_t> acc;

    std::int64_t at(int x, int y) const { return acc[static_cast<std::size_t>(y) * width + x]; }
};

struct AccumulationResult {
    std::vector<EventFrame> frames;
    /// Non-fatal findings, e.g. overlapping windows.
    std::vector<std::string> warnings;
};

/// Microsecond value of a time in seconds, rounded to nearest.
std::uint64_t seconds_to_us(double seconds);

/// One frame per window start: frame k sums polarities of events with
/// t ∈ [t_k, t_k + window). Window bounds are rounded to whole microseconds.
/// Events outside every window are dropped.
AccumulationResult accumulate_events(const EventStream& stream, std::span<const double> frame_times,
                                     double window);

/// 0.5 + 0.5·clamp(acc, −clip, clip)/clip as a 1-channel image.
ImageF normalize_event_frame(const EventFrame& frame, double clip = 5.0);

/// Rec. 709 luma of a 3-channel image (1 channel out); 1-channel input is copied.
ImageF luminance(const ImageF& img);

/// Contrast-threshold event simulator.
///
/// Per pixel the reference starts at log(max(L_0, floor)). Whenever the log
/// intensity moves a full `threshold` past the reference, one event fires, the
/// reference moves by ±threshold, and the timestamp is linearly interpolated
/// inside the frame gap. Output is sorted by time, ties by pixel (row-major)
/// and then emission order.
EventStream synthesize_events(const std::vector<ImageF>& luminance_video, std::span<const std::uint64_t> frame_times_us,
                              double threshold, double floor = 1e-4);

/// Signed crossing count of one scalar log-intensity sequence (the per-pixel
/// simulator used by synthesize_events, exposed for checks).
std::int64_t signed_crossings(std::span<const double> intensities, double threshold, double floor = 1e-4);

inline constexpr std::uint32_t kEventFormatVersion = 1;

/// Little-endian binary: "EVT0", u32 version, u16 width, u16 height, u32 count,
/// then 16-byte records (u64 t_us, u16 x, u16 y, i8 polarity, 3 zero bytes).
void write_events(const std::filesystem::path& path, const EventStream& stream);
EventStream read_events(const std::filesystem::path& path);

} // namespace mmrf::sensors
