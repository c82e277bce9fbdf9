// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/sensors/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace mmrf::sensors {

void EventStream::validate() const
{
    if (width < 1 || height < 1 || width > 65535 || height > 65535)
        throw ContractError("event sensor size " + std::to_string(width) + "x" + std::to_string(height) +
                            " is out of range");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (i > 0 && e.t_us < events[i - 1].t_us)
            throw ContractError("event " + std::to_string(i) + " has a decreasing timestamp");
        if (e.x >= width || e.y >= height)
            throw ContractError("event " + std::to_string(i) + " lies outside the sensor");
        if (e.polarity != 1 && e.polarity != -1)
            throw ContractError("event " + std::to_string(i) + " has polarity " + std::to_string(e.polarity));
    }
}

std::uint64_t seconds_to_us(double seconds)
{
    if (!std::isfinite(seconds) || seconds < 0)
        throw ContractError("time " + std::to_string(seconds) + " s is not a valid timestamp");
    return static_cast<std::uint64_t>(std::llround(seconds * 1e6));
}

AccumulationResult accumulate_events(const EventStream& stream, std::span<const double> frame_times, double window)
{
    stream.validate();
    if (!(window > 0))
        throw ContractError("event window must be positive");
    if (!std::is_sorted(frame_times.begin(), frame_times.end()))
        throw ContractError("frame times must be sorted");

    AccumulationResult out;
    const auto pixels = static_cast<std::size_t>(stream.width) * stream.height;
    std::uint64_t prev_end = 0;
    for (std::size_t k = 0; k < frame_times.size(); ++k) {
        const auto start = seconds_to_us(frame_times[k]);
        const auto end = seconds_to_us(frame_times[k] + window);
        if (k > 0 && start < prev_end)
            out.warnings.push_back("event windows " + std::to_string(k - 1) + " and " + std::to_string(k) +
                                   " overlap");
        prev_end = end;

        EventFrame f;
        f.width = stream.width;
        f.height = stream.height;
        f.t_start = frame_times[k];
        f.t_end = frame_times[k] + window;
        f.acc.assign(pixels, 0);
        auto by_time = [](const Event& e, std::uint64_t t) { return e.t_us < t; };
        auto first = std::lower_bound(stream.events.begin(), stream.events.end(), start, by_time);
        auto last = std::lower_bound(first, stream.events.end(), end, by_time);
        for (auto it = first; it != last; ++it)
            f.acc[static_cast<std::size_t>(it->y) * stream.width + it->x] += it->polarity;
        out.frames.push_back(std::move(f));
    }
    return out;
}

ImageF normalize_event_frame(const EventFrame& frame, double clip)
{
    if (!(clip > 0))
        throw ContractError("event clip must be positive");
    ImageF img(frame.width, frame.height, 1);
    for (std::size_t i = 0; i < frame.acc.size(); ++i) {
        const double a = std::clamp(static_cast<double>(frame.acc[i]), -clip, clip);
        img.data[i] = 0.5 + 0.5 * a / clip;
    }
    return img;
}

ImageF luminance(const ImageF& img)
{
    if (img.channels == 1)
        return img;
    if (img.channels != 3)
        throw ContractError("luminance needs a 1- or 3-channel image");
    ImageF out(img.width, img.height, 1);
    for (std::size_t p = 0; p < out.data.size(); ++p)
        out.data[p] = 0.2126 * img.data[3 * p] + 0.7152 * img.data[3 * p + 1] + 0.0722 * img.data[3 * p + 2];
    return out;
}

namespace {

// A crossing registers when the log intensity is within this fraction of a
// full threshold, so exact multiples survive rounding in log().
constexpr double kCrossingSlack = 1e-9;

template <class Emit>
void simulate_pixel(std::span<const double> log_i, double threshold, Emit emit)
{
    const double need = threshold * (1 - kCrossingSlack);
    double ref = log_i[0];
    for (std::size_t k = 0; k + 1 < log_i.size(); ++k) {
        const double l0 = log_i[k];
        const double l1 = log_i[k + 1];
        while (l1 - ref >= need) {
            ref += threshold;
            emit(k, std::clamp((ref - l0) / (l1 - l0), 0.0, 1.0), std::int8_t{1});
        }
        while (ref - l1 >= need) {
            ref -= threshold;
            emit(k, std::clamp((ref - l0) / (l1 - l0), 0.0, 1.0), std::int8_t{-1});
        }
    }
}

void check_synthesis_args(double threshold, double floor)
{
    if (!(threshold > 0))
        throw ContractError("event threshold must be positive");
    if (!(floor > 0))
        throw ContractError("luminance floor must be positive");
}

} // namespace

std::int64_t signed_crossings(std::span<const double> intensities, double threshold, double floor)
{
    check_synthesis_args(threshold, floor);
    if (intensities.empty())
        return 0;
    std::vector<double> log_i(intensities.size());
    for (std::size_t k = 0; k < intensities.size(); ++k)
        log_i[k] = std::log(std::max(intensities[k], floor));
    std::int64_t total = 0;
    simulate_pixel(log_i, threshold, [&](std::size_t, double, std::int8_t p) { total += p; });
    return total;
}

EventStream synthesize_events(const std::vector<ImageF>& video, std::span<const std::uint64_t> frame_times_us,
                              double threshold, double floor)
{
    check_synthesis_args(threshold, floor);
    if (video.size() < 2)
        throw ContractError("event synthesis needs at least 2 frames");
    if (frame_times_us.size() != video.size())
        throw ContractError("event synthesis needs one timestamp per frame");
    for (std::size_t k = 1; k < frame_times_us.size(); ++k)
        if (frame_times_us[k] <= frame_times_us[k - 1])
            throw ContractError("frame timestamps must be strictly increasing");
    for (const auto& f : video)
        if (f.channels != 1 || f.width != video[0].width || f.height != video[0].height)
            throw ContractError("event synthesis needs equally sized 1-channel frames");

    EventStream s;
    s.width = video[0].width;
    s.height = video[0].height;
    const auto pixels = video[0].pixel_count();
    std::vector<double> log_i(video.size());
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t k = 0; k < video.size(); ++k)
            log_i[k] = std::log(std::max(video[k].data[p], floor));
        const auto x = static_cast<std::uint16_t>(p % static_cast<std::size_t>(s.width));
        const auto y = static_cast<std::uint16_t>(p / static_cast<std::size_t>(s.width));
        simulate_pixel(log_i, threshold, [&](std::size_t k, double frac, std::int8_t pol) {
            const double t0 = static_cast<double>(frame_times_us[k]);
            const double t1 = static_cast<double>(frame_times_us[k + 1]);
            const auto t = static_cast<std::uint64_t>(std::llround(t0 + frac * (t1 - t0)));
            s.events.push_back({t, x, y, pol});
        });
    }
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
    s.validate();
    return s;
}

namespace {

template <class T>
void put_le(std::string& buf, T v)
{
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const unsigned char* p)
{
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    return static_cast<T>(u);
}

constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 16;

} // namespace

void write_events(const std::filesystem::path& path, const EventStream& stream)
{
    stream.validate();
    if (stream.events.size() > 0xFFFFFFFFu)
        throw ContractError("too many events for the binary format");
    std::string buf;
    buf.reserve(kHeaderBytes + kRecordBytes * stream.events.size());
    buf.append("EVT0");
    put_le<std::uint32_t>(buf, kEventFormatVersion);
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(stream.width));
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(stream.height));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(stream.events.size()));
    for (const auto& e : stream.events) {
        put_le<std::uint64_t>(buf, e.t_us);
        put_le<std::uint16_t>(buf, e.x);
        put_le<std::uint16_t>(buf, e.y);
        put_le<std::int8_t>(buf, e.polarity);
        buf.append(3, '\0');
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path.string() + " for writing");
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f)
        throw IoError("write failed: " + path.string());
}

EventStream read_events(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), "EVT0", 4) != 0)
        throw FormatError(path.string() + ": not an event file");
    const auto version = get_le<std::uint32_t>(buf.data() + 4);
    if (version != kEventFormatVersion)
        throw FormatError(path.string() + ": unsupported event format version " + std::to_string(version));
    EventStream s;
    s.width = get_le<std::uint16_t>(buf.data() + 8);
    s.height = get_le<std::uint16_t>(buf.data() + 10);
    const auto count = get_le<std::uint32_t>(buf.data() + 12);
    if (buf.size() != kHeaderBytes + kRecordBytes * static_cast<std::size_t>(count))
        throw FormatError(path.string() + ": size does not match " + std::to_string(count) + " records");
    s.events.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* r = buf.data() + kHeaderBytes + kRecordBytes * i;
        s.events[i] = {get_le<std::uint64_t>(r), get_le<std::uint16_t>(r + 8), get_le<std::uint16_t>(r + 10),
                       get_le<std::int8_t>(r + 12)};
    }
    try {
        s.validate();
    } catch (const ContractError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return s;
}

} // namespace mmrf::sensors
