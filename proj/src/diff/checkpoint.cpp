// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/diff/checkpoint.hpp"

#include "mmrf/core/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mmrf::diff {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'M', 'R', 'F', 'C', 'K', 'P', 'T'};

template <class T>
void write_pod(std::ofstream& out, const T& v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::filesystem::path& path)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in)
        throw FormatError("truncated checkpoint '" + path.string() + "'");
    return v;
}

void write_reals(std::ofstream& out, const std::vector<Real>& v)
{
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(Real)));
}

void read_reals(std::ifstream& in, std::vector<Real>& v, const std::filesystem::path& path)
{
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(Real)));
    if (!in)
        throw FormatError("truncated checkpoint '" + path.string() + "'");
}

} // namespace

nlohmann::json to_json(const AdamOptions& o)
{
    return {{"lr", o.lr},
            {"beta1", o.beta1},
            {"beta2", o.beta2},
            {"eps", o.eps},
            {"final_lr_factor", o.final_lr_factor},
            {"decay_steps", o.decay_steps},
            {"group_lr", o.group_lr}};
}

AdamOptions adam_options_from_json(const nlohmann::json& j)
{
    AdamOptions o;
    o.lr = j.at("lr").get<Real>();
    o.beta1 = j.at("beta1").get<Real>();
    o.beta2 = j.at("beta2").get<Real>();
    o.eps = j.at("eps").get<Real>();
    o.final_lr_factor = j.at("final_lr_factor").get<Real>();
    o.decay_steps = j.at("decay_steps").get<std::int64_t>();
    o.group_lr = j.at("group_lr").get<std::map<std::string, Real>>();
    return o;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params, const Adam* optimizer,
                     const nlohmann::json& metadata)
{
    nlohmann::json header;
    header["format"] = "mmrf-checkpoint";
    header["metadata"] = metadata;
    auto table = nlohmann::json::array();
    for (const auto& e : params.entries())
        table.push_back({{"name", e.name}, {"group", e.group}, {"shape", e.shape}});
    header["params"] = table;
    const bool has_moments = optimizer != nullptr && optimizer->first_moments().size() == params.size();
    if (optimizer != nullptr) {
        header["optimizer"] = {{"options", to_json(optimizer->options())},
                               {"step", optimizer->step_count()},
                               {"has_moments", has_moments}};
    }
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        write_reals(out, params.entries()[i].value);
        if (has_moments) {
            write_reals(out, optimizer->first_moments()[i]);
            write_reals(out, optimizer->second_moments()[i]);
        }
    }
    if (!out)
        throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open checkpoint '" + path.string() + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic)");
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint '" + path.string() + "' has unsupported version " + std::to_string(version));
    const auto len = read_pod<std::uint64_t>(in, path);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in)
        throw FormatError("truncated checkpoint header in '" + path.string() + "'");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("corrupt checkpoint header in '" + path.string() + "': " + e.what());
    }

    Checkpoint ck;
    ck.metadata = header.value("metadata", nlohmann::json::object());
    bool has_moments = false;
    std::int64_t step = 0;
    if (header.contains("optimizer")) {
        const auto& o = header["optimizer"];
        ck.optimizer.emplace(adam_options_from_json(o.at("options")));
        step = o.at("step").get<std::int64_t>();
        has_moments = o.at("has_moments").get<bool>();
    }
    std::vector<std::vector<Real>> m;
    std::vector<std::vector<Real>> v;
    for (const auto& p : header.at("params")) {
        auto shape = p.at("shape").get<std::vector<std::size_t>>();
        auto id = ck.params.add(p.at("name").get<std::string>(), shape, p.at("group").get<std::string>());
        read_reals(in, ck.params.entry(id).value, path);
        if (has_moments) {
            m.emplace_back(shape_elements(shape));
            v.emplace_back(shape_elements(shape));
            read_reals(in, m.back(), path);
            read_reals(in, v.back(), path);
        }
    }
    if (ck.optimizer)
        ck.optimizer->restore(step, std::move(m), std::move(v));
    return ck;
}

} // namespace mmrf::diff
