#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinycnn/errors.hpp"
#include "tinycnn/model.hpp"

namespace tinycnn {

// Half of a 36-Kbit block RAM: the packing granularity. Each weight ROM and
// fmap RAM occupies a whole number of these.
inline constexpr long long kHalfBlockBits = 18432;

struct DeviceSpec {
    std::string name;
    int bram36 = 0;
    long long bram36_bits = 36864;
    int dsp = 0;
    double clock_mhz = 100.0;

    long long total_bram_bits() const { return bram36 * bram36_bits; }
    long long half_blocks() const { return 2LL * bram36; }
    void validate() const {
        if (bram36 < 1 || dsp < 1 || bram36_bits < 1)
            throw ParseError("device spec: counts must be >= 1");
        if (clock_mhz <= 0) throw ParseError("device spec: clock must be positive");
    }
};

inline DeviceSpec device_from_json(const nlohmann::json& j) {
    DeviceSpec dev;
    try {
        dev.name = j.at("name").get<std::string>();
        dev.bram36 = j.at("bram36").get<int>();
        dev.bram36_bits = j.at("bram36_bits").get<long long>();
        dev.dsp = j.at("dsp").get<int>();
        dev.clock_mhz = j.value("clock_mhz", 100.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("device spec: ") + e.what());
    }
    dev.validate();
    return dev;
}

inline nlohmann::json device_to_json(const DeviceSpec& dev) {
    return nlohmann::json{{"name", dev.name},
                          {"bram36", dev.bram36},
                          {"bram36_bits", dev.bram36_bits},
                          {"dsp", dev.dsp},
                          {"clock_mhz", dev.clock_mhz}};
}

inline DeviceSpec load_device(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("missing device spec: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("device spec: ") + e.what());
    }
    return device_from_json(j);
}

enum class ConvMode { Shared, Exclusive };

inline const char* conv_mode_name(ConvMode m) {
    return m == ConvMode::Shared ? "shared" : "exclusive";
}

// DSP allocation and clocking. dsp_per_conv holds one entry in Shared mode;
// in Exclusive mode one entry per conv layer, or a single value applied to
// all of them.
struct HardwareConfig {
    ConvMode mode = ConvMode::Shared;
    std::vector<int> dsp_per_conv = {16};
    int dsp_dense = 16;
    double clock_mhz = 100.0;
    bool double_buffer = false;

    int conv_dsp(std::size_t conv_index, std::size_t n_conv) const {
        if (mode == ConvMode::Shared || dsp_per_conv.size() == 1)
            return dsp_per_conv.at(0);
        (void)n_conv;
        return dsp_per_conv.at(conv_index);
    }
    void validate(std::size_t n_conv) const {
        if (dsp_per_conv.empty())
            throw Error("hardware config: need at least one DSP allocation");
        if (mode == ConvMode::Shared && dsp_per_conv.size() != 1)
            throw Error("hardware config: shared mode takes a single DSP count");
        if (mode == ConvMode::Exclusive && dsp_per_conv.size() != 1 &&
            dsp_per_conv.size() != n_conv)
            throw Error("hardware config: exclusive mode takes one DSP count "
                        "or one per conv layer (" + std::to_string(n_conv) + ")");
        for (int d : dsp_per_conv)
            if (d < 1) throw Error("hardware config: DSP counts must be >= 1");
        if (dsp_dense < 1)
            throw Error("hardware config: dense DSP count must be >= 1");
        if (clock_mhz <= 0)
            throw Error("hardware config: clock must be positive");
    }
};

struct MemoryItem {
    std::string name;
    long long bits = 0;
    long long half_blocks = 0;
};

struct FitResult {
    bool fits = false;
    bool bram_ok = false;
    bool dsp_ok = false;
    long long weight_bits = 0;
    long long fmap_bits = 0;
    long long half_blocks_needed = 0;
    long long half_blocks_available = 0;
    long long dsp_needed = 0;
    long long dsp_available = 0;
    std::vector<MemoryItem> breakdown;
    std::string binding;  // names the exhausted resources when !fits
};

inline long long half_blocks_for(long long bits) {
    return (bits + kHalfBlockBits - 1) / kHalfBlockBits;
}

// One fmap RAM per conv/dense layer (the units that buffer their input
// fmap), one weight ROM per parameterized layer.
inline std::vector<MemoryItem> memory_footprint(const NetworkSpec& spec, int width,
                                                const HardwareConfig& config) {
    if (!spec.shapes_inferred())
        throw Error("memory_footprint requires inferred shapes");
    std::vector<MemoryItem> items;
    const long long fmap_factor = config.double_buffer ? 2 : 1;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& layer = spec.layers[l];
        const std::string tag = "layer" + std::to_string(l) + " " +
                                layer_kind_name(layer.kind);
        if (layer.kind == LayerKind::Conv2d || layer.kind == LayerKind::Dense) {
            const long long bits = fmap_factor *
                                   static_cast<long long>(
                                       spec.per_layer_shapes[l].in.elements()) *
                                   width;
            items.push_back({tag + " fmap ram", bits, half_blocks_for(bits)});
        }
        if (layer.parameterized()) {
            const long long bits =
                param_count(layer, spec.per_layer_shapes[l].in) * width;
            items.push_back({tag + " weight rom", bits, half_blocks_for(bits)});
        }
    }
    return items;
}

inline FitResult check_fit(const NetworkSpec& spec, const DeviceSpec& device,
                           int width, const HardwareConfig& config) {
    config.validate(spec.conv_layers().size());
    FitResult r;
    r.breakdown = memory_footprint(spec, width, config);
    for (const auto& item : r.breakdown) {
        r.half_blocks_needed += item.half_blocks;
        if (item.name.find("weight rom") != std::string::npos)
            r.weight_bits += item.bits;
        else
            r.fmap_bits += item.bits;
    }
    r.half_blocks_available = device.half_blocks();
    r.bram_ok = r.half_blocks_needed <= r.half_blocks_available;

    const auto convs = spec.conv_layers();
    bool has_dense = false;
    for (const auto& layer : spec.layers)
        if (layer.kind == LayerKind::Dense) has_dense = true;
    if (!convs.empty()) {
        if (config.mode == ConvMode::Shared) {
            r.dsp_needed += config.dsp_per_conv[0];
        } else {
            for (std::size_t j = 0; j < convs.size(); ++j)
                r.dsp_needed += config.conv_dsp(j, convs.size());
        }
    }
    if (has_dense) r.dsp_needed += config.dsp_dense;
    r.dsp_available = device.dsp;
    r.dsp_ok = r.dsp_needed <= r.dsp_available;

    r.fits = r.bram_ok && r.dsp_ok;
    if (!r.bram_ok) r.binding = "BRAM";
    if (!r.dsp_ok) r.binding += r.binding.empty() ? "DSP" : "+DSP";
    return r;
}

} // namespace tinycnn
