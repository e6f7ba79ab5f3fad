#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinycnn/errors.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/resource.hpp"

namespace tinycnn {

// Timing constants the cycle model cannot derive from the design itself:
// per-row handoff cost inside the conv unit, and the per-conv-layer
// arbitration cost paid in shared mode. Estimates, never board-accurate.
struct PerfParams {
    long long c_row = 4;
    long long a_arb = 16;
};

struct PerfReport {
    ConvMode mode = ConvMode::Shared;
    std::vector<long long> per_layer_cycles;   // one entry per network layer
    std::vector<long long> stage_cycles;       // exclusive-mode pipeline stages
    long long total_cycles = 0;
    double clock_mhz = 100.0;
    double runtime_ms = 0.0;
};

namespace detail {

inline long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

} // namespace detail

// Fed-fmap pixel bound: the conv unit cannot use more MAC lanes than there
// are pixels in the fmap being streamed to it.
inline long long conv_dsp_bound(const TensorShape& in_shape) {
    return static_cast<long long>(in_shape.elements());
}

inline long long layer_cycles(const LayerSpec& layer, const TensorShape& in_shape,
                              long long dsp, const PerfParams& params = {}) {
    switch (layer.kind) {
    case LayerKind::Conv2d: {
        if (dsp < 1 || dsp > conv_dsp_bound(in_shape))
            throw Error("layer_cycles: conv DSP count " + std::to_string(dsp) +
                        " outside [1, " + std::to_string(conv_dsp_bound(in_shape)) +
                        "]");
        const long long out_ch = layer.out_channels;
        const long long in_ch = in_shape.channels;
        const long long k2 = static_cast<long long>(layer.kernel) * layer.kernel;
        const long long macs = static_cast<long long>(in_shape.height) *
                               in_shape.width * out_ch * in_ch * k2;
        const long long handoff =
            params.c_row * in_shape.height * in_ch * out_ch;
        return detail::ceil_div(macs, dsp) + handoff;
    }
    case LayerKind::Dense: {
        if (dsp < 1) throw Error("layer_cycles: dense DSP count must be >= 1");
        const long long n_in = static_cast<long long>(in_shape.elements());
        const long long out = layer.units;
        return detail::ceil_div(n_in * out, dsp) + out;
    }
    case LayerKind::Relu:
        return static_cast<long long>(in_shape.elements());
    case LayerKind::Flatten:
        return static_cast<long long>(in_shape.elements());
    case LayerKind::MaxPool: {
        const long long m = layer.pool_size;
        return static_cast<long long>(in_shape.elements()) / (m * m);
    }
    }
    throw Error("layer_cycles: unknown layer kind");
}

// Shared mode: one conv unit serves every layer in sequence, so cycles add,
// plus an arbitration cost per conv layer. Exclusive mode: per-conv-layer
// units pipeline across images; the per-image interval is the slowest
// stage. A stage is a conv layer fused with the layers that follow it up to
// the next conv; the dense tail forms one stage, and any layers before the
// first conv form a prefix stage.
inline PerfReport total_cycles(const NetworkSpec& spec, const HardwareConfig& config,
                               const PerfParams& params = {}) {
    if (!spec.shapes_inferred())
        throw Error("total_cycles requires inferred shapes");
    const auto convs = spec.conv_layers();
    config.validate(convs.size());

    PerfReport report;
    report.mode = config.mode;
    report.clock_mhz = config.clock_mhz;
    report.per_layer_cycles.resize(spec.layers.size());

    std::size_t conv_seen = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& layer = spec.layers[l];
        const TensorShape& in = spec.per_layer_shapes[l].in;
        long long dsp = 1;
        if (layer.kind == LayerKind::Conv2d) {
            dsp = std::min<long long>(config.conv_dsp(conv_seen, convs.size()),
                                      conv_dsp_bound(in));
            ++conv_seen;
        } else if (layer.kind == LayerKind::Dense) {
            dsp = config.dsp_dense;
        }
        report.per_layer_cycles[l] = layer_cycles(layer, in, dsp, params);
    }

    if (config.mode == ConvMode::Shared) {
        long long total = 0;
        for (long long c : report.per_layer_cycles) total += c;
        total += params.a_arb * static_cast<long long>(convs.size());
        report.total_cycles = total;
    } else {
        std::vector<long long> stages;
        long long cur = 0;
        bool dense_tail = false;
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            const LayerKind kind = spec.layers[l].kind;
            const bool starts_stage =
                (kind == LayerKind::Conv2d && l > 0) ||
                (kind == LayerKind::Dense && !dense_tail);
            if (starts_stage && l > 0) {
                stages.push_back(cur);
                cur = 0;
            }
            if (kind == LayerKind::Dense) dense_tail = true;
            cur += report.per_layer_cycles[l];
        }
        stages.push_back(cur);
        report.stage_cycles = stages;
        report.total_cycles = *std::max_element(stages.begin(), stages.end());
    }

    report.runtime_ms =
        static_cast<double>(report.total_cycles) / (config.clock_mhz * 1000.0);
    return report;
}

inline double speedup_ratio(double sw_baseline_ms, double hw_runtime_ms) {
    if (sw_baseline_ms <= 0 || hw_runtime_ms <= 0)
        throw Error("speedup: runtimes must be positive");
    return sw_baseline_ms / hw_runtime_ms;
}

inline double speedup_report(const PerfReport& hw, double sw_baseline_ms) {
    return speedup_ratio(sw_baseline_ms, hw.runtime_ms);
}

inline nlohmann::json perf_to_json(const NetworkSpec& spec, const PerfReport& report,
                                   double sw_baseline_ms) {
    nlohmann::json j;
    j["mode"] = conv_mode_name(report.mode);
    j["clock_mhz"] = report.clock_mhz;
    j["total_cycles"] = report.total_cycles;
    j["runtime_ms"] = report.runtime_ms;
    j["sw_baseline_ms"] = sw_baseline_ms;
    j["speedup"] = speedup_report(report, sw_baseline_ms);
    j["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < report.per_layer_cycles.size(); ++l) {
        j["layers"].push_back({{"index", l},
                               {"kind", layer_kind_name(spec.layers[l].kind)},
                               {"cycles", report.per_layer_cycles[l]}});
    }
    if (!report.stage_cycles.empty()) j["stage_cycles"] = report.stage_cycles;
    return j;
}

} // namespace tinycnn
