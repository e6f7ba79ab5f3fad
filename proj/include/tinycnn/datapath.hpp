#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinycnn/errors.hpp"
#include "tinycnn/fixedpoint.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/reference.hpp"
#include "tinycnn/tensor.hpp"
#include "tinycnn/weights.hpp"

namespace tinycnn {

// Complete per-layer format assignment: one weight format per conv/dense
// layer, one activation format per network layer (the format after that
// layer's precision-adjust unit), plus the input quantization format.
struct QPlan {
    int width = 16;
    QFormat input_format;
    std::vector<QFormat> activation_formats;                // per network layer
    std::vector<std::optional<QFormat>> weight_formats;     // per network layer

    bool complete(const NetworkSpec& spec) const {
        if (activation_formats.size() != spec.layers.size()) return false;
        if (weight_formats.size() != spec.layers.size()) return false;
        if (!input_format.valid() || input_format.width != width) return false;
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            if (!activation_formats[l].valid() ||
                activation_formats[l].width != width)
                return false;
            if (spec.layers[l].parameterized() &&
                (!weight_formats[l] || !weight_formats[l]->valid() ||
                 weight_formats[l]->width != width))
                return false;
        }
        return true;
    }
    void validate(const NetworkSpec& spec) const {
        if (!complete(spec)) throw Error("qplan is incomplete for this network");
    }
};

struct FixedTrace {
    std::vector<RawTensor> outputs;   // raw words per layer
    std::vector<QFormat> formats;     // format of each layer's output
    int predicted_class = 0;
};

// Three consecutive padded rows of one input channel, as the feedforward
// unit presents them to the convolution unit, plus the 3x3 taps applied.
struct LineWindow {
    std::array<std::vector<std::int32_t>, 3> rows;
    std::array<std::int32_t, 9> filter{};
};

// ---------------------------------------------------------------------------
// Weight quantization (single source of truth for simulator and emitter)

struct QuantizedWeights {
    std::vector<std::vector<std::int32_t>> weights;  // per layer, raw words
    std::vector<std::vector<std::int32_t>> biases;
    std::vector<QFormat> formats;                    // valid at conv/dense layers
    long long saturations = 0;
};

inline QuantizedWeights quantize_weights(const NetworkSpec& spec,
                                         const WeightBundle& bundle,
                                         const QPlan& plan) {
    QuantizedWeights qw;
    qw.weights.resize(spec.layers.size());
    qw.biases.resize(spec.layers.size());
    qw.formats.resize(spec.layers.size());
    SatCounter sat;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (!spec.layers[l].parameterized()) continue;
        const QFormat q = *plan.weight_formats[l];
        const LayerWeights& lw = bundle.layers[l];
        qw.formats[l] = q;
        qw.weights[l].reserve(lw.weights.size());
        for (float v : lw.weights)
            qw.weights[l].push_back(quantize(v, q, &sat).raw);
        qw.biases[l].reserve(lw.bias.size());
        for (float v : lw.bias)
            qw.biases[l].push_back(quantize(v, q, &sat).raw);
    }
    qw.saturations = sat.count;
    return qw;
}

// ---------------------------------------------------------------------------
// Hardware units, bit-accurate

namespace detail {

inline void add_tap(acc_int& acc, std::int32_t a, std::int32_t b, acc_int limit) {
    acc += static_cast<acc_int>(a) * static_cast<acc_int>(b);
    if (acc > limit || acc < -limit - 1)
        throw OverflowError("accumulator exceeded its bit budget; "
                            "network is mis-sized for this width");
}

inline acc_int acc_limit(int budget_bits) {
    return (acc_int{1} << (budget_bits - 1)) - 1;
}

// Bias words are stored at the weight format; shifting left by F_in puts
// them on the accumulator grid exactly.
inline acc_int bias_preload(std::int32_t bias_raw, int in_frac) {
    return static_cast<acc_int>(bias_raw) << in_frac;
}

} // namespace detail

// Pre-adjust values of one layer: exact accumulator words (conv/dense) or
// widened raws (relu/pool/flatten), before the precision-adjust unit.
struct PreAdjust {
    std::vector<acc_int> raws;
    int frac_bits = 0;
    int budget_bits = 48;
    TensorShape shape;
};

inline PreAdjust conv_accumulate(const LayerSpec& layer, const RawTensor& in,
                                 QFormat in_q,
                                 const std::vector<std::int32_t>& w_raws,
                                 const std::vector<std::int32_t>& b_raws,
                                 QFormat w_q, const TensorShape& out_shape) {
    const int k = layer.kernel;
    const int pad = k / 2;
    const int in_ch = in.shape.channels;
    PreAdjust pre;
    pre.frac_bits = in_q.frac_bits + w_q.frac_bits;
    pre.budget_bits = acc_budget_bits(std::max(in_q.width, w_q.width));
    pre.shape = out_shape;
    pre.raws.resize(out_shape.elements());
    const acc_int limit = detail::acc_limit(pre.budget_bits);

    std::size_t o = 0;
    for (int oc = 0; oc < out_shape.channels; ++oc) {
        for (int y = 0; y < out_shape.height; ++y) {
            for (int x = 0; x < out_shape.width; ++x, ++o) {
                acc_int acc = b_raws.empty()
                                  ? 0
                                  : detail::bias_preload(b_raws[oc], in_q.frac_bits);
                for (int ic = 0; ic < in_ch; ++ic) {
                    const std::int32_t* in_plane =
                        in.data.data() + static_cast<std::size_t>(ic) *
                                             in.shape.height * in.shape.width;
                    const std::int32_t* w_base =
                        w_raws.data() +
                        ((static_cast<std::size_t>(oc) * in_ch + ic) * k) * k;
                    for (int kh = 0; kh < k; ++kh) {
                        const int iy = y + kh - pad;
                        if (iy < 0 || iy >= in.shape.height) continue;
                        const std::int32_t* row = in_plane +
                                                  static_cast<std::size_t>(iy) *
                                                      in.shape.width;
                        for (int kw = 0; kw < k; ++kw) {
                            const int ix = x + kw - pad;
                            if (ix < 0 || ix >= in.shape.width) continue;
                            detail::add_tap(acc, row[ix], w_base[kh * k + kw], limit);
                        }
                    }
                }
                pre.raws[o] = acc;
            }
        }
    }
    return pre;
}

inline PreAdjust dense_accumulate(const RawTensor& in, QFormat in_q,
                                  const std::vector<std::int32_t>& w_raws,
                                  const std::vector<std::int32_t>& b_raws,
                                  QFormat w_q, const TensorShape& out_shape) {
    const std::size_t n_in = in.size();
    PreAdjust pre;
    pre.frac_bits = in_q.frac_bits + w_q.frac_bits;
    pre.budget_bits = acc_budget_bits(std::max(in_q.width, w_q.width));
    pre.shape = out_shape;
    pre.raws.resize(out_shape.elements());
    const acc_int limit = detail::acc_limit(pre.budget_bits);
    for (int o = 0; o < out_shape.channels; ++o) {
        acc_int acc =
            b_raws.empty() ? 0 : detail::bias_preload(b_raws[o], in_q.frac_bits);
        const std::int32_t* w_row = w_raws.data() + static_cast<std::size_t>(o) * n_in;
        for (std::size_t i = 0; i < n_in; ++i)
            detail::add_tap(acc, in.data[i], w_row[i], limit);
        pre.raws[o] = acc;
    }
    return pre;
}

inline RawTensor requantize_preadjust(const PreAdjust& pre, QFormat out_q,
                                      SatCounter* sat = nullptr) {
    RawTensor out(pre.shape);
    Accumulator acc{0, pre.frac_bits, pre.budget_bits};
    for (std::size_t i = 0; i < pre.raws.size(); ++i) {
        acc.raw = pre.raws[i];
        out.data[i] = requantize(acc, out_q, sat).raw;
    }
    return out;
}

inline RawTensor conv_fixed(const LayerSpec& layer, const RawTensor& in, QFormat in_q,
                            const std::vector<std::int32_t>& w_raws,
                            const std::vector<std::int32_t>& b_raws, QFormat w_q,
                            QFormat out_q, SatCounter* sat = nullptr) {
    const TensorShape out_shape{in.shape.height, in.shape.width, layer.out_channels};
    PreAdjust pre = conv_accumulate(layer, in, in_q, w_raws, b_raws, w_q, out_shape);
    return requantize_preadjust(pre, out_q, sat);
}

inline RawTensor dense_fixed(const RawTensor& in, QFormat in_q,
                             const std::vector<std::int32_t>& w_raws,
                             const std::vector<std::int32_t>& b_raws, QFormat w_q,
                             int units, QFormat out_q, SatCounter* sat = nullptr) {
    PreAdjust pre =
        dense_accumulate(in, in_q, w_raws, b_raws, w_q, TensorShape{1, 1, units});
    return requantize_preadjust(pre, out_q, sat);
}

inline RawTensor relu_fixed(RawTensor t) {
    for (auto& r : t.data)
        if (r < 0) r = 0;
    return t;
}

inline RawTensor maxpool_fixed(const RawTensor& in, int m) {
    if (in.shape.height % m != 0 || in.shape.width % m != 0)
        throw ShapeError("maxpool_fixed: pool size does not divide input dims");
    RawTensor out(TensorShape{in.shape.height / m, in.shape.width / m, in.shape.channels});
    for (int c = 0; c < out.shape.channels; ++c)
        for (int y = 0; y < out.shape.height; ++y)
            for (int x = 0; x < out.shape.width; ++x) {
                std::int32_t best = in.at(c, y * m, x * m);
                for (int dy = 0; dy < m; ++dy)
                    for (int dx = 0; dx < m; ++dx)
                        best = std::max(best, in.at(c, y * m + dy, x * m + dx));
                out.at(c, y, x) = best;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Feedforward unit feeding discipline: H windows of three padded rows per
// channel, one window per output row. K = 3 is the hardware line discipline.

inline std::vector<LineWindow> feed_windows(const RawTensor& fmap, int channel) {
    const int h = fmap.shape.height;
    const int w = fmap.shape.width;
    std::vector<LineWindow> windows(h);
    const std::vector<std::int32_t> pad_row(static_cast<std::size_t>(w), 0);
    for (int r = 0; r < h; ++r) {
        for (int d = -1; d <= 1; ++d) {
            const int y = r + d;
            auto& row = windows[r].rows[d + 1];
            if (y < 0 || y >= h) {
                row = pad_row;
            } else {
                row.resize(w);
                for (int x = 0; x < w; ++x) row[x] = fmap.at(channel, y, x);
            }
        }
    }
    return windows;
}

// Convolution assembled from the feedforward window stream. Identical raw
// output to conv_fixed; exercised as the dataflow-equivalence check.
inline RawTensor conv_fixed_via_windows(const LayerSpec& layer, const RawTensor& in,
                                        QFormat in_q,
                                        const std::vector<std::int32_t>& w_raws,
                                        const std::vector<std::int32_t>& b_raws,
                                        QFormat w_q, QFormat out_q,
                                        SatCounter* sat = nullptr) {
    if (layer.kernel != 3)
        throw Error("conv_fixed_via_windows: line discipline requires K = 3");
    const int h = in.shape.height;
    const int w = in.shape.width;
    const int in_ch = in.shape.channels;
    PreAdjust pre;
    pre.frac_bits = in_q.frac_bits + w_q.frac_bits;
    pre.budget_bits = acc_budget_bits(std::max(in_q.width, w_q.width));
    pre.shape = TensorShape{h, w, layer.out_channels};
    pre.raws.assign(pre.shape.elements(), 0);
    const acc_int limit = detail::acc_limit(pre.budget_bits);

    for (int ic = 0; ic < in_ch; ++ic) {
        const auto windows = feed_windows(in, ic);
        for (int oc = 0; oc < layer.out_channels; ++oc) {
            LineWindow win;
            const std::size_t w_base =
                (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int t = 0; t < 9; ++t)
                win.filter[t] = w_raws[w_base + t];
            for (int r = 0; r < h; ++r) {
                win.rows = windows[r].rows;
                acc_int* out_row =
                    pre.raws.data() +
                    (static_cast<std::size_t>(oc) * h + r) * w;
                for (int x = 0; x < w; ++x) {
                    acc_int acc = out_row[x];
                    for (int kh = 0; kh < 3; ++kh)
                        for (int kw = 0; kw < 3; ++kw) {
                            const int ix = x + kw - 1;
                            if (ix < 0 || ix >= w) continue;
                            detail::add_tap(acc, win.rows[kh][ix],
                                            win.filter[kh * 3 + kw], limit);
                        }
                    out_row[x] = acc;
                }
            }
        }
    }
    if (!b_raws.empty()) {
        std::size_t o = 0;
        for (int oc = 0; oc < layer.out_channels; ++oc) {
            const acc_int preload = detail::bias_preload(b_raws[oc], in_q.frac_bits);
            for (int i = 0; i < h * w; ++i, ++o) pre.raws[o] += preload;
        }
    }
    return requantize_preadjust(pre, out_q, sat);
}

// ---------------------------------------------------------------------------
// Whole-network fixed forward pass

inline PreAdjust layer_preadjust(const NetworkSpec& spec, const QuantizedWeights& qw,
                                 std::size_t l, const RawTensor& in, QFormat in_q) {
    const LayerSpec& layer = spec.layers[l];
    const TensorShape out_shape = spec.per_layer_shapes[l].out;
    switch (layer.kind) {
    case LayerKind::Conv2d:
        return conv_accumulate(layer, in, in_q, qw.weights[l], qw.biases[l],
                               qw.formats[l], out_shape);
    case LayerKind::Dense:
        return dense_accumulate(in, in_q, qw.weights[l], qw.biases[l],
                                qw.formats[l], out_shape);
    case LayerKind::Relu: {
        PreAdjust pre;
        pre.frac_bits = in_q.frac_bits;
        pre.budget_bits = acc_budget_bits(in_q.width);
        pre.shape = out_shape;
        pre.raws.reserve(in.size());
        for (std::int32_t r : in.data)
            pre.raws.push_back(r < 0 ? 0 : r);
        return pre;
    }
    case LayerKind::MaxPool: {
        RawTensor pooled = maxpool_fixed(in, layer.pool_size);
        PreAdjust pre;
        pre.frac_bits = in_q.frac_bits;
        pre.budget_bits = acc_budget_bits(in_q.width);
        pre.shape = out_shape;
        pre.raws.assign(pooled.data.begin(), pooled.data.end());
        return pre;
    }
    case LayerKind::Flatten: {
        PreAdjust pre;
        pre.frac_bits = in_q.frac_bits;
        pre.budget_bits = acc_budget_bits(in_q.width);
        pre.shape = out_shape;
        pre.raws.assign(in.data.begin(), in.data.end());
        return pre;
    }
    }
    throw Error("layer_preadjust: unknown layer kind");
}

inline RawTensor quantize_image(const FloatTensor& image, QFormat q,
                                SatCounter* sat = nullptr) {
    RawTensor out(image.shape);
    for (std::size_t i = 0; i < image.size(); ++i)
        out.data[i] = quantize(image.data[i], q, sat).raw;
    return out;
}

inline FixedTrace forward_fixed(const NetworkSpec& spec, const QuantizedWeights& qw,
                                const QPlan& plan, const FloatTensor& image,
                                std::vector<SatCounter>* sat_per_layer = nullptr) {
    if (!spec.shapes_inferred())
        throw Error("forward_fixed requires inferred shapes");
    if (!(image.shape == spec.input_shape))
        throw ShapeError("forward_fixed: image shape does not match network input");
    plan.validate(spec);
    if (sat_per_layer && sat_per_layer->size() != spec.layers.size() + 1)
        sat_per_layer->assign(spec.layers.size() + 1, SatCounter{});

    FixedTrace trace;
    trace.outputs.reserve(spec.layers.size());
    trace.formats.reserve(spec.layers.size());

    SatCounter* in_sat = sat_per_layer ? &(*sat_per_layer)[0] : nullptr;
    RawTensor cur = quantize_image(image, plan.input_format, in_sat);
    QFormat cur_q = plan.input_format;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        PreAdjust pre = layer_preadjust(spec, qw, l, cur, cur_q);
        SatCounter* sat = sat_per_layer ? &(*sat_per_layer)[l + 1] : nullptr;
        cur = requantize_preadjust(pre, plan.activation_formats[l], sat);
        cur_q = plan.activation_formats[l];
        trace.outputs.push_back(cur);
        trace.formats.push_back(cur_q);
    }
    trace.predicted_class = argmax_class(trace.outputs.back().data);
    return trace;
}

inline FixedTrace forward_fixed(const NetworkSpec& spec, const WeightBundle& weights,
                                const QPlan& plan, const FloatTensor& image,
                                std::vector<SatCounter>* sat_per_layer = nullptr) {
    const QuantizedWeights qw = quantize_weights(spec, weights, plan);
    return forward_fixed(spec, qw, plan, image, sat_per_layer);
}

// ---------------------------------------------------------------------------
// QPlan serialization

inline nlohmann::json qplan_to_json(const QPlan& plan) {
    nlohmann::json j;
    j["width"] = plan.width;
    j["input_f"] = plan.input_format.frac_bits;
    j["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < plan.activation_formats.size(); ++l) {
        nlohmann::json e;
        e["index"] = l;
        e["activation_f"] = plan.activation_formats[l].frac_bits;
        if (l < plan.weight_formats.size() && plan.weight_formats[l])
            e["weight_f"] = plan.weight_formats[l]->frac_bits;
        j["layers"].push_back(e);
    }
    return j;
}

inline QPlan qplan_from_json(const nlohmann::json& j) {
    QPlan plan;
    try {
        plan.width = j.at("width").get<int>();
        plan.input_format = QFormat{plan.width, j.at("input_f").get<int>()};
        const auto& layers = j.at("layers");
        plan.activation_formats.resize(layers.size());
        plan.weight_formats.resize(layers.size());
        for (const auto& e : layers) {
            const std::size_t idx = e.at("index").get<std::size_t>();
            if (idx >= layers.size())
                throw ParseError("qplan: layer index out of range");
            plan.activation_formats[idx] =
                QFormat{plan.width, e.at("activation_f").get<int>()};
            if (e.contains("weight_f"))
                plan.weight_formats[idx] =
                    QFormat{plan.width, e.at("weight_f").get<int>()};
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("qplan: ") + ex.what());
    }
    return plan;
}

inline void save_qplan(const std::filesystem::path& path, const QPlan& plan) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << qplan_to_json(plan).dump(2) << "\n";
}

inline QPlan load_qplan(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("missing qplan file: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("qplan: ") + e.what());
    }
    return qplan_from_json(j);
}

// Debug export mirroring the emitter's memfile raws: one fixed_layer{l}.bin
// of 16-bit little-endian raws per layer, plus the plan.
inline void save_fixed_traces(const std::filesystem::path& dir, const NetworkSpec& spec,
                              const QPlan& plan, const std::vector<FixedTrace>& traces) {
    if (plan.width > 16)
        throw Error("fixed trace export uses 16-bit words; width > 16 unsupported");
    std::filesystem::create_directories(dir);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        std::ofstream f(dir / ("fixed_layer" + std::to_string(l) + ".bin"),
                        std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write fixed trace for layer " + std::to_string(l));
        for (const auto& trace : traces)
            for (std::int32_t r : trace.outputs[l].data) {
                const std::int16_t v = static_cast<std::int16_t>(r);
                f.write(reinterpret_cast<const char*>(&v), 2);
            }
    }
    save_qplan(dir / "qplan.json", plan);
}

} // namespace tinycnn
