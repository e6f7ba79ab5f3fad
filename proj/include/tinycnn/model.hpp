#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinycnn/errors.hpp"
#include "tinycnn/tensor.hpp"

namespace tinycnn {

enum class LayerKind { Conv2d, Relu, MaxPool, Flatten, Dense };

enum class Padding { Same };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int out_channels = 0;          // conv2d
    int kernel = 3;                // conv2d, square side K
    Padding padding = Padding::Same;
    int pool_size = 0;             // maxpool, M
    int units = 0;                 // dense
    bool has_bias = true;          // conv2d, dense

    bool parameterized() const {
        return kind == LayerKind::Conv2d || kind == LayerKind::Dense;
    }
};

struct LayerShapes {
    TensorShape in;
    TensorShape out;
};

struct NetworkSpec {
    std::string name;
    TensorShape input_shape;
    std::vector<LayerSpec> layers;
    // Filled by infer_shapes; empty right after parse_manifest.
    std::vector<LayerShapes> per_layer_shapes;

    bool shapes_inferred() const {
        return per_layer_shapes.size() == layers.size() && !layers.empty();
    }
    TensorShape output_shape() const { return per_layer_shapes.back().out; }

    // Indices of conv/dense layers, in network order. Weight files and
    // memfiles are numbered by position in this list.
    std::vector<int> parameterized_layers() const {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(layers.size()); ++i)
            if (layers[i].parameterized()) idx.push_back(i);
        return idx;
    }
    std::vector<int> conv_layers() const {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(layers.size()); ++i)
            if (layers[i].kind == LayerKind::Conv2d) idx.push_back(i);
        return idx;
    }
};

namespace detail {

inline int get_count(const nlohmann::json& j, const char* key, int layer, int min_value,
                     int fallback = INT32_MIN) {
    if (!j.contains(key)) {
        if (fallback != INT32_MIN) return fallback;
        throw ParseError("layer " + std::to_string(layer) + ": missing \"" +
                             key + "\"",
                         layer);
    }
    if (!j[key].is_number_integer())
        throw ParseError("layer " + std::to_string(layer) + ": \"" + key +
                             "\" must be an integer",
                         layer);
    int v = j[key].get<int>();
    if (v < min_value)
        throw ParseError("layer " + std::to_string(layer) + ": \"" + key +
                             "\" must be >= " + std::to_string(min_value) +
                             ", got " + std::to_string(v),
                         layer);
    return v;
}

} // namespace detail

// Parse the JSON model manifest into a NetworkSpec. Shapes are not yet
// inferred on the result; call infer_shapes next.
inline NetworkSpec parse_manifest(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("manifest root must be an object");

    NetworkSpec spec;
    spec.name = doc.value("name", std::string("unnamed"));

    if (!doc.contains("input") || !doc["input"].is_object())
        throw ParseError("manifest: missing \"input\" object");
    const auto& in = doc["input"];
    spec.input_shape.height = detail::get_count(in, "height", -1, 1);
    spec.input_shape.width = detail::get_count(in, "width", -1, 1);
    spec.input_shape.channels = detail::get_count(in, "channels", -1, 1);

    if (!doc.contains("layers") || !doc["layers"].is_array())
        throw ParseError("manifest: missing \"layers\" array");
    const auto& layers = doc["layers"];
    if (layers.empty()) throw ParseError("network has no layers");

    bool seen_flatten = false;
    bool seen_dense = false;
    for (int i = 0; i < static_cast<int>(layers.size()); ++i) {
        const auto& jl = layers[i];
        if (!jl.is_object() || !jl.contains("type") || !jl["type"].is_string())
            throw ParseError("layer " + std::to_string(i) + ": missing \"type\"", i);
        const std::string type = jl["type"].get<std::string>();

        LayerSpec layer;
        if (type == "conv2d") {
            layer.kind = LayerKind::Conv2d;
            layer.out_channels = detail::get_count(jl, "out_channels", i, 1);
            layer.kernel = detail::get_count(jl, "kernel", i, 1, 3);
            if (layer.kernel % 2 == 0)
                throw ParseError("layer " + std::to_string(i) +
                                     ": kernel must be odd, got " +
                                     std::to_string(layer.kernel),
                                 i);
            layer.has_bias = jl.value("bias", true);
        } else if (type == "relu") {
            layer.kind = LayerKind::Relu;
        } else if (type == "maxpool") {
            layer.kind = LayerKind::MaxPool;
            layer.pool_size = detail::get_count(jl, "size", i, 1);
        } else if (type == "flatten") {
            layer.kind = LayerKind::Flatten;
            if (seen_flatten)
                throw ParseError("layer " + std::to_string(i) +
                                     ": network has more than one flatten layer",
                                 i);
            seen_flatten = true;
        } else if (type == "dense") {
            layer.kind = LayerKind::Dense;
            layer.units = detail::get_count(jl, "units", i, 1);
            layer.has_bias = jl.value("bias", true);
            seen_dense = true;
        } else {
            throw ParseError("layer " + std::to_string(i) +
                                 ": unknown layer kind \"" + type + "\"",
                             i);
        }

        // Flatten sits between the last spatial layer and the first dense.
        if (seen_flatten &&
            (layer.kind == LayerKind::Conv2d || layer.kind == LayerKind::MaxPool))
            throw ParseError("layer " + std::to_string(i) + ": " + type +
                                 " after flatten",
                             i);
        if (layer.kind == LayerKind::Dense && !seen_flatten)
            throw ParseError("layer " + std::to_string(i) +
                                 ": dense encountered before flatten",
                             i);
        (void)seen_dense;
        spec.layers.push_back(layer);
    }
    return spec;
}

// Output shape of a single layer applied to `in`. `layer_index` is only
// used for error messages.
inline TensorShape infer_layer_shape(const LayerSpec& layer, const TensorShape& in,
                                     int layer_index = -1) {
    const std::string at = "layer " + std::to_string(layer_index);
    switch (layer.kind) {
    case LayerKind::Conv2d:
        // Same padding preserves spatial dims.
        return TensorShape{in.height, in.width, layer.out_channels};
    case LayerKind::Relu:
        return in;
    case LayerKind::MaxPool: {
        const int m = layer.pool_size;
        if (in.height % m != 0 || in.width % m != 0)
            throw ShapeError(at + ": pool size " + std::to_string(m) +
                                 " does not divide input " +
                                 std::to_string(in.height) + "x" +
                                 std::to_string(in.width),
                             layer_index);
        return TensorShape{in.height / m, in.width / m, in.channels};
    }
    case LayerKind::Flatten:
        return TensorShape{1, 1, in.height * in.width * in.channels};
    case LayerKind::Dense:
        if (in.height != 1 || in.width != 1)
            throw ShapeError(at + ": dense encountered before flatten",
                             layer_index);
        return TensorShape{1, 1, layer.units};
    }
    throw ShapeError(at + ": unknown layer kind", layer_index);
}

// Populate per_layer_shapes. Idempotent; returns a new spec.
inline NetworkSpec infer_shapes(NetworkSpec spec) {
    spec.per_layer_shapes.clear();
    spec.per_layer_shapes.reserve(spec.layers.size());
    TensorShape cur = spec.input_shape;
    for (int i = 0; i < static_cast<int>(spec.layers.size()); ++i) {
        TensorShape out = infer_layer_shape(spec.layers[i], cur, i);
        spec.per_layer_shapes.push_back({cur, out});
        cur = out;
    }
    return spec;
}

// Parameter count of one layer: conv = out_ch*(in_ch*K^2 + 1) with bias,
// dense = out*(in + 1) with bias; activation/pool/flatten layers hold none.
inline std::int64_t param_count(const LayerSpec& layer, const TensorShape& in_shape) {
    switch (layer.kind) {
    case LayerKind::Conv2d: {
        const std::int64_t k2 = static_cast<std::int64_t>(layer.kernel) * layer.kernel;
        const std::int64_t per_filter = in_shape.channels * k2 + (layer.has_bias ? 1 : 0);
        return layer.out_channels * per_filter;
    }
    case LayerKind::Dense: {
        const std::int64_t in = in_shape.elements();
        return layer.units * (in + (layer.has_bias ? 1 : 0));
    }
    default:
        return 0;
    }
}

// Number of weight elements (excluding biases) of one layer.
inline std::int64_t weight_count(const LayerSpec& layer, const TensorShape& in_shape) {
    switch (layer.kind) {
    case LayerKind::Conv2d:
        return static_cast<std::int64_t>(layer.out_channels) * in_shape.channels *
               layer.kernel * layer.kernel;
    case LayerKind::Dense:
        return static_cast<std::int64_t>(layer.units) * in_shape.elements();
    default:
        return 0;
    }
}

inline std::int64_t bias_count(const LayerSpec& layer) {
    if (!layer.has_bias) return 0;
    if (layer.kind == LayerKind::Conv2d) return layer.out_channels;
    if (layer.kind == LayerKind::Dense) return layer.units;
    return 0;
}

inline std::int64_t total_params(const NetworkSpec& spec) {
    if (!spec.shapes_inferred())
        throw Error("total_params requires inferred shapes");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        total += param_count(spec.layers[i], spec.per_layer_shapes[i].in);
    return total;
}

} // namespace tinycnn
