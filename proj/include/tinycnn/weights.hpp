#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tinycnn/errors.hpp"
#include "tinycnn/model.hpp"

namespace tinycnn {

// Float weights for one parameterized layer. Conv weights are stored
// [out_ch][in_ch][kh][kw] (out_ch slowest), dense weights [out][in].
struct LayerWeights {
    std::vector<float> weights;
    std::vector<float> bias;
};

struct WeightBundle {
    // One entry per network layer; non-parameterized layers hold empty arrays.
    std::vector<LayerWeights> layers;
};

namespace detail {

inline std::vector<float> read_f32_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("missing file: " + path.string());
    f.seekg(0, std::ios::end);
    const std::streamoff bytes = f.tellg();
    f.seekg(0, std::ios::beg);
    if (bytes % 4 != 0)
        throw IoError(path.string() + ": size " + std::to_string(bytes) +
                      " is not a multiple of 4 bytes");
    std::vector<float> out(static_cast<std::size_t>(bytes) / 4);
    if (!out.empty() &&
        !f.read(reinterpret_cast<char*>(out.data()), bytes))
        throw IoError("failed to read " + path.string());
    return out;
}

inline void write_f32_file(const std::filesystem::path& path,
                           const std::vector<float>& values) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * 4));
    if (!f) throw IoError("failed to write " + path.string());
}

} // namespace detail

// Load a weight bundle directory: layer{i}_w.bin / layer{i}_b.bin per
// parameterized layer, i counting parameterized layers only.
inline WeightBundle load_weights(const std::filesystem::path& dir,
                                 const NetworkSpec& spec) {
    if (!spec.shapes_inferred())
        throw Error("load_weights requires inferred shapes");

    WeightBundle bundle;
    bundle.layers.resize(spec.layers.size());

    const auto param_layers = spec.parameterized_layers();
    for (std::size_t p = 0; p < param_layers.size(); ++p) {
        const int li = param_layers[p];
        const LayerSpec& layer = spec.layers[li];
        const TensorShape in_shape = spec.per_layer_shapes[li].in;
        const std::int64_t n_w = weight_count(layer, in_shape);
        const std::int64_t n_b = bias_count(layer);
        const std::string expect = "expected " + std::to_string(n_w) +
                                   " weights + " + std::to_string(n_b) +
                                   " biases";

        const auto w_path = dir / ("layer" + std::to_string(p) + "_w.bin");
        auto w = detail::read_f32_file(w_path);
        if (static_cast<std::int64_t>(w.size()) != n_w)
            throw Error("layer " + std::to_string(li) + " (" +
                        layer_kind_name(layer.kind) + "): " + expect + "; " +
                        w_path.filename().string() + " holds " +
                        std::to_string(w.size()) + " values");

        std::vector<float> b;
        if (n_b > 0) {
            const auto b_path = dir / ("layer" + std::to_string(p) + "_b.bin");
            b = detail::read_f32_file(b_path);
            if (static_cast<std::int64_t>(b.size()) != n_b)
                throw Error("layer " + std::to_string(li) + " (" +
                            layer_kind_name(layer.kind) + "): " + expect + "; " +
                            b_path.filename().string() + " holds " +
                            std::to_string(b.size()) + " values");
        }

        for (std::size_t k = 0; k < w.size(); ++k)
            if (!std::isfinite(w[k]))
                throw Error("layer " + std::to_string(li) +
                            ": non-finite weight at flat index " + std::to_string(k));
        for (std::size_t k = 0; k < b.size(); ++k)
            if (!std::isfinite(b[k]))
                throw Error("layer " + std::to_string(li) +
                            ": non-finite bias at flat index " + std::to_string(k));

        bundle.layers[li].weights = std::move(w);
        bundle.layers[li].bias = std::move(b);
    }
    return bundle;
}

// Write a bundle in the layout load_weights expects. Used by the weight
// seeding tool and by tests.
inline void save_weights(const std::filesystem::path& dir, const NetworkSpec& spec,
                         const WeightBundle& bundle) {
    std::filesystem::create_directories(dir);
    const auto param_layers = spec.parameterized_layers();
    for (std::size_t p = 0; p < param_layers.size(); ++p) {
        const int li = param_layers[p];
        detail::write_f32_file(dir / ("layer" + std::to_string(p) + "_w.bin"),
                               bundle.layers[li].weights);
        if (spec.layers[li].has_bias)
            detail::write_f32_file(dir / ("layer" + std::to_string(p) + "_b.bin"),
                                   bundle.layers[li].bias);
    }
}

} // namespace tinycnn
