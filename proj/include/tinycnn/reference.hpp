#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinycnn/errors.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/tensor.hpp"
#include "tinycnn/weights.hpp"

namespace tinycnn {

// Full-precision forward pass of one image: every layer's output plus the
// argmax class of the final layer.
struct LayerTrace {
    std::vector<FloatTensor> outputs;
    int predicted_class = 0;
};

struct VerificationSet {
    std::vector<FloatTensor> inputs;
    std::vector<LayerTrace> references;
};

template <typename T>
inline int argmax_class(const std::vector<T>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;  // lowest index wins ties
    return best;
}

namespace detail {

inline FloatTensor conv2d_float(const FloatTensor& in, const LayerSpec& layer,
                                const LayerWeights& lw, const TensorShape& out_shape) {
    const int k = layer.kernel;
    const int pad = k / 2;
    const int in_ch = in.shape.channels;
    FloatTensor out(out_shape);
    for (int oc = 0; oc < out_shape.channels; ++oc) {
        for (int y = 0; y < out_shape.height; ++y) {
            for (int x = 0; x < out_shape.width; ++x) {
                double acc = 0.0;
                // Accumulation order fixed: in_ch outer, kh, kw inner.
                for (int ic = 0; ic < in_ch; ++ic) {
                    for (int kh = 0; kh < k; ++kh) {
                        const int iy = y + kh - pad;
                        if (iy < 0 || iy >= in.shape.height) continue;
                        for (int kw = 0; kw < k; ++kw) {
                            const int ix = x + kw - pad;
                            if (ix < 0 || ix >= in.shape.width) continue;
                            const std::size_t wi =
                                ((static_cast<std::size_t>(oc) * in_ch + ic) * k + kh) * k + kw;
                            acc += static_cast<double>(in.at(ic, iy, ix)) * lw.weights[wi];
                        }
                    }
                }
                if (!lw.bias.empty()) acc += lw.bias[oc];
                out.at(oc, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

inline FloatTensor maxpool_float(const FloatTensor& in, int m,
                                 const TensorShape& out_shape) {
    FloatTensor out(out_shape);
    for (int c = 0; c < out_shape.channels; ++c)
        for (int y = 0; y < out_shape.height; ++y)
            for (int x = 0; x < out_shape.width; ++x) {
                float best = in.at(c, y * m, x * m);
                for (int dy = 0; dy < m; ++dy)
                    for (int dx = 0; dx < m; ++dx)
                        best = std::max(best, in.at(c, y * m + dy, x * m + dx));
                out.at(c, y, x) = best;
            }
    return out;
}

inline FloatTensor dense_float(const FloatTensor& in, const LayerWeights& lw,
                               const TensorShape& out_shape) {
    const std::size_t n_in = in.size();
    FloatTensor out(out_shape);
    for (int o = 0; o < out_shape.channels; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_in; ++i)
            acc += static_cast<double>(in.data[i]) * lw.weights[o * n_in + i];
        if (!lw.bias.empty()) acc += lw.bias[o];
        out.data[o] = static_cast<float>(acc);
    }
    return out;
}

} // namespace detail

inline LayerTrace forward_float(const NetworkSpec& spec, const WeightBundle& weights,
                                const FloatTensor& image) {
    if (!spec.shapes_inferred())
        throw Error("forward_float requires inferred shapes");
    if (!(image.shape == spec.input_shape))
        throw ShapeError("forward_float: image shape does not match network input");

    LayerTrace trace;
    trace.outputs.reserve(spec.layers.size());
    const FloatTensor* cur = &image;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& layer = spec.layers[l];
        const TensorShape out_shape = spec.per_layer_shapes[l].out;
        FloatTensor out;
        switch (layer.kind) {
        case LayerKind::Conv2d:
            out = detail::conv2d_float(*cur, layer, weights.layers[l], out_shape);
            break;
        case LayerKind::Relu:
            out = *cur;
            for (auto& v : out.data) v = std::max(v, 0.0f);
            break;
        case LayerKind::MaxPool:
            out = detail::maxpool_float(*cur, layer.pool_size, out_shape);
            break;
        case LayerKind::Flatten:
            out = FloatTensor(out_shape, cur->data);  // channel-major reshape
            break;
        case LayerKind::Dense:
            out = detail::dense_float(*cur, weights.layers[l], out_shape);
            break;
        }
        trace.outputs.push_back(std::move(out));
        cur = &trace.outputs.back();
    }
    trace.predicted_class = argmax_class(trace.outputs.back().data);
    return trace;
}

inline VerificationSet build_verification_set(const NetworkSpec& spec,
                                              const WeightBundle& weights,
                                              const std::vector<FloatTensor>& images) {
    if (images.empty())
        throw Error("verification set must be non-empty");
    VerificationSet set;
    set.inputs = images;
    set.references.reserve(images.size());
    for (const auto& img : images)
        set.references.push_back(forward_float(spec, weights, img));
    return set;
}

// Run the float engine over every image and persist the result:
// inputs.bin, one ref_layer{l}.bin per network layer, verify_manifest.json.
inline VerificationSet make_verification_set(const NetworkSpec& spec,
                                             const WeightBundle& weights,
                                             const std::vector<FloatTensor>& images,
                                             const std::filesystem::path& out_dir) {
    VerificationSet set = build_verification_set(spec, weights, images);
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream f(out_dir / "inputs.bin", std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + (out_dir / "inputs.bin").string());
        for (const auto& img : set.inputs)
            f.write(reinterpret_cast<const char*>(img.data.data()),
                    static_cast<std::streamsize>(img.size() * 4));
        if (!f) throw IoError("failed writing inputs.bin");
    }

    nlohmann::json manifest;
    manifest["count"] = set.inputs.size();
    manifest["network"] = spec.name;
    manifest["input_shape"] = {{"height", spec.input_shape.height},
                               {"width", spec.input_shape.width},
                               {"channels", spec.input_shape.channels}};
    manifest["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::string fname = "ref_layer" + std::to_string(l) + ".bin";
        std::ofstream f(out_dir / fname, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + (out_dir / fname).string());
        for (const auto& ref : set.references)
            f.write(reinterpret_cast<const char*>(ref.outputs[l].data.data()),
                    static_cast<std::streamsize>(ref.outputs[l].size() * 4));
        if (!f) throw IoError("failed writing " + fname);
        const TensorShape s = spec.per_layer_shapes[l].out;
        manifest["layers"].push_back({{"index", l},
                                      {"file", fname},
                                      {"shape",
                                       {{"height", s.height},
                                        {"width", s.width},
                                        {"channels", s.channels}}}});
    }
    std::ofstream mf(out_dir / "verify_manifest.json", std::ios::trunc);
    if (!mf) throw IoError("cannot write verify_manifest.json");
    mf << manifest.dump(2) << "\n";
    return set;
}

inline VerificationSet load_verification_set(const std::filesystem::path& dir,
                                             const NetworkSpec& spec) {
    std::ifstream mf(dir / "verify_manifest.json");
    if (!mf) throw IoError("missing " + (dir / "verify_manifest.json").string());
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("verify_manifest.json: ") + e.what());
    }
    const std::size_t n = manifest.at("count").get<std::size_t>();
    if (n == 0) throw Error("verification set must be non-empty");

    VerificationSet set;
    auto inputs = detail::read_f32_file(dir / "inputs.bin");
    const std::size_t in_elems = spec.input_shape.elements();
    if (inputs.size() != n * in_elems)
        throw Error("inputs.bin: expected " + std::to_string(n * in_elems) +
                    " floats, found " + std::to_string(inputs.size()));
    for (std::size_t i = 0; i < n; ++i) {
        FloatTensor img(spec.input_shape);
        std::copy_n(inputs.begin() + i * in_elems, in_elems, img.data.begin());
        set.inputs.push_back(std::move(img));
    }

    set.references.resize(n);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        auto refs = detail::read_f32_file(dir / ("ref_layer" + std::to_string(l) + ".bin"));
        const TensorShape s = spec.per_layer_shapes[l].out;
        if (refs.size() != n * s.elements())
            throw Error("ref_layer" + std::to_string(l) + ".bin: expected " +
                        std::to_string(n * s.elements()) + " floats, found " +
                        std::to_string(refs.size()));
        for (std::size_t i = 0; i < n; ++i) {
            FloatTensor t(s);
            std::copy_n(refs.begin() + i * s.elements(), s.elements(), t.data.begin());
            set.references[i].outputs.push_back(std::move(t));
        }
    }
    for (auto& ref : set.references)
        ref.predicted_class = argmax_class(ref.outputs.back().data);
    return set;
}

// Proportion of positions where both class lists agree.
inline double classification_agreement(const std::vector<int>& a,
                                       const std::vector<int>& b) {
    if (a.size() != b.size())
        throw Error("classification_agreement: length mismatch (" +
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw Error("classification_agreement: empty lists");
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++same;
    return static_cast<double>(same) / static_cast<double>(a.size());
}

} // namespace tinycnn
