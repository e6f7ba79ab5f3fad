#pragma once

// Shared fixtures: the shipped reference manifest, seeded random network
// generation, and random weight/image fills used across the suites.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tinycnn/model.hpp"
#include "tinycnn/tensor.hpp"
#include "tinycnn/weights.hpp"

namespace testutil {

// Mirrors models/cifar10_tiny/manifest.json: four conv/relu/pool blocks on a
// 32x32 grey image, then flatten and two dense stages.
inline std::string cifar_tiny_manifest() {
    return R"({
  "name": "cifar10_tiny",
  "input": {"height": 32, "width": 32, "channels": 1},
  "layers": [
    {"type": "conv2d", "out_channels": 32, "kernel": 3, "bias": true},
    {"type": "relu"},
    {"type": "maxpool", "size": 2},
    {"type": "conv2d", "out_channels": 64, "kernel": 3, "bias": true},
    {"type": "relu"},
    {"type": "maxpool", "size": 2},
    {"type": "conv2d", "out_channels": 128, "kernel": 3, "bias": true},
    {"type": "relu"},
    {"type": "maxpool", "size": 2},
    {"type": "conv2d", "out_channels": 128, "kernel": 3, "bias": true},
    {"type": "relu"},
    {"type": "maxpool", "size": 2},
    {"type": "flatten"},
    {"type": "dense", "units": 100, "bias": true},
    {"type": "relu"},
    {"type": "dense", "units": 10, "bias": true},
    {"type": "relu"}
  ]
})";
}

inline tinycnn::NetworkSpec cifar_tiny_spec() {
    return tinycnn::infer_shapes(tinycnn::parse_manifest(cifar_tiny_manifest()));
}

// Small random net: 1-2 conv/relu/pool blocks, flatten, two dense stages.
// Input dims stay <= 16 and pooling always divides evenly.
inline std::string random_small_manifest(std::mt19937& rng) {
    const int sizes[] = {4, 8, 12, 16};
    const int size = sizes[rng() % 4];
    const int in_ch = 1 + static_cast<int>(rng() % 3);
    const int blocks = size >= 8 ? 1 + static_cast<int>(rng() % 2) : 1;
    std::ostringstream os;
    os << "{\"name\":\"rand\",\"input\":{\"height\":" << size
       << ",\"width\":" << size << ",\"channels\":" << in_ch
       << "},\"layers\":[";
    for (int b = 0; b < blocks; ++b) {
        const int oc = 2 + static_cast<int>(rng() % 5);
        os << "{\"type\":\"conv2d\",\"out_channels\":" << oc
           << ",\"kernel\":3,\"bias\":true},"
           << "{\"type\":\"relu\"},"
           << "{\"type\":\"maxpool\",\"size\":2},";
    }
    const int hidden = 6 + static_cast<int>(rng() % 15);
    const int classes = 3 + static_cast<int>(rng() % 8);
    os << "{\"type\":\"flatten\"},"
       << "{\"type\":\"dense\",\"units\":" << hidden << ",\"bias\":true},"
       << "{\"type\":\"relu\"},"
       << "{\"type\":\"dense\",\"units\":" << classes << ",\"bias\":true}]}";
    return os.str();
}

inline tinycnn::NetworkSpec random_small_spec(std::mt19937& rng) {
    return tinycnn::infer_shapes(tinycnn::parse_manifest(random_small_manifest(rng)));
}

inline tinycnn::WeightBundle random_bundle(const tinycnn::NetworkSpec& spec,
                                           std::mt19937& rng, float lo = -0.5f,
                                           float hi = 0.5f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    tinycnn::WeightBundle bundle;
    bundle.layers.resize(spec.layers.size());
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (!spec.layers[l].parameterized()) continue;
        auto& lw = bundle.layers[l];
        lw.weights.resize(
            tinycnn::weight_count(spec.layers[l], spec.per_layer_shapes[l].in));
        lw.bias.resize(tinycnn::bias_count(spec.layers[l]));
        for (auto& v : lw.weights) v = dist(rng);
        for (auto& v : lw.bias) v = dist(rng);
    }
    return bundle;
}

inline std::vector<tinycnn::FloatTensor> random_images(const tinycnn::NetworkSpec& spec,
                                                       int count, std::mt19937& rng) {
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    std::vector<tinycnn::FloatTensor> images;
    images.reserve(count);
    for (int i = 0; i < count; ++i) {
        tinycnn::FloatTensor img(spec.input_shape);
        for (auto& v : img.data) v = dist(rng);
        images.push_back(std::move(img));
    }
    return images;
}

} // namespace testutil
