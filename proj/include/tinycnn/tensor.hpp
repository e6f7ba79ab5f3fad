#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tinycnn/errors.hpp"

namespace tinycnn {

struct TensorShape {
    int height = 1;
    int width = 1;
    int channels = 1;

    std::size_t elements() const {
        return static_cast<std::size_t>(height) * width * channels;
    }
    bool operator==(const TensorShape&) const = default;
};

// Dense 3-d tensor, channel-major: flat index = c*(h*w) + y*w + x.
// Flattening a tensor is therefore a pure reshape of the backing store.
template <typename T>
struct Tensor {
    TensorShape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(TensorShape s) : shape(s), data(s.elements(), T{}) {}
    Tensor(TensorShape s, std::vector<T> d) : shape(s), data(std::move(d)) {
        if (data.size() != shape.elements())
            throw ShapeError("tensor data size does not match shape");
    }

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * shape.height + y) * shape.width + x;
    }
    T& at(int c, int y, int x) { return data[index(c, y, x)]; }
    const T& at(int c, int y, int x) const { return data[index(c, y, x)]; }

    std::size_t size() const { return data.size(); }
};

using FloatTensor = Tensor<float>;
using RawTensor = Tensor<std::int32_t>;

} // namespace tinycnn
