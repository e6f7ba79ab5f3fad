#pragma once

#include <stdexcept>
#include <string>

namespace tinycnn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed manifest or qplan document. layer_index is -1 when the error
// is not tied to a specific layer.
struct ParseError : Error {
    explicit ParseError(const std::string& msg, int layer = -1)
        : Error(msg), layer_index(layer) {}
    int layer_index;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& msg, int layer = -1)
        : Error(msg), layer_index(layer) {}
    int layer_index;
};

struct IoError : Error {
    using Error::Error;
};

// Accumulator exceeded its bit budget: the network is mis-sized for the
// configured word width.
struct OverflowError : Error {
    using Error::Error;
};

} // namespace tinycnn
