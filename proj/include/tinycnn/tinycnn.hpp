#pragma once

// Convenience include for the whole toolchain: model description, fixed-point
// arithmetic, float and fixed inference engines, format tuning, resource and
// cycle models, and the Verilog emitter.

#include "tinycnn/errors.hpp"
#include "tinycnn/tensor.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/weights.hpp"
#include "tinycnn/fixedpoint.hpp"
#include "tinycnn/reference.hpp"
#include "tinycnn/datapath.hpp"
#include "tinycnn/tuner.hpp"
#include "tinycnn/resource.hpp"
#include "tinycnn/perf.hpp"
#include "tinycnn/emitter.hpp"
