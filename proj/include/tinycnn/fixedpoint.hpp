#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tinycnn/errors.hpp"

namespace tinycnn {

// Wide integer for MAC chains. 48 bits mirror the DSP accumulate path at
// W=16; wider words get a proportionally wider budget (see acc_budget_bits).
using acc_int = __int128;

// Signed fixed-point format: 1 sign bit, I = width-1-frac_bits integer
// bits, frac_bits fraction bits. Real value of a raw word = raw * 2^-F.
struct QFormat {
    int width = 16;
    int frac_bits = 0;

    int int_bits() const { return width - 1 - frac_bits; }
    double resolution() const { return std::ldexp(1.0, -frac_bits); }
    double min_real() const { return std::ldexp(-1.0, int_bits()); }
    double max_real() const {
        return std::ldexp(1.0, int_bits()) - resolution();
    }
    bool valid() const {
        return width >= 2 && width <= 32 && frac_bits >= 0 &&
               frac_bits <= width - 1;
    }
    void validate() const {
        if (!valid())
            throw Error("invalid q-format: width=" + std::to_string(width) +
                        " frac_bits=" + std::to_string(frac_bits));
    }
    bool operator==(const QFormat&) const = default;
};

struct FixedValue {
    std::int32_t raw = 0;
    QFormat format;
};

// Running count of saturation events. Keep one per thread (engines thread
// one per layer) and merge after the fact.
struct SatCounter {
    long long count = 0;
};

inline std::int64_t raw_max(int width) { return (std::int64_t{1} << (width - 1)) - 1; }
inline std::int64_t raw_min(int width) { return -(std::int64_t{1} << (width - 1)); }

inline int acc_budget_bits(int width) { return width <= 16 ? 48 : 2 * width + 16; }

struct Accumulator {
    acc_int raw = 0;
    int frac_bits = 0;
    int budget_bits = 48;
};

inline double dequantize(const FixedValue& v) {
    return std::ldexp(static_cast<double>(v.raw), -v.format.frac_bits);
}

inline double dequantize_raw(std::int32_t raw, const QFormat& q) {
    return std::ldexp(static_cast<double>(raw), -q.frac_bits);
}

// Round half away from zero onto the format grid, saturating at the
// two's-complement limits. Saturation is silent apart from the counter.
inline FixedValue quantize(double x, QFormat q, SatCounter* sat = nullptr) {
    if (!std::isfinite(x)) throw Error("quantize: non-finite input");
    q.validate();
    const double scaled = std::ldexp(x, q.frac_bits);
    const std::int64_t lo = raw_min(q.width);
    const std::int64_t hi = raw_max(q.width);
    std::int64_t raw;
    if (scaled >= static_cast<double>(hi) + 0.5) {
        raw = hi;
        if (sat) ++sat->count;
    } else if (scaled <= static_cast<double>(lo) - 0.5) {
        raw = lo;
        if (sat) ++sat->count;
    } else {
        raw = std::llround(scaled);
        if (raw > hi) raw = hi;
        if (raw < lo) raw = lo;
    }
    return FixedValue{static_cast<std::int32_t>(raw), q};
}

// Format for a weight set: smallest integer width covering max|v|, all
// remaining bits spent on fraction. All-sub-unit sets get I = 0.
inline QFormat choose_weight_format(const std::vector<float>& values, int width) {
    if (values.empty())
        throw Error("choose_weight_format: empty value list");
    double max_abs = 0.0;
    for (float v : values) {
        if (!std::isfinite(v))
            throw Error("choose_weight_format: non-finite value");
        max_abs = std::max(max_abs, std::fabs(static_cast<double>(v)));
    }
    int int_bits = 0;
    if (max_abs >= 1.0)
        int_bits = static_cast<int>(std::floor(std::log2(max_abs))) + 1;
    if (int_bits > width - 1) int_bits = width - 1;
    return QFormat{width, width - 1 - int_bits};
}

inline Accumulator make_accumulator(int frac_bits, int width) {
    return Accumulator{0, frac_bits, acc_budget_bits(width)};
}

inline void check_acc_budget(const Accumulator& acc) {
    const acc_int limit = (acc_int{1} << (acc.budget_bits - 1)) - 1;
    if (acc.raw > limit || acc.raw < -limit - 1)
        throw OverflowError("accumulator exceeded " +
                            std::to_string(acc.budget_bits) +
                            "-bit budget; network is mis-sized for this width");
}

// acc += a*b, exact. Requires acc.frac_bits == a.F + b.F.
inline Accumulator mac(Accumulator acc, const FixedValue& a, const FixedValue& b) {
    if (acc.frac_bits != a.format.frac_bits + b.format.frac_bits)
        throw Error("mac: accumulator fraction does not match operand formats");
    acc.raw += static_cast<acc_int>(a.raw) * static_cast<acc_int>(b.raw);
    check_acc_budget(acc);
    return acc;
}

// Narrow an accumulator to out_q: shift right with round-half-away (or
// widen exactly when out_q is finer), then saturate to W bits. This is the
// inter-layer precision-adjust primitive; the emitted RTL mirrors it.
inline FixedValue requantize(const Accumulator& acc, QFormat out_q,
                             SatCounter* sat = nullptr) {
    out_q.validate();
    const int shift = acc.frac_bits - out_q.frac_bits;
    acc_int v;
    if (shift > 0) {
        const acc_int half = acc_int{1} << (shift - 1);
        if (acc.raw >= 0)
            v = (acc.raw + half) >> shift;
        else
            v = -((-acc.raw + half) >> shift);
    } else if (shift == 0) {
        v = acc.raw;
    } else {
        v = acc.raw << (-shift);
    }
    const acc_int lo = raw_min(out_q.width);
    const acc_int hi = raw_max(out_q.width);
    if (v > hi) {
        v = hi;
        if (sat) ++sat->count;
    } else if (v < lo) {
        v = lo;
        if (sat) ++sat->count;
    }
    return FixedValue{static_cast<std::int32_t>(static_cast<std::int64_t>(v)), out_q};
}

} // namespace tinycnn
