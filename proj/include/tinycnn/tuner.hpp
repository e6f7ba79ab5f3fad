#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tinycnn/datapath.hpp"
#include "tinycnn/errors.hpp"
#include "tinycnn/fixedpoint.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/reference.hpp"

namespace tinycnn {

struct TuneReport {
    QPlan plan;
    std::vector<std::vector<double>> pass_layer_nmse;  // [pass][layer]
    int passes = 0;
    bool converged = false;
    double final_nmse = 0.0;
    double agreement = 1.0;
    std::vector<long long> saturations;  // [0] input quantization, [l+1] layer l
};

// NMSE = sum((fixed-ref)^2) / max(sum(ref^2), eps). A zero guess against a
// nonzero reference scores exactly 1.
inline double layer_error(const std::vector<double>& fixed,
                          const std::vector<double>& ref) {
    if (fixed.size() != ref.size())
        throw ShapeError("layer_error: fixed and reference sizes differ");
    if (ref.empty()) throw Error("layer_error: empty value set");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        const double d = fixed[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    return num / std::max(den, 1e-12);
}

namespace detail {

// Per layer, the float reference outputs of the whole verification set,
// flattened image-major, plus their energy (the NMSE denominator).
struct LayerRefs {
    std::vector<float> values;
    double sum_sq = 0.0;
};

inline std::vector<LayerRefs> collect_refs(const NetworkSpec& spec,
                                           const VerificationSet& verifset) {
    std::vector<LayerRefs> refs(spec.layers.size());
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        for (const auto& trace : verifset.references) {
            const auto& t = trace.outputs[l];
            refs[l].values.insert(refs[l].values.end(), t.data.begin(),
                                  t.data.end());
        }
        for (float v : refs[l].values)
            refs[l].sum_sq += static_cast<double>(v) * v;
    }
    return refs;
}

// NMSE of one candidate activation format, evaluated directly on the cached
// accumulator words: each candidate costs one requantize per element.
inline double candidate_nmse(const std::vector<PreAdjust>& pres,
                             const LayerRefs& refs, QFormat out_q) {
    Accumulator acc{0, 0, 48};
    double num = 0.0;
    std::size_t i = 0;
    for (const auto& pre : pres) {
        acc.frac_bits = pre.frac_bits;
        acc.budget_bits = pre.budget_bits;
        for (const acc_int raw : pre.raws) {
            acc.raw = raw;
            const double deq =
                std::ldexp(static_cast<double>(requantize(acc, out_q).raw),
                           -out_q.frac_bits);
            const double d = deq - refs.values[i++];
            num += d * d;
        }
    }
    return num / std::max(refs.sum_sq, 1e-12);
}

inline std::vector<float> concat_layer_params(const LayerWeights& lw) {
    std::vector<float> vals = lw.weights;
    vals.insert(vals.end(), lw.bias.begin(), lw.bias.end());
    return vals;
}

} // namespace detail

// Naive baseline: F = W/2 for the input, every activation, and every weight
// format.
inline QPlan midsplit_plan(const NetworkSpec& spec, int width) {
    QPlan plan;
    plan.width = width;
    plan.input_format = QFormat{width, width / 2};
    plan.activation_formats.assign(spec.layers.size(), QFormat{width, width / 2});
    plan.weight_formats.resize(spec.layers.size());
    for (std::size_t l = 0; l < spec.layers.size(); ++l)
        if (spec.layers[l].parameterized())
            plan.weight_formats[l] = QFormat{width, width / 2};
    return plan;
}

// One full fixed-point evaluation of a plan against the verification set:
// per-layer NMSE, end-to-end NMSE, agreement, saturation counts.
inline TuneReport evaluate_plan(const NetworkSpec& spec, const WeightBundle& weights,
                                const VerificationSet& verifset, const QPlan& plan) {
    if (verifset.inputs.empty())
        throw Error("evaluate_plan: empty verification set");
    plan.validate(spec);
    const QuantizedWeights qw = quantize_weights(spec, weights, plan);
    const auto refs = detail::collect_refs(spec, verifset);

    TuneReport report;
    report.plan = plan;
    report.saturations.assign(spec.layers.size() + 1, 0);
    std::vector<SatCounter> sat(spec.layers.size() + 1);

    std::vector<double> num(spec.layers.size(), 0.0);
    std::vector<std::size_t> seen(spec.layers.size(), 0);
    std::vector<int> fixed_classes, ref_classes;
    for (std::size_t n = 0; n < verifset.inputs.size(); ++n) {
        FixedTrace trace = forward_fixed(spec, qw, plan, verifset.inputs[n], &sat);
        fixed_classes.push_back(trace.predicted_class);
        ref_classes.push_back(verifset.references[n].predicted_class);
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            const auto& out = trace.outputs[l];
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double deq = dequantize_raw(out.data[i], trace.formats[l]);
                const double d = deq - refs[l].values[seen[l] + i];
                num[l] += d * d;
            }
            seen[l] += out.size();
        }
    }
    std::vector<double> row(spec.layers.size());
    for (std::size_t l = 0; l < spec.layers.size(); ++l)
        row[l] = num[l] / std::max(refs[l].sum_sq, 1e-12);
    report.pass_layer_nmse.push_back(row);
    report.final_nmse = row.back();
    report.agreement = classification_agreement(fixed_classes, ref_classes);
    for (std::size_t i = 0; i < sat.size(); ++i)
        report.saturations[i] = sat[i].count;
    report.converged = true;
    return report;
}

// Coordinate descent over activation formats, front to back. Weight formats
// are fixed analytically up front and never searched; the input format is
// fixed from the verification inputs the same way. Layer l's output depends
// only on formats at or before l, so a pass that changes nothing is final.
inline TuneReport tune(const NetworkSpec& spec, const WeightBundle& weights,
                       const VerificationSet& verifset, int width,
                       int max_passes = 5) {
    if (verifset.inputs.empty()) throw Error("tune: empty verification set");
    if (!spec.shapes_inferred()) throw Error("tune requires inferred shapes");
    const std::size_t n_layers = spec.layers.size();
    const std::size_t n_images = verifset.inputs.size();

    QPlan plan;
    plan.width = width;
    plan.weight_formats.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l)
        if (spec.layers[l].parameterized())
            plan.weight_formats[l] = choose_weight_format(
                detail::concat_layer_params(weights.layers[l]), width);

    std::vector<float> input_values;
    for (const auto& img : verifset.inputs)
        input_values.insert(input_values.end(), img.data.begin(), img.data.end());
    plan.input_format = choose_weight_format(input_values, width);
    plan.activation_formats.assign(n_layers, QFormat{width, width / 2});

    const QuantizedWeights qw = quantize_weights(spec, weights, plan);
    const auto refs = detail::collect_refs(spec, verifset);
    std::vector<RawTensor> quantized_inputs;
    quantized_inputs.reserve(n_images);
    for (const auto& img : verifset.inputs)
        quantized_inputs.push_back(quantize_image(img, plan.input_format));

    TuneReport report;
    const double nmse_eps = 1e-9;
    for (int pass = 0; pass < max_passes; ++pass) {
        bool changed = false;
        std::vector<double> row(n_layers, 0.0);
        std::vector<RawTensor> cur = quantized_inputs;
        QFormat cur_q = plan.input_format;
        for (std::size_t l = 0; l < n_layers; ++l) {
            std::vector<PreAdjust> pres;
            pres.reserve(n_images);
            for (std::size_t n = 0; n < n_images; ++n)
                pres.push_back(layer_preadjust(spec, qw, l, cur[n], cur_q));

            int best_f = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int f = 0; f < width; ++f) {
                const double nmse =
                    detail::candidate_nmse(pres, refs[l], QFormat{width, f});
                if (nmse <= best) {  // ties resolve toward larger F
                    best = nmse;
                    best_f = f;
                }
            }
            const QFormat chosen{width, best_f};
            if (plan.activation_formats[l] != chosen) {
                plan.activation_formats[l] = chosen;
                changed = true;
            }
            row[l] = best;
            for (std::size_t n = 0; n < n_images; ++n)
                cur[n] = requantize_preadjust(pres[n], chosen);
            cur_q = chosen;
        }
        const bool nmse_settled =
            !report.pass_layer_nmse.empty() &&
            std::fabs(report.pass_layer_nmse.back().back() - row.back()) <= nmse_eps;
        report.pass_layer_nmse.push_back(row);
        ++report.passes;
        if (!changed || nmse_settled) {
            report.converged = true;
            break;
        }
    }

    TuneReport final_eval = evaluate_plan(spec, weights, verifset, plan);
    report.plan = plan;
    report.final_nmse = final_eval.final_nmse;
    report.agreement = final_eval.agreement;
    report.saturations = final_eval.saturations;
    return report;
}

} // namespace tinycnn
