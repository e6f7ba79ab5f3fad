// Release gate: one self-contained check per shipped guarantee, each printed
// as a single PASS/FAIL line with its runtime. Exits non-zero if any fails.
//
// Checks run against the shipped example model and freshly generated random
// networks; the command-line binary is exercised through its real interface.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tinycnn/datapath.hpp"
#include "tinycnn/emitter.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/perf.hpp"
#include "tinycnn/reference.hpp"
#include "tinycnn/resource.hpp"
#include "tinycnn/tuner.hpp"
#include "tinycnn/weights.hpp"

#include "helpers.hpp"

#ifndef TINYCNN_CLI_PATH
#error "TINYCNN_CLI_PATH must point at the built binary"
#endif
#ifndef TINYCNN_SOURCE_DIR
#error "TINYCNN_SOURCE_DIR must point at the repository root"
#endif

namespace fs = std::filesystem;
using namespace tinycnn;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define EXPECT(cond, msg)                                                      \
    do {                                                                       \
        if (!(cond)) throw CheckFailure(msg);                                  \
    } while (0)

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path cap = fs::temp_directory_path() /
                         ("tinycnn_acc_cap" + std::to_string(counter++));
    const std::string cmd = std::string(TINYCNN_CLI_PATH) + " " + args + " >" +
                            cap.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(cap);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    fs::remove(cap);
    return r;
}

NetworkSpec shipped_spec() {
    const fs::path path =
        fs::path(TINYCNN_SOURCE_DIR) / "models" / "cifar10_tiny" / "manifest.json";
    std::ifstream f(path);
    if (!f) throw CheckFailure("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return infer_shapes(parse_manifest(text));
}

// -------------------------------------------------------------------------
// 1. parameter table and shape progression of the shipped example model

void criterion1() {
    NetworkSpec spec = shipped_spec();

    const long long expect_params[] = {320, 18496, 73856, 147584, 51300, 1010};
    const auto param_layers = spec.parameterized_layers();
    EXPECT(param_layers.size() == 6,
           fmt("expected 6 parameterized layers, got %zu", param_layers.size()));
    for (std::size_t i = 0; i < param_layers.size(); ++i) {
        const int l = param_layers[i];
        const long long got =
            param_count(spec.layers[l], spec.per_layer_shapes[l].in);
        EXPECT(got == expect_params[i],
               fmt("layer %d: %lld params, expected %lld", l, got,
                   expect_params[i]));
    }
    const long long total = total_params(spec);
    EXPECT(total == 292566, fmt("total %lld != 292566", total));

    const TensorShape expect_shapes[] = {
        {32, 32, 32}, {32, 32, 32}, {16, 16, 32},   // conv relu pool
        {16, 16, 64}, {16, 16, 64}, {8, 8, 64},
        {8, 8, 128},  {8, 8, 128},  {4, 4, 128},
        {4, 4, 128},  {4, 4, 128},  {2, 2, 128},
        {1, 1, 512},                                 // flatten
        {1, 1, 100},  {1, 1, 100},                   // dense relu
        {1, 1, 10},   {1, 1, 10},
    };
    EXPECT(spec.layers.size() == 17,
           fmt("expected 17 layers, got %zu", spec.layers.size()));
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const TensorShape got = spec.per_layer_shapes[l].out;
        const TensorShape want = expect_shapes[l];
        EXPECT(got == want,
               fmt("layer %zu output %dx%dx%d, expected %dx%dx%d", l,
                   got.height, got.width, got.channels, want.height,
                   want.width, want.channels));
    }
}

// -------------------------------------------------------------------------
// 2. resource arithmetic through the real binary

void criterion2(const fs::path& work) {
    const fs::path model = work / "c2_model";
    fs::create_directories(model);
    fs::copy_file(fs::path(TINYCNN_SOURCE_DIR) / "models" / "cifar10_tiny" /
                      "manifest.json",
                  model / "manifest.json",
                  fs::copy_options::overwrite_existing);
    const fs::path device =
        fs::path(TINYCNN_SOURCE_DIR) / "devices" / "xc7z020.json";

    auto seeded = run_cli("--model " + model.string() + " seed-weights --seed 1");
    EXPECT(seeded.exit_code == 0, "seed-weights failed: " + seeded.out);

    auto w16 = run_cli("--model " + model.string() + " --device " +
                       device.string() + " --width 16 check --out " +
                       (work / "c2_out16").string());
    EXPECT(w16.exit_code == 0, fmt("width-16 check exited %d", w16.exit_code));
    EXPECT(w16.out.find("4,681,056") != std::string::npos,
           "width-16 output lacks the 4,681,056 weight-bit line");

    auto w32 = run_cli("--model " + model.string() + " --device " +
                       device.string() + " --width 32 check --out " +
                       (work / "c2_out32").string());
    EXPECT(w32.exit_code == 1, fmt("width-32 check exited %d, expected 1",
                                   w32.exit_code));
    EXPECT(w32.out.find("BRAM") != std::string::npos,
           "width-32 output does not name BRAM as the binding resource");
}

// -------------------------------------------------------------------------
// 3. speedup arithmetic and cycle-model ordering properties

void criterion3() {
    char buf[32];
    snprintf(buf, sizeof buf, "%.2f", speedup_ratio(42.54, 2.70));
    EXPECT(std::string(buf) == "15.76",
           fmt("speedup(42.54, 2.70) printed %s, expected 15.76", buf));
    snprintf(buf, sizeof buf, "%.2f", speedup_ratio(42.54, 8.12));
    EXPECT(std::string(buf) == "5.24",
           fmt("speedup(42.54, 8.12) printed %s, expected 5.24", buf));

    NetworkSpec spec = shipped_spec();
    const int n_conv = static_cast<int>(spec.conv_layers().size());

    auto cycles = [&](ConvMode mode, int d, int d_dense) {
        HardwareConfig cfg;
        cfg.mode = mode;
        cfg.dsp_per_conv = {d};
        cfg.dsp_dense = d_dense;
        return total_cycles(spec, cfg).total_cycles;
    };

    std::mt19937 rng(2026);
    std::uniform_int_distribution<int> d_dist(1, 512);
    std::uniform_int_distribution<int> dense_dist(1, 100);
    int configs = 0;
    while (configs < 220) {
        int d1 = d_dist(rng), d2 = d_dist(rng);
        if (d1 > d2) std::swap(d1, d2);
        const int dd = dense_dist(rng);

        const long long sh1 = cycles(ConvMode::Shared, d1, dd);
        const long long sh2 = cycles(ConvMode::Shared, d2, dd);
        const long long ex1 = cycles(ConvMode::Exclusive, d1, dd);
        const long long ex2 = cycles(ConvMode::Exclusive, d2, dd);
        EXPECT(ex1 <= sh1 && ex2 <= sh2,
               fmt("exclusive beats shared violated at D=%d/%d", d1, d2));
        EXPECT(sh2 <= sh1, fmt("shared cycles rose from D=%d to D=%d", d1, d2));
        EXPECT(ex2 <= ex1,
               fmt("exclusive cycles rose from D=%d to D=%d", d1, d2));
        ++configs;
    }
    EXPECT(n_conv == 4, "shipped model should hold 4 conv layers");
}

// -------------------------------------------------------------------------
// 4. fixed-vs-float agreement and tuned-beats-midsplit on random networks

void criterion4() {
    std::mt19937 rng(808);
    const double margin_floor = std::ldexp(1.0, -6);

    for (int net = 0; net < 20; ++net) {
        NetworkSpec spec = testutil::random_small_spec(rng);
        WeightBundle weights = testutil::random_bundle(spec, rng);
        auto images = testutil::random_images(spec, 64, rng);
        VerificationSet set = build_verification_set(spec, weights, images);

        TuneReport tuned = tune(spec, weights, set, 16);
        TuneReport naive =
            evaluate_plan(spec, weights, set, midsplit_plan(spec, 16));
        EXPECT(tuned.final_nmse <= naive.final_nmse,
               fmt("net %d: tuned nmse %.3e above mid-split %.3e", net,
                   tuned.final_nmse, naive.final_nmse));

        const QuantizedWeights qw = quantize_weights(spec, weights, tuned.plan);
        for (std::size_t i = 0; i < set.inputs.size(); ++i) {
            const auto& out = set.references[i].outputs.back().data;
            float top1 = -1e30f, top2 = -1e30f;
            for (float v : out) {
                if (v > top1) {
                    top2 = top1;
                    top1 = v;
                } else if (v > top2) {
                    top2 = v;
                }
            }
            if (static_cast<double>(top1) - top2 <= margin_floor) continue;
            FixedTrace fx = forward_fixed(spec, qw, tuned.plan, set.inputs[i]);
            EXPECT(fx.predicted_class == set.references[i].predicted_class,
                   fmt("net %d input %zu: fixed class %d != float %d "
                       "(margin %.4f)",
                       net, i, fx.predicted_class,
                       set.references[i].predicted_class,
                       static_cast<double>(top1) - top2));
        }
    }
}

// -------------------------------------------------------------------------
// 5. numeric core against freshly written brute-force integer oracles

using wide = acc_int;

std::int32_t oracle_requant(wide acc, int shift, int width) {
    wide v;
    if (shift > 0) {
        const bool neg = acc < 0;
        wide mag = neg ? -acc : acc;
        mag += wide(1) << (shift - 1);
        mag >>= shift;
        v = neg ? -mag : mag;
    } else if (shift == 0) {
        v = acc;
    } else {
        v = acc << (-shift);
    }
    const wide hi = (wide(1) << (width - 1)) - 1;
    const wide lo = -hi - 1;
    if (v > hi) v = hi;
    if (v < lo) v = lo;
    return static_cast<std::int32_t>(v);
}

void criterion5() {
    std::mt19937 rng(515);
    auto rand_raw = [&](int width) {
        std::uniform_int_distribution<std::int64_t> d(raw_min(width),
                                                      raw_max(width));
        return static_cast<std::int32_t>(d(rng));
    };
    auto rand_frac = [&] {
        return std::uniform_int_distribution<int>(2, 14)(rng);
    };
    const int width = 16;

    // convolution: same-padding 3x3 cross-correlation with preloaded bias
    for (int inst = 0; inst < 1000; ++inst) {
        const int h = 2 + static_cast<int>(rng() % 5);
        const int w = 2 + static_cast<int>(rng() % 5);
        const int ic = 1 + static_cast<int>(rng() % 3);
        const int oc = 1 + static_cast<int>(rng() % 4);
        LayerSpec layer;
        layer.kind = LayerKind::Conv2d;
        layer.out_channels = oc;
        layer.kernel = 3;
        layer.has_bias = (rng() % 2) == 0;

        RawTensor in(TensorShape{h, w, ic});
        for (auto& v : in.data) v = rand_raw(width);
        std::vector<std::int32_t> wr(static_cast<std::size_t>(oc) * ic * 9);
        for (auto& v : wr) v = rand_raw(width);
        std::vector<std::int32_t> br;
        if (layer.has_bias) {
            br.resize(oc);
            for (auto& v : br) v = rand_raw(width);
        }
        const QFormat in_q{width, rand_frac()};
        const QFormat w_q{width, rand_frac()};
        const QFormat out_q{width, rand_frac()};
        const int shift = in_q.frac_bits + w_q.frac_bits - out_q.frac_bits;

        RawTensor got = conv_fixed(layer, in, in_q, wr, br, w_q, out_q);

        for (int o = 0; o < oc; ++o)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    wide acc = 0;
                    if (layer.has_bias)
                        acc = wide(br[o]) << in_q.frac_bits;
                    for (int c = 0; c < ic; ++c)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const int sy = y + ky - 1;
                                const int sx = x + kx - 1;
                                if (sy < 0 || sy >= h || sx < 0 || sx >= w)
                                    continue;
                                acc += wide(in.at(c, sy, sx)) *
                                       wr[((static_cast<std::size_t>(o) * ic +
                                            c) * 3 + ky) * 3 + kx];
                            }
                    const std::int32_t want =
                        oracle_requant(acc, shift, width);
                    EXPECT(got.at(o, y, x) == want,
                           fmt("conv oracle mismatch inst %d at (%d,%d,%d): "
                               "%d != %d",
                               inst, o, y, x, got.at(o, y, x), want));
                }
    }

    // dense: flat dot products with the same bias/requant discipline
    for (int inst = 0; inst < 1000; ++inst) {
        const int n_in = 1 + static_cast<int>(rng() % 24);
        const int units = 1 + static_cast<int>(rng() % 8);
        const bool bias = (rng() % 2) == 0;

        RawTensor in(TensorShape{1, 1, n_in});
        for (auto& v : in.data) v = rand_raw(width);
        std::vector<std::int32_t> wr(static_cast<std::size_t>(units) * n_in);
        for (auto& v : wr) v = rand_raw(width);
        std::vector<std::int32_t> br;
        if (bias) {
            br.resize(units);
            for (auto& v : br) v = rand_raw(width);
        }
        const QFormat in_q{width, rand_frac()};
        const QFormat w_q{width, rand_frac()};
        const QFormat out_q{width, rand_frac()};
        const int shift = in_q.frac_bits + w_q.frac_bits - out_q.frac_bits;

        RawTensor got =
            dense_fixed(in, in_q, wr, br, w_q, units, out_q);

        for (int u = 0; u < units; ++u) {
            wide acc = 0;
            if (bias) acc = wide(br[u]) << in_q.frac_bits;
            for (int i = 0; i < n_in; ++i)
                acc += wide(in.data[i]) *
                       wr[static_cast<std::size_t>(u) * n_in + i];
            const std::int32_t want = oracle_requant(acc, shift, width);
            EXPECT(got.data[u] == want,
                   fmt("dense oracle mismatch inst %d unit %d: %d != %d",
                       inst, u, got.data[u], want));
        }
    }

    // maxpool: block maxima
    for (int inst = 0; inst < 1000; ++inst) {
        const int m = 2 + static_cast<int>(rng() % 2);
        const int bh = 1 + static_cast<int>(rng() % 3);
        const int bw = 1 + static_cast<int>(rng() % 3);
        const int ch = 1 + static_cast<int>(rng() % 4);
        RawTensor in(TensorShape{bh * m, bw * m, ch});
        for (auto& v : in.data) v = rand_raw(width);

        RawTensor got = maxpool_fixed(in, m);
        for (int c = 0; c < ch; ++c)
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x) {
                    std::int32_t want = INT32_MIN;
                    for (int dy = 0; dy < m; ++dy)
                        for (int dx = 0; dx < m; ++dx)
                            want = std::max(want,
                                            in.at(c, y * m + dy, x * m + dx));
                    EXPECT(got.at(c, y, x) == want,
                           fmt("maxpool oracle mismatch inst %d", inst));
                }
    }

    // window-stream convolution must equal the direct form raw-for-raw
    for (int inst = 0; inst < 300; ++inst) {
        const int h = 2 + static_cast<int>(rng() % 5);
        const int w = 2 + static_cast<int>(rng() % 5);
        const int ic = 1 + static_cast<int>(rng() % 3);
        const int oc = 1 + static_cast<int>(rng() % 4);
        LayerSpec layer;
        layer.kind = LayerKind::Conv2d;
        layer.out_channels = oc;
        layer.kernel = 3;
        layer.has_bias = true;

        RawTensor in(TensorShape{h, w, ic});
        for (auto& v : in.data) v = rand_raw(width);
        std::vector<std::int32_t> wr(static_cast<std::size_t>(oc) * ic * 9);
        for (auto& v : wr) v = rand_raw(width);
        std::vector<std::int32_t> br(oc);
        for (auto& v : br) v = rand_raw(width);
        const QFormat in_q{width, rand_frac()};
        const QFormat w_q{width, rand_frac()};
        const QFormat out_q{width, rand_frac()};

        RawTensor direct = conv_fixed(layer, in, in_q, wr, br, w_q, out_q);
        RawTensor fed =
            conv_fixed_via_windows(layer, in, in_q, wr, br, w_q, out_q);
        EXPECT(direct.data == fed.data,
               fmt("window-fed conv diverged from direct on inst %d", inst));
    }

    // quantize round trip stays within half a grid step
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long long checked = 0;
    while (checked < 100000) {
        const int w = 4 + static_cast<int>(rng() % 29);
        const int f = static_cast<int>(rng() % w);
        const QFormat q{w, f};
        const double x =
            q.min_real() + unit(rng) * (q.max_real() - q.min_real());
        const double back = dequantize(quantize(x, q));
        const double bound = std::ldexp(1.0, -(f + 1));
        EXPECT(std::fabs(back - x) <= bound,
               fmt("round trip error %.3e above 2^-(F+1)=%.3e at W=%d F=%d",
                   std::fabs(back - x), bound, w, f));
        ++checked;
    }
}

// -------------------------------------------------------------------------
// 6. tuner determinism, per-pass improvement, and the saturating relu case

void criterion6() {
    std::mt19937 rng(606);
    for (int net = 0; net < 6; ++net) {
        NetworkSpec spec = testutil::random_small_spec(rng);
        WeightBundle weights = testutil::random_bundle(spec, rng);
        auto images = testutil::random_images(spec, 24, rng);
        VerificationSet set = build_verification_set(spec, weights, images);

        TuneReport a = tune(spec, weights, set, 16);
        TuneReport b = tune(spec, weights, set, 16);
        EXPECT(qplan_to_json(a.plan) == qplan_to_json(b.plan),
               fmt("net %d: repeated tuning produced different plans", net));

        for (std::size_t p = 1; p < a.pass_layer_nmse.size(); ++p) {
            const double prev = a.pass_layer_nmse[p - 1].back();
            const double cur = a.pass_layer_nmse[p].back();
            EXPECT(cur <= prev + 1e-12,
                   fmt("net %d: final-layer nmse rose from %.3e to %.3e on "
                       "pass %zu",
                       net, prev, cur, p));
        }
    }

    // a lone relu on inputs in [0,1) leaves every bit to the fraction
    NetworkSpec relu_spec = infer_shapes(parse_manifest(R"({
  "name": "relu_only",
  "input": {"height": 4, "width": 4, "channels": 1},
  "layers": [{"type": "relu"}]
})"));
    WeightBundle empty;
    empty.layers.resize(1);
    auto images = testutil::random_images(relu_spec, 32, rng);
    VerificationSet set = build_verification_set(relu_spec, empty, images);
    TuneReport rep = tune(relu_spec, empty, set, 16);
    EXPECT(rep.plan.activation_formats[0].frac_bits == 15,
           fmt("relu-only activation tuned to F=%d, expected 15",
               rep.plan.activation_formats[0].frac_bits));
    EXPECT(rep.plan.input_format.frac_bits == 15,
           fmt("relu-only input format F=%d, expected 15",
               rep.plan.input_format.frac_bits));
}

// -------------------------------------------------------------------------
// 7. emitter: memfile round trip, line counts, determinism, structure, lint

int count_substr(const std::string& text, const std::string& needle) {
    int n = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

void criterion7() {
    std::mt19937 rng(707);
    for (int width : {8, 12, 16, 24, 32}) {
        std::uniform_int_distribution<std::int64_t> d(raw_min(width),
                                                      raw_max(width));
        std::vector<std::int32_t> raws(512);
        for (auto& v : raws) v = static_cast<std::int32_t>(d(rng));
        EXPECT(parse_memfile(emit_memfile(raws, width), width) == raws,
               fmt("memfile round trip failed at W=%d", width));
    }

    NetworkSpec spec = shipped_spec();
    WeightBundle weights = testutil::random_bundle(spec, rng);
    DeviceSpec device =
        load_device(fs::path(TINYCNN_SOURCE_DIR) / "devices" / "xc7z020.json");

    EmitPlan plan;
    plan.spec = spec;
    plan.qplan = midsplit_plan(spec, 16);
    plan.weights = quantize_weights(spec, weights, plan.qplan);
    plan.device = device;

    plan.config.mode = ConvMode::Exclusive;
    plan.config.dsp_per_conv = {16, 16, 16, 16};
    EmitResult excl = render_emit(plan);
    lint_verilog(excl.files);

    plan.config.mode = ConvMode::Shared;
    plan.config.dsp_per_conv = {16};
    EmitResult shared = render_emit(plan);
    lint_verilog(shared.files);
    EmitResult shared2 = render_emit(plan);

    long long mem_lines = 0;
    for (const auto& f : excl.files)
        if (f.path.rfind("weights/", 0) == 0)
            mem_lines += count_substr(f.content, "\n");
    EXPECT(mem_lines == 292566,
           fmt("memfile lines %lld != 292566", mem_lines));

    EXPECT(shared.files.size() == shared2.files.size(),
           "re-emission changed the file count");
    for (std::size_t i = 0; i < shared.files.size(); ++i) {
        EXPECT(shared.files[i].path == shared2.files[i].path &&
                   shared.files[i].content == shared2.files[i].content,
               "re-emission is not byte-identical: " + shared.files[i].path);
    }

    std::string excl_top, shared_top, shared_all;
    for (const auto& f : excl.files)
        if (f.path == "top.v") excl_top = f.content;
    for (const auto& f : shared.files) {
        if (f.path == "top.v") shared_top = f.content;
        shared_all += f.content;
    }
    EXPECT(count_substr(excl_top, "conv_unit #(") == 4,
           "exclusive top should instantiate the conv unit 4 times");
    EXPECT(count_substr(shared_top, "conv_unit #(") == 1,
           "shared top should instantiate the conv unit once");
    EXPECT(count_substr(shared_top, "arbiter #(") == 1 &&
               shared_top.find(".N_CLIENTS(4)") != std::string::npos,
           "shared top should carry a 4-client arbiter");
    EXPECT(count_substr(excl_top, "arbiter") == 0,
           "exclusive top should not reference an arbiter");
}

} // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "tinycnn_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    struct Criterion {
        const char* label;
        std::function<void()> body;
        double budget_s;
    };
    const Criterion criteria[] = {
        {"1 parameter table and shape progression", criterion1, 1.0},
        {"2 resource fit via the command line", [&] { criterion2(work); }, 1.0},
        {"3 speedup arithmetic and cycle ordering", criterion3, 30.0},
        {"4 fixed-vs-float agreement after tuning", criterion4, 120.0},
        {"5 numeric kernels vs brute-force oracles", criterion5, 60.0},
        {"6 tuner determinism and convergence", criterion6, 60.0},
        {"7 emitted design structure and memfiles", criterion7, 30.0},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (error.empty() && secs > c.budget_s)
            error = fmt("exceeded the %.0f s budget (took %.2f s)", c.budget_s,
                        secs);
        if (error.empty()) {
            std::printf("PASS  %s (%.2f s)\n", c.label, secs);
        } else {
            std::printf("FAIL  %s (%.2f s): %s\n", c.label, secs,
                        error.c_str());
            ++failures;
        }
    }
    if (failures) std::printf("%d criteria failing\n", failures);
    return failures == 0 ? 0 : 1;
}
