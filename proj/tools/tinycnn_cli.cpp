// Pipeline driver: model checking, verification data, format tuning,
// bit-exact simulation, cycle estimation, and Verilog emission.
//
// Exit codes: 0 success, 1 domain failure (design does not fit, emission
// refused), 2 usage, parse, or I/O error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tinycnn/datapath.hpp"
#include "tinycnn/emitter.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/perf.hpp"
#include "tinycnn/reference.hpp"
#include "tinycnn/resource.hpp"
#include "tinycnn/tuner.hpp"
#include "tinycnn/weights.hpp"

namespace fs = std::filesystem;
using namespace tinycnn;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string model_dir;
    std::string device_path;
    int width = 16;
    std::string mode = "shared";
    std::vector<int> dsp = {16};
    int dsp_dense = 16;
    double clock_mhz = 0.0;  // 0: take the device's clock
    double sw_baseline_ms = 0.0;
    unsigned seed = 1;
    std::string out_dir = "out";
    bool double_buffer = false;

    // verifset
    int random_count = -1;
    std::string images_path;
};

std::string with_commas(long long v) {
    std::string digits = std::to_string(v < 0 ? -v : v);
    std::string out;
    int run = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (run && run % 3 == 0) out.push_back(',');
        out.push_back(*it);
        ++run;
    }
    if (v < 0) out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

struct Model {
    NetworkSpec spec;
    WeightBundle weights;
};

Model load_model(const Options& opt) {
    if (opt.model_dir.empty())
        throw IoError("--model is required for this command");
    const fs::path dir = opt.model_dir;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw IoError("missing " + (dir / "manifest.json").string());
    std::string text((std::istreambuf_iterator<char>(mf)),
                     std::istreambuf_iterator<char>());
    Model m;
    m.spec = infer_shapes(parse_manifest(text));
    m.weights = load_weights(dir / "weights", m.spec);
    return m;
}

NetworkSpec load_spec_only(const Options& opt) {
    if (opt.model_dir.empty())
        throw IoError("--model is required for this command");
    const fs::path dir = opt.model_dir;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw IoError("missing " + (dir / "manifest.json").string());
    std::string text((std::istreambuf_iterator<char>(mf)),
                     std::istreambuf_iterator<char>());
    return infer_shapes(parse_manifest(text));
}

DeviceSpec load_device_opt(const Options& opt) {
    if (opt.device_path.empty())
        throw IoError("--device is required for this command");
    fs::path p = opt.device_path;
    if (!fs::exists(p)) {
        const char* search = std::getenv("TINYCNN_DEVICE_DIR");
        if (search && *search) {
            fs::path alt = fs::path(search) / opt.device_path;
            if (fs::exists(alt)) p = alt;
        }
    }
    return load_device(p);
}

HardwareConfig make_config(const Options& opt, const DeviceSpec* dev) {
    HardwareConfig cfg;
    cfg.mode = opt.mode == "exclusive" ? ConvMode::Exclusive : ConvMode::Shared;
    cfg.dsp_per_conv = opt.dsp;
    cfg.dsp_dense = opt.dsp_dense;
    cfg.double_buffer = opt.double_buffer;
    cfg.clock_mhz = opt.clock_mhz > 0.0
                        ? opt.clock_mhz
                        : (dev ? dev->clock_mhz : 100.0);
    return cfg;
}

std::vector<FloatTensor> seeded_images(const NetworkSpec& spec, int count,
                                       unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    std::vector<FloatTensor> images;
    images.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        FloatTensor img(spec.input_shape);
        for (auto& v : img.data) v = dist(rng);
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<FloatTensor> images_from_file(const NetworkSpec& spec,
                                          const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("missing images file: " + path.string());
    f.seekg(0, std::ios::end);
    const std::streamoff bytes = f.tellg();
    f.seekg(0, std::ios::beg);
    const long long elems = spec.input_shape.elements();
    if (bytes == 0 || bytes % (elems * 4) != 0)
        throw ParseError(path.string() + ": size must be a multiple of " +
                         std::to_string(elems * 4) + " bytes (float32 images)");
    const long long count = bytes / (elems * 4);
    std::vector<FloatTensor> images;
    for (long long i = 0; i < count; ++i) {
        FloatTensor img(spec.input_shape);
        if (!f.read(reinterpret_cast<char*>(img.data.data()), elems * 4))
            throw IoError("failed to read " + path.string());
        images.push_back(std::move(img));
    }
    return images;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("missing " + path.string());
    try {
        nlohmann::json j;
        f >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json j;
    j["fits"] = fit.fits;
    j["bram_ok"] = fit.bram_ok;
    j["dsp_ok"] = fit.dsp_ok;
    j["weight_bits"] = fit.weight_bits;
    j["fmap_bits"] = fit.fmap_bits;
    j["half_blocks_needed"] = fit.half_blocks_needed;
    j["half_blocks_available"] = fit.half_blocks_available;
    j["dsp_needed"] = fit.dsp_needed;
    j["dsp_available"] = fit.dsp_available;
    j["binding"] = fit.binding;
    j["breakdown"] = nlohmann::json::array();
    for (const auto& item : fit.breakdown)
        j["breakdown"].push_back({{"name", item.name},
                                  {"bits", item.bits},
                                  {"half_blocks", item.half_blocks}});
    return j;
}

nlohmann::json tune_report_to_json(const TuneReport& rep) {
    nlohmann::json j;
    j["width"] = rep.plan.width;
    j["passes"] = rep.passes;
    j["converged"] = rep.converged;
    j["final_nmse"] = rep.final_nmse;
    j["agreement"] = rep.agreement;
    j["saturations"] = rep.saturations;
    j["pass_layer_nmse"] = rep.pass_layer_nmse;
    j["qplan"] = qplan_to_json(rep.plan);
    return j;
}

int cmd_check(const Options& opt) {
    Model m = load_model(opt);
    DeviceSpec dev = load_device_opt(opt);
    HardwareConfig cfg = make_config(opt, &dev);
    FitResult fit = check_fit(m.spec, dev, opt.width, cfg);

    std::printf("model: %s (%zu layers, %s params)\n", m.spec.name.c_str(),
                m.spec.layers.size(),
                with_commas(total_params(m.spec)).c_str());
    std::printf("device: %s (%d BRAM36 = %s bits, %d DSP)\n",
                dev.name.c_str(), dev.bram36,
                with_commas(dev.total_bram_bits()).c_str(), dev.dsp);
    for (const auto& item : fit.breakdown)
        std::printf("  %-32s %14s bits  %4lld half-blocks\n",
                    item.name.c_str(), with_commas(item.bits).c_str(),
                    item.half_blocks);
    std::printf("weight bits: %s\n", with_commas(fit.weight_bits).c_str());
    std::printf("fmap bits: %s\n", with_commas(fit.fmap_bits).c_str());
    std::printf("half-blocks: %lld / %lld\n", fit.half_blocks_needed,
                fit.half_blocks_available);
    std::printf("dsp: %lld / %lld\n", fit.dsp_needed, fit.dsp_available);
    if (fit.fits)
        std::printf("fit: yes\n");
    else
        std::printf("fit: no (%s bound)\n", fit.binding.c_str());

    if (!opt.out_dir.empty())
        write_json(fs::path(opt.out_dir) / "fit_report.json",
                   fit_to_json(fit));
    return fit.fits ? 0 : kExitDomain;
}

int cmd_verifset(const Options& opt) {
    Model m = load_model(opt);
    std::vector<FloatTensor> images;
    if (!opt.images_path.empty()) {
        images = images_from_file(m.spec, opt.images_path);
    } else {
        if (opt.random_count < 0)
            throw IoError("verifset needs --images FILE or --random N");
        if (opt.random_count == 0)
            throw IoError("--random must be at least 1");
        images = seeded_images(m.spec, opt.random_count, opt.seed);
    }
    const fs::path dir = fs::path(opt.out_dir) / "verif";
    VerificationSet set = make_verification_set(m.spec, m.weights, images, dir);
    std::printf("verification set: %zu images, %zu reference layers -> %s\n",
                set.inputs.size(), m.spec.layers.size(), dir.string().c_str());
    return 0;
}

int cmd_tune(const Options& opt) {
    Model m = load_model(opt);
    const fs::path verif_dir = fs::path(opt.out_dir) / "verif";
    VerificationSet set = load_verification_set(verif_dir, m.spec);

    TuneReport tuned = tune(m.spec, m.weights, set, opt.width);
    TuneReport naive =
        evaluate_plan(m.spec, m.weights, set, midsplit_plan(m.spec, opt.width));

    save_qplan(fs::path(opt.out_dir) / "qplan.json", tuned.plan);
    nlohmann::json rep = tune_report_to_json(tuned);
    rep["midsplit_nmse"] = naive.final_nmse;
    write_json(fs::path(opt.out_dir) / "tune_report.json", rep);

    std::printf("tuned in %d pass%s (%s)\n", tuned.passes,
                tuned.passes == 1 ? "" : "es",
                tuned.converged ? "converged" : "pass limit");
    std::printf("final nmse: %.6e (mid-split baseline: %.6e)\n",
                tuned.final_nmse, naive.final_nmse);
    std::printf("class agreement: %.4f\n", tuned.agreement);
    return 0;
}

int cmd_simulate(const Options& opt) {
    Model m = load_model(opt);
    const fs::path verif_dir = fs::path(opt.out_dir) / "verif";
    VerificationSet set = load_verification_set(verif_dir, m.spec);
    QPlan plan = load_qplan(fs::path(opt.out_dir) / "qplan.json");

    // storage sanity: the stored traces already agree with themselves
    std::vector<int> stored, recomputed;
    for (const auto& ref : set.references) {
        stored.push_back(ref.predicted_class);
        recomputed.push_back(argmax_class(ref.outputs.back().data));
    }
    std::printf("float agreement: %.4f\n",
                classification_agreement(stored, recomputed));

    TuneReport eval = evaluate_plan(m.spec, m.weights, set, plan);
    std::printf("fixed-vs-float agreement: %.4f\n", eval.agreement);
    const auto& nmse = eval.pass_layer_nmse.back();
    for (std::size_t l = 0; l < nmse.size(); ++l)
        std::printf("  layer %-2zu %-8s nmse %.6e\n", l,
                    layer_kind_name(m.spec.layers[l].kind), nmse[l]);
    long long sats = 0;
    for (long long s : eval.saturations) sats += s;

    nlohmann::json j;
    j["agreement"] = eval.agreement;
    j["final_nmse"] = eval.final_nmse;
    j["layer_nmse"] = nmse;
    j["saturations"] = eval.saturations;
    j["images"] = set.inputs.size();
    j["width"] = plan.width;
    write_json(fs::path(opt.out_dir) / "sim_report.json", j);
    std::printf("final nmse: %.6e, saturations: %lld\n", eval.final_nmse,
                sats);
    return 0;
}

int cmd_perf(const Options& opt) {
    NetworkSpec spec = load_spec_only(opt);
    DeviceSpec dev;
    bool have_dev = !opt.device_path.empty();
    if (have_dev) dev = load_device_opt(opt);
    HardwareConfig cfg = make_config(opt, have_dev ? &dev : nullptr);

    PerfReport rep = total_cycles(spec, cfg);
    std::printf("mode: %s, clock: %.1f MHz\n", conv_mode_name(cfg.mode),
                cfg.clock_mhz);
    for (std::size_t l = 0; l < rep.per_layer_cycles.size(); ++l)
        std::printf("  layer %-2zu %-8s %14s cycles\n", l,
                    layer_kind_name(spec.layers[l].kind),
                    with_commas(rep.per_layer_cycles[l]).c_str());
    std::printf("total: %s cycles, %.3f ms\n",
                with_commas(rep.total_cycles).c_str(), rep.runtime_ms);
    if (opt.sw_baseline_ms > 0.0)
        std::printf("speedup vs %.2f ms baseline: %.3fx\n", opt.sw_baseline_ms,
                    speedup_ratio(opt.sw_baseline_ms, rep.runtime_ms));

    write_json(fs::path(opt.out_dir) / "perf_report.json",
               perf_to_json(spec, rep,
                            opt.sw_baseline_ms > 0.0 ? opt.sw_baseline_ms
                                                     : 0.0));
    return 0;
}

int cmd_emit(const Options& opt) {
    Model m = load_model(opt);
    DeviceSpec dev = load_device_opt(opt);
    HardwareConfig cfg = make_config(opt, &dev);

    EmitPlan plan;
    plan.spec = m.spec;
    plan.qplan = load_qplan(fs::path(opt.out_dir) / "qplan.json");
    if (plan.qplan.width != opt.width)
        throw Error("qplan width " + std::to_string(plan.qplan.width) +
                    " does not match --width " + std::to_string(opt.width) +
                    "; re-run tune");
    plan.weights = quantize_weights(m.spec, m.weights, plan.qplan);
    plan.device = dev;
    plan.config = cfg;

    const fs::path hdl_dir = fs::path(opt.out_dir) / "hdl";
    EmitResult result;
    try {
        result = emit_all(plan, hdl_dir);
    } catch (const Error& e) {
        const std::string what = e.what();
        if (what.find("does not fit") != std::string::npos) {
            std::fprintf(stderr, "emit: %s\n", what.c_str());
            return kExitDomain;
        }
        throw;
    }
    std::printf("emitted %zu files -> %s\n", result.files.size(),
                hdl_dir.string().c_str());
    std::printf("manifest: %s\n",
                (hdl_dir / "emit_manifest.json").string().c_str());
    return 0;
}

int cmd_report(const Options& opt) {
    const fs::path out = opt.out_dir;
    nlohmann::json j;
    struct Piece {
        const char* key;
        const char* file;
    };
    const Piece pieces[] = {
        {"fit", "fit_report.json"},
        {"tune", "tune_report.json"},
        {"simulate", "sim_report.json"},
        {"perf", "perf_report.json"},
        {"emit", "hdl/emit_manifest.json"},
    };
    int found = 0;
    for (const auto& p : pieces) {
        const fs::path path = out / p.file;
        if (fs::exists(path)) {
            j[p.key] = read_json(path);
            ++found;
        }
    }
    if (found == 0)
        throw IoError("no reports under " + out.string() +
                      "; run check/tune/simulate/perf/emit first");
    write_json(out / "report.json", j);
    std::printf("aggregated %d report%s -> %s\n", found,
                found == 1 ? "" : "s", (out / "report.json").string().c_str());
    return 0;
}

int cmd_seed_weights(const Options& opt) {
    NetworkSpec spec = load_spec_only(opt);
    std::mt19937 rng(opt.seed);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    WeightBundle bundle;
    bundle.layers.resize(spec.layers.size());
    for (int l : spec.parameterized_layers()) {
        const auto& layer = spec.layers[l];
        const TensorShape in = spec.per_layer_shapes[l].in;
        bundle.layers[l].weights.resize(
            static_cast<std::size_t>(weight_count(layer, in)));
        for (auto& w : bundle.layers[l].weights) w = dist(rng);
        bundle.layers[l].bias.resize(
            static_cast<std::size_t>(bias_count(layer)));
        for (auto& b : bundle.layers[l].bias) b = dist(rng);
    }
    save_weights(fs::path(opt.model_dir) / "weights", spec, bundle);
    std::printf("seeded %s params -> %s\n",
                with_commas(total_params(spec)).c_str(),
                (fs::path(opt.model_dir) / "weights").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CNN-to-FPGA fixed-point accelerator toolchain"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--model", opt.model_dir, "model directory");
    app.add_option("--device", opt.device_path,
                   "device spec json (searched in TINYCNN_DEVICE_DIR too)");
    app.add_option("--width", opt.width, "datapath word width")
        ->check(CLI::Range(4, 32));
    app.add_option("--mode", opt.mode, "conv engine mode")
        ->check(CLI::IsMember({"shared", "exclusive"}));
    app.add_option("--dsp", opt.dsp,
                   "DSP lanes per conv engine (one value, or one per conv "
                   "layer in exclusive mode)")
        ->delimiter(',');
    app.add_option("--dsp-dense", opt.dsp_dense, "DSP lanes for dense layers");
    app.add_option("--clock-mhz", opt.clock_mhz, "clock override in MHz");
    app.add_option("--sw-baseline-ms", opt.sw_baseline_ms,
                   "software runtime for the speedup line");
    app.add_option("--seed", opt.seed, "rng seed");
    app.add_option("--out", opt.out_dir, "artifact directory");
    app.add_flag("--double-buffer", opt.double_buffer,
                 "double the feature-map RAMs");

    auto* check = app.add_subcommand("check", "verify the design fits");
    auto* verifset =
        app.add_subcommand("verifset", "build the verification data set");
    verifset->add_option("--random", opt.random_count,
                         "number of seeded random images");
    verifset->add_option("--images", opt.images_path,
                         "raw float32 image file");
    auto* tune =
        app.add_subcommand("tune", "search per-layer fixed-point formats");
    auto* simulate =
        app.add_subcommand("simulate", "bit-exact fixed-point simulation");
    auto* perf = app.add_subcommand("perf", "cycle and runtime estimate");
    auto* emit = app.add_subcommand("emit", "generate the Verilog design");
    auto* report = app.add_subcommand("report", "aggregate artifact reports");
    auto* seed_weights = app.add_subcommand(
        "seed-weights", "fill a model directory with seeded random weights");

    // global flags are accepted on either side of the subcommand name
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (check->parsed()) return cmd_check(opt);
        if (verifset->parsed()) return cmd_verifset(opt);
        if (tune->parsed()) return cmd_tune(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (perf->parsed()) return cmd_perf(opt);
        if (emit->parsed()) return cmd_emit(opt);
        if (report->parsed()) return cmd_report(opt);
        if (seed_weights->parsed()) return cmd_seed_weights(opt);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
