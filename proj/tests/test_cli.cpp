// End-to-end tests of the command-line driver: spawns the real binary and
// checks exit codes, console output, artifact layout, and rerun determinism.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tinycnn/model.hpp"
#include "tinycnn/weights.hpp"

#include "helpers.hpp"

#ifndef TINYCNN_CLI_PATH
#error "TINYCNN_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path cap =
        fs::temp_directory_path() / ("tinycnn_cli_cap" + std::to_string(counter++));
    const std::string cmd =
        std::string(TINYCNN_CLI_PATH) + " " + args + " >" + cap.string() + " 2>&1";
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

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// name -> content for every regular file under root
std::map<std::string, std::string> dir_contents(const fs::path& root) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            m[fs::relative(e.path(), root).string()] = slurp(e.path());
    return m;
}

struct Scratch {
    fs::path root;
    fs::path model_dir;     // small net with saved weights
    fs::path cifar_dir;     // the large pinned-number net
    fs::path device_path;

    Scratch() {
        root = fs::temp_directory_path() / "tinycnn_cli_test";
        fs::remove_all(root);
        fs::create_directories(root);

        model_dir = root / "model_small";
        fs::create_directories(model_dir);
        {
            std::ofstream f(model_dir / "manifest.json");
            f << R"({
  "name": "small",
  "input": {"height": 8, "width": 8, "channels": 1},
  "layers": [
    {"type": "conv2d", "out_channels": 4, "kernel": 3, "bias": true},
    {"type": "relu"},
    {"type": "maxpool", "size": 2},
    {"type": "flatten"},
    {"type": "dense", "units": 6, "bias": true},
    {"type": "relu"},
    {"type": "dense", "units": 3, "bias": true},
    {"type": "relu"}
  ]
})";
        }
        std::mt19937 rng(404);
        auto spec = tinycnn::infer_shapes(tinycnn::parse_manifest(
            slurp_manifest(model_dir)));
        tinycnn::save_weights(model_dir / "weights", spec,
                              testutil::random_bundle(spec, rng));

        cifar_dir = root / "model_cifar";
        fs::create_directories(cifar_dir);
        {
            std::ofstream f(cifar_dir / "manifest.json");
            f << testutil::cifar_tiny_manifest();
        }
        auto cspec = testutil::cifar_tiny_spec();
        std::mt19937 crng(405);
        tinycnn::save_weights(cifar_dir / "weights", cspec,
                              testutil::random_bundle(cspec, crng));

        device_path = root / "xc7z020.json";
        {
            std::ofstream f(device_path);
            f << R"({"name":"xc7z020","bram36":140,"bram36_bits":36864,"dsp":220,"clock_mhz":100})";
        }
    }

    static std::string slurp_manifest(const fs::path& dir) {
        std::ifstream f(dir / "manifest.json");
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
};

Scratch& scratch() {
    static Scratch s;
    return s;
}

std::string q(const fs::path& p) { return p.string(); }

} // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("bogus").exit_code == 2);
    CHECK(run_cli("check").exit_code == 2);  // no --model
    auto r = run_cli("--model " + q(scratch().model_dir) + " check");
    CHECK(r.exit_code == 2);  // no --device
}

TEST_CASE("check fits at width 16 and reports the pinned weight bits") {
    auto& s = scratch();
    auto r = run_cli("--model " + q(s.cifar_dir) + " --device " +
                     q(s.device_path) + " --width 16 check --out " +
                     q(s.root / "chk16"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("4,681,056") != std::string::npos);
    CHECK(r.out.find("fit: yes") != std::string::npos);
    CHECK(fs::exists(s.root / "chk16" / "fit_report.json"));
}

TEST_CASE("check at width 32 fails naming BRAM") {
    auto& s = scratch();
    auto r = run_cli("--model " + q(s.cifar_dir) + " --device " +
                     q(s.device_path) + " --width 32 check --out " +
                     q(s.root / "chk32"));
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("BRAM") != std::string::npos);
    CHECK(r.out.find("9,362,112") != std::string::npos);
}

TEST_CASE("missing device file exits 2, search path env resolves it") {
    auto& s = scratch();
    auto r = run_cli("--model " + q(s.cifar_dir) +
                     " --device does_not_exist.json --width 16 check --out " +
                     q(s.root / "chkmiss"));
    CHECK(r.exit_code == 2);

    // env-var search: same file name, resolved through TINYCNN_DEVICE_DIR
    const std::string cmd = "TINYCNN_DEVICE_DIR=" + q(s.root) + " " +
                            std::string(TINYCNN_CLI_PATH) + " --model " +
                            q(s.cifar_dir) +
                            " --device xc7z020.json --width 16 check --out " +
                            q(s.root / "chkenv") + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 0);
}

TEST_CASE("verifset rejects a zero request and reruns byte-identically") {
    auto& s = scratch();
    auto r0 = run_cli("--model " + q(s.model_dir) +
                      " verifset --random 0 --seed 7 --out " +
                      q(s.root / "vzero"));
    CHECK(r0.exit_code == 2);
    CHECK(!r0.out.empty());

    const fs::path a = s.root / "va";
    const fs::path b = s.root / "vb";
    REQUIRE(run_cli("--model " + q(s.model_dir) +
                    " verifset --random 6 --seed 7 --out " + q(a))
                .exit_code == 0);
    REQUIRE(run_cli("--model " + q(s.model_dir) +
                    " verifset --random 6 --seed 7 --out " + q(b))
                .exit_code == 0);
    CHECK(dir_contents(a) == dir_contents(b));

    // 8 network layers -> 8 reference files plus inputs.bin and manifest
    int refs = 0;
    for (const auto& e : fs::directory_iterator(a / "verif"))
        if (e.path().filename().string().rfind("ref_layer", 0) == 0) ++refs;
    CHECK(refs == 8);

    // a different seed must change the data
    REQUIRE(run_cli("--model " + q(s.model_dir) +
                    " verifset --random 6 --seed 8 --out " +
                    q(s.root / "vc"))
                .exit_code == 0);
    CHECK(slurp(a / "verif" / "inputs.bin") !=
          slurp(s.root / "vc" / "verif" / "inputs.bin"));
}

TEST_CASE("tune writes a qplan, beats mid-split, and reruns identically") {
    auto& s = scratch();
    const fs::path out = s.root / "pipe";
    REQUIRE(run_cli("--model " + q(s.model_dir) +
                    " verifset --random 16 --seed 3 --out " + q(out))
                .exit_code == 0);
    auto r = run_cli("--model " + q(s.model_dir) + " --width 16 tune --out " +
                     q(out));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("mid-split") != std::string::npos);
    REQUIRE(fs::exists(out / "qplan.json"));

    json rep = json::parse(slurp(out / "tune_report.json"));
    CHECK(rep["passes"].get<int>() <= 5);
    CHECK(rep["final_nmse"].get<double>() <=
          rep["midsplit_nmse"].get<double>());

    const std::string first = slurp(out / "qplan.json");
    REQUIRE(run_cli("--model " + q(s.model_dir) + " --width 16 tune --out " +
                    q(out))
                .exit_code == 0);
    CHECK(slurp(out / "qplan.json") == first);
}

TEST_CASE("simulate reports float self-agreement 1.0 and per-layer error") {
    auto& s = scratch();
    const fs::path out = s.root / "pipe";  // reuses the tuned artifacts
    REQUIRE(fs::exists(out / "qplan.json"));
    auto r = run_cli("--model " + q(s.model_dir) + " simulate --out " + q(out));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("float agreement: 1.0000") != std::string::npos);
    CHECK(r.out.find("fixed-vs-float agreement:") != std::string::npos);
    CHECK(r.out.find("layer 0") != std::string::npos);

    json rep = json::parse(slurp(out / "sim_report.json"));
    CHECK(rep["layer_nmse"].size() == 8);
    CHECK(rep["width"].get<int>() == 16);
}

TEST_CASE("simulate without a qplan exits 2") {
    auto& s = scratch();
    auto r = run_cli("--model " + q(s.model_dir) + " simulate --out " +
                     q(s.root / "noplan"));
    CHECK(r.exit_code == 2);
}

TEST_CASE("perf prints a three-decimal speedup and honors the mode") {
    auto& s = scratch();
    auto shared = run_cli("--model " + q(s.cifar_dir) +
                          " --mode shared --dsp 16 --sw-baseline-ms 42.54 "
                          "perf --out " +
                          q(s.root / "perf_sh"));
    REQUIRE(shared.exit_code == 0);
    const auto pos = shared.out.find("speedup vs");
    REQUIRE(pos != std::string::npos);
    // three decimals then the unit suffix
    const auto xpos = shared.out.find("x\n", pos);
    REQUIRE(xpos != std::string::npos);
    CHECK(shared.out[xpos - 4] == '.');

    auto excl = run_cli("--model " + q(s.cifar_dir) +
                        " --mode exclusive --dsp 16,16,16,16 "
                        "--sw-baseline-ms 42.54 perf --out " +
                        q(s.root / "perf_ex"));
    REQUIRE(excl.exit_code == 0);

    json js = json::parse(slurp(s.root / "perf_sh" / "perf_report.json"));
    json je = json::parse(slurp(s.root / "perf_ex" / "perf_report.json"));
    CHECK(je["total_cycles"].get<long long>() <=
          js["total_cycles"].get<long long>());
    CHECK(js["mode"] == "shared");
    CHECK(je["mode"] == "exclusive");
    CHECK(je["speedup"].get<double>() >= js["speedup"].get<double>());
}

TEST_CASE("emit produces a lint-clean tree and a hash-stable manifest") {
    auto& s = scratch();
    const fs::path out = s.root / "pipe";
    REQUIRE(fs::exists(out / "qplan.json"));
    auto r = run_cli("--model " + q(s.model_dir) + " --device " +
                     q(s.device_path) + " --width 16 emit --out " + q(out));
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(out / "hdl" / "emit_manifest.json"));
    REQUIRE(fs::exists(out / "hdl" / "top.v"));

    const auto first = dir_contents(out / "hdl");
    REQUIRE(run_cli("--model " + q(s.model_dir) + " --device " +
                    q(s.device_path) + " --width 16 emit --out " + q(out))
                .exit_code == 0);
    CHECK(dir_contents(out / "hdl") == first);

    json manifest = json::parse(slurp(out / "hdl" / "emit_manifest.json"));
    CHECK(manifest["files"].size() + 1 == first.size());
    CHECK(manifest.contains("qplan"));
    CHECK(manifest["config"]["width"].get<int>() == 16);
}

TEST_CASE("emit refuses a device that cannot hold the design") {
    auto& s = scratch();
    const fs::path tiny_dev = s.root / "tiny_dev.json";
    {
        std::ofstream f(tiny_dev);
        f << R"({"name":"tiny","bram36":1,"bram36_bits":36864,"dsp":8,"clock_mhz":100})";
    }
    auto r = run_cli("--model " + q(s.model_dir) + " --device " + q(tiny_dev) +
                     " --width 16 --dsp 4 --dsp-dense 4 emit --out " +
                     q(s.root / "pipe"));
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("refus") != std::string::npos);
}

TEST_CASE("emit with a qplan tuned at another width exits 2") {
    auto& s = scratch();
    auto r = run_cli("--model " + q(s.model_dir) + " --device " +
                     q(s.device_path) + " --width 8 emit --out " +
                     q(s.root / "pipe"));
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("width") != std::string::npos);
}

TEST_CASE("report aggregates the artifacts present in the out dir") {
    auto& s = scratch();
    auto r = run_cli("report --out " + q(s.root / "pipe"));
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(slurp(s.root / "pipe" / "report.json"));
    CHECK(rep.contains("tune"));
    CHECK(rep.contains("simulate"));
    CHECK(rep.contains("emit"));

    auto empty = run_cli("report --out " + q(s.root / "emptydir"));
    CHECK(empty.exit_code == 2);
}

TEST_CASE("seed-weights fills a bare model directory deterministically") {
    auto& s = scratch();
    const fs::path bare_a = s.root / "bare_a";
    const fs::path bare_b = s.root / "bare_b";
    for (const auto& d : {bare_a, bare_b}) {
        fs::create_directories(d);
        fs::copy_file(s.model_dir / "manifest.json", d / "manifest.json");
    }
    REQUIRE(run_cli("--model " + q(bare_a) + " seed-weights --seed 5")
                .exit_code == 0);
    REQUIRE(run_cli("--model " + q(bare_b) + " seed-weights --seed 5")
                .exit_code == 0);
    CHECK(dir_contents(bare_a / "weights") == dir_contents(bare_b / "weights"));

    // the freshly seeded model must run through check
    auto r = run_cli("--model " + q(bare_a) + " --device " + q(s.device_path) +
                     " --width 16 check --out " + q(s.root / "bare_chk"));
    CHECK(r.exit_code == 0);
}
