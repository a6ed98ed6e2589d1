#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kpo/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef KPO_CLI_BINARY
#error "KPO_CLI_BINARY must point at the kpo executable"
#endif

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(KPO_CLI_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("kpo_cli_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

} // namespace

TEST_CASE("identical seed and config give byte-identical data files") {
    ScratchDir dir("determinism");
    const std::string common =
        " --coupling 1 --iterations 3 --seed 11 --config " + dir.str() + "/cfg.json";
    {
        std::ofstream cfg(dir.path / "cfg.json");
        cfg << R"({"classical": {"t_final": 1.0}})";
    }
    REQUIRE(run_cli("classical-sos -o " + dir.str() + "/a" + common) == 0);
    REQUIRE(run_cli("classical-sos -o " + dir.str() + "/b" + common) == 0);
    CHECK(slurp(dir.path / "a/sos_points.csv") == slurp(dir.path / "b/sos_points.csv"));
    CHECK(!slurp(dir.path / "a/sos_points.csv").empty());
}

TEST_CASE("missing config file exits with the config error code") {
    CHECK(run_cli("classical-sos --config /nonexistent/kpo.json") == 2);
}

TEST_CASE("config for a different experiment is rejected") {
    ScratchDir dir("wrongexp");
    {
        std::ofstream cfg(dir.path / "cfg.json");
        cfg << R"({"experiment": "spectrum"})";
    }
    CHECK(run_cli("classical-sos --config " + dir.str() + "/cfg.json") == 2);
}

TEST_CASE("manifest digests match the emitted files and re-running the echoed config reproduces them") {
    ScratchDir dir("echo");
    REQUIRE(run_cli("sensitivity --coupling 0.3 -o " + dir.str() + "/a --config " + dir.str() +
                    "/cfg.json") == 2); // config does not exist yet
    {
        std::ofstream cfg(dir.path / "cfg.json");
        cfg << R"({"classical": {"t_final": 0.5}})";
    }
    REQUIRE(run_cli("sensitivity --coupling 0.3 -o " + dir.str() + "/a --config " + dir.str() +
                    "/cfg.json") == 0);

    const json manifest = json::parse(slurp(dir.path / "a/sensitivity.manifest.json"));
    CHECK(manifest.at("status") == "success");
    for (const auto& entry : manifest.at("outputs")) {
        const fs::path file = dir.path / "a" / entry.at("path").get<std::string>();
        CHECK(kpo::fnv1a64_hex(file) == entry.at("fnv1a64").get<std::string>());
    }

    // Round-trip: the resolved config snapshot is itself a valid config.
    json echoed = manifest.at("config");
    echoed["output_dir"] = dir.str() + "/b";
    {
        std::ofstream cfg(dir.path / "echo.json");
        cfg << echoed.dump();
    }
    REQUIRE(run_cli("sensitivity --config " + dir.str() + "/echo.json") == 0);
    CHECK(slurp(dir.path / "a/sensitivity_distance.csv") ==
          slurp(dir.path / "b/sensitivity_distance.csv"));
}

TEST_CASE("quantum grid with zero accumulation time is all zeros and husimi is nonnegative") {
    ScratchDir dir("zerot");
    REQUIRE(run_cli("quantum-sos --coupling 1 --kind husimi --t-final 0 --grid-n 11 --n-max 6 -o " +
                    dir.str()) == 0);
    std::ifstream in(dir.path / "quantum_sos_husimi.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "x1,y1,value");
    int rows = 0;
    while (std::getline(in, line)) {
        const auto last_comma = line.rfind(',');
        CHECK(std::strtod(line.c_str() + last_comma + 1, nullptr) == 0.0);
        ++rows;
    }
    CHECK(rows == 11 * 11);
}

TEST_CASE("quantum grid reruns are byte-identical") {
    ScratchDir dir("qdet");
    const std::string common =
        " --coupling 0.3 --kind both --t-final 0.05 --grid-n 9 --n-max 6";
    REQUIRE(run_cli("quantum-sos -o " + dir.str() + "/a" + common) == 0);
    REQUIRE(run_cli("quantum-sos -o " + dir.str() + "/b" + common) == 0);
    CHECK(slurp(dir.path / "a/quantum_sos_wigner.csv") == slurp(dir.path / "b/quantum_sos_wigner.csv"));
    CHECK(slurp(dir.path / "a/quantum_sos_husimi.csv") == slurp(dir.path / "b/quantum_sos_husimi.csv"));
    CHECK(!slurp(dir.path / "a/quantum_sos_wigner.csv").empty());
}

TEST_CASE("spectrum with an oversized spacing count reports a config error") {
    CHECK(run_cli("spectrum --coupling 1 --n-max 4 --spacing-count 400") == 2);
}

TEST_CASE("decoupled otoc omits the zero cross-series unless asked") {
    ScratchDir dir("otoczero");
    REQUIRE(run_cli("otoc --coupling 0 --n-max 6 --t-final 0.5 --time-step 0.25 -o " + dir.str() +
                    "/a") == 0);
    CHECK(fs::exists(dir.path / "a/quantum_otoc_c11.csv"));
    CHECK(!fs::exists(dir.path / "a/quantum_otoc_c21.csv"));

    REQUIRE(run_cli("otoc --coupling 0 --n-max 6 --t-final 0.5 --time-step 0.25 "
                    "--include-zero-series -o " +
                    dir.str() + "/b") == 0);
    REQUIRE(fs::exists(dir.path / "b/quantum_otoc_c21.csv"));
    std::ifstream in(dir.path / "b/quantum_otoc_c21.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        CHECK(std::abs(std::strtod(line.c_str() + comma + 1, nullptr)) <= 1e-10);
    }
}

TEST_CASE("numerical blow-up exits with the numeric error code and a failed manifest") {
    ScratchDir dir("blowup");
    {
        std::ofstream cfg(dir.path / "cfg.json");
        cfg << R"({"classical": {"dt": 0.5, "t_final": 20.0}})";
    }
    CHECK(run_cli("sensitivity --coupling 1 --config " + dir.str() + "/cfg.json -o " + dir.str()) ==
          3);
    const json manifest = json::parse(slurp(dir.path / "sensitivity.manifest.json"));
    CHECK(manifest.at("status") == "failed");
}

TEST_CASE("presets resolve through KPO_PRESET_DIR") {
    ScratchDir dir("preset");
    {
        std::ofstream preset(dir.path / "tiny.json");
        preset << R"({"experiment": "classical-sos", "model": {"coupling": 1.0},
                      "classical": {"t_final": 0.5}, "experiment_params": {"iterations": 2}})";
    }
    const std::string cmd = std::string("KPO_PRESET_DIR=") + dir.str() + " " + KPO_CLI_BINARY +
                            " classical-sos --preset tiny -o " + dir.str() + "/out >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(dir.path / "out/sos_points.csv"));
}

TEST_CASE("shipped figure presets parse and carry the right couplings") {
    // Source-tree presets; resolved the same way the binary locates them.
    const fs::path presets(KPO_PRESET_SOURCE_DIR);
    REQUIRE(fs::exists(presets / "fig2a.json"));
    const json fig2c = json::parse(slurp(presets / "fig2c.json"));
    CHECK(fig2c.at("model").at("coupling").get<double>() == 1.0);
    const json fig8a = json::parse(slurp(presets / "fig8a.json"));
    CHECK(fig8a.at("experiment") == "spectrum");
    CHECK(fig8a.at("model").at("coupling").get<double>() == 0.0);
}
