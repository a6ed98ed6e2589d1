// kpo: experiment runner for the coupled-KPO chaos diagnostics.
//
// Each subcommand runs one experiment: it resolves a configuration from
// built-in defaults, an optional JSON config file or named preset, and flag
// overrides; runs the computation; writes CSV data files plus a metadata
// sidecar; and finishes with a manifest carrying the resolved config and
// content digests. Identical config and seed give byte-identical data files.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpo/classical.hpp"
#include "kpo/io.hpp"
#include "kpo/model.hpp"
#include "kpo/quantum.hpp"
#include "kpo/rng.hpp"
#include "kpo/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBasisConvention = "row-major n = n1*(n_max+1)+n2";

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

json model_defaults() {
    return json{{"hbar", 1.0},   {"kerr", 1.0},     {"pump1", 3.0},
                {"pump2", M_PI}, {"detuning", 0.0}, {"coupling", 0.0}};
}

json classical_defaults() { return json{{"dt", 1e-4}, {"t_final", 20.0}}; }

json quantum_defaults() {
    return json{{"dt", 1e-3}, {"t_final", 20.0}, {"stride", 10}, {"n_max", 30}};
}

json paper_otoc_initial_state() {
    const kpo::PhaseState c = kpo::default_otoc_center();
    return json{{"type", "coherent"}, {"alpha1", {c.x1, c.y1}}, {"alpha2", {c.x2, c.y2}}};
}

json default_config(const std::string& experiment) {
    json cfg;
    cfg["experiment"] = experiment;
    cfg["output_dir"] = ".";
    cfg["seed"] = 1;
    cfg["threads"] = 0;
    cfg["model"] = model_defaults();

    if (experiment == "classical-sos") {
        cfg["classical"] = classical_defaults();
        cfg["experiment_params"] = json{{"iterations", 200}, {"interpolate", false}};
    } else if (experiment == "classical-mpmp") {
        cfg["classical"] = classical_defaults();
        cfg["experiment_params"] = json{{"iterations", 1000},
                                        {"tolerance", 1e-3},
                                        {"quadrant", {1, 1}},
                                        {"record_every_sample", false}};
    } else if (experiment == "sensitivity") {
        cfg["classical"] = classical_defaults();
        cfg["experiment_params"] = json{{"deviation", 1e-6}, {"output_stride", 100}};
    } else if (experiment == "classical-otoc") {
        cfg["classical"] = classical_defaults();
        const kpo::PhaseState c = kpo::default_otoc_center();
        cfg["experiment_params"] = json{{"iterations", 1000},
                                        {"modes", {1, 2}},
                                        {"time_step", 0.02},
                                        {"spread_x", 0.5},
                                        {"spread_y", 0.5},
                                        {"probe_offset", 0.5},
                                        {"center", {{"x1", c.x1}, {"x2", c.x2}, {"y1", c.y1}, {"y2", c.y2}}}};
    } else if (experiment == "quantum-sos") {
        cfg["quantum"] = quantum_defaults();
        cfg["experiment_params"] =
            json{{"kind", "husimi"},
                 {"grid", {{"x_min", -3.0}, {"x_max", 3.0}, {"nx", 81}, {"y_min", -3.0}, {"y_max", 3.0}, {"ny", 81}}},
                 {"initial_state", {{"type", "vacuum"}}}};
    } else if (experiment == "quantum-mpmp") {
        cfg["quantum"] = quantum_defaults();
        cfg["experiment_params"] =
            json{{"kind", "husimi"},
                 {"grid",
                  {{"x_min", -2.5}, {"x_max", 2.5}, {"nx", 81}, {"y_min", -2.5}, {"y_max", 2.5}, {"ny", 81}}},
                 {"quadrant", {1, 1}},
                 {"initial_state", {{"type", "vacuum"}}}};
    } else if (experiment == "otoc") {
        cfg["quantum"] = quantum_defaults();
        cfg["experiment_params"] = json{{"modes_i", {1, 2}},
                                        {"mode_j", 1},
                                        {"time_step", 0.02},
                                        {"include_zero_series", false},
                                        {"initial_state", paper_otoc_initial_state()}};
    } else if (experiment == "spectrum") {
        cfg["quantum"] = quantum_defaults();
        cfg["experiment_params"] = json{{"spacing_count", 50}, {"smallest_spacings", false}};
    } else {
        throw kpo::ConfigError("unknown experiment: " + experiment);
    }
    return cfg;
}

void deep_merge(json& base, const json& overlay) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object()) {
            deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

fs::path resolve_preset_dir() {
    if (const char* env = std::getenv("KPO_PRESET_DIR")) return fs::path(env);
#ifdef KPO_PRESET_SOURCE_DIR
    if (fs::exists(KPO_PRESET_SOURCE_DIR)) return fs::path(KPO_PRESET_SOURCE_DIR);
#endif
    return fs::path("presets");
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw kpo::ConfigError("cannot open config file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw kpo::ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<std::string> preset;
    std::optional<std::string> output_dir;
    std::optional<double> coupling, pump1, pump2, detuning, kerr;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool paper_scale = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file (merged over defaults)");
    cmd->add_option("--preset", flags.preset, "Named preset config, e.g. fig2a")
        ->excludes(cmd->get_option("--config"));
    cmd->add_option("-o,--output-dir", flags.output_dir,
                    "Output directory (default: $KPO_OUTPUT_DIR or '.')");
    cmd->add_option("-x,--coupling", flags.coupling, "Coupling strength xi0");
    cmd->add_option("--pump1", flags.pump1, "Pump amplitude p1");
    cmd->add_option("--pump2", flags.pump2, "Pump amplitude p2");
    cmd->add_option("--detuning", flags.detuning, "Detuning Delta");
    cmd->add_option("--kerr", flags.kerr, "Kerr coefficient K");
    cmd->add_option("--seed", flags.seed, "PRNG seed");
    cmd->add_option("--threads", flags.threads, "Max worker threads (0 = hardware)");
    cmd->add_flag("--paper-scale", flags.paper_scale,
                  "Restore full paper-scale ensembles (10^5 MPMP / 10^4 OTOC iterations)");
}

json resolve_config(const std::string& experiment, const CommonFlags& flags,
                    const std::function<void(json&)>& apply_experiment_flags) {
    json cfg = default_config(experiment);

    if (flags.preset) {
        const fs::path path = resolve_preset_dir() / (*flags.preset + ".json");
        deep_merge(cfg, load_json_file(path));
    } else if (flags.config_path) {
        deep_merge(cfg, load_json_file(*flags.config_path));
    }

    if (cfg.value("experiment", experiment) != experiment) {
        throw kpo::ConfigError("config is for experiment '" + cfg["experiment"].get<std::string>() +
                               "', not '" + experiment + "'");
    }
    cfg["experiment"] = experiment;

    if (flags.output_dir) {
        cfg["output_dir"] = *flags.output_dir;
    } else if (!flags.config_path && !flags.preset) {
        if (const char* env = std::getenv("KPO_OUTPUT_DIR")) cfg["output_dir"] = std::string(env);
    } else if (const char* env = std::getenv("KPO_OUTPUT_DIR")) {
        if (!cfg.contains("output_dir") || cfg["output_dir"] == ".") cfg["output_dir"] = std::string(env);
    }

    if (flags.coupling) cfg["model"]["coupling"] = *flags.coupling;
    if (flags.pump1) cfg["model"]["pump1"] = *flags.pump1;
    if (flags.pump2) cfg["model"]["pump2"] = *flags.pump2;
    if (flags.detuning) cfg["model"]["detuning"] = *flags.detuning;
    if (flags.kerr) cfg["model"]["kerr"] = *flags.kerr;
    if (flags.seed) cfg["seed"] = *flags.seed;
    if (flags.threads) cfg["threads"] = *flags.threads;

    if (flags.paper_scale) {
        if (experiment == "classical-mpmp") cfg["experiment_params"]["iterations"] = 100000;
        if (experiment == "classical-otoc") cfg["experiment_params"]["iterations"] = 10000;
    }

    if (apply_experiment_flags) apply_experiment_flags(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Typed views of the resolved config
// ---------------------------------------------------------------------------

template <typename T>
T require(const json& obj, const std::string& key) {
    if (!obj.contains(key)) throw kpo::ConfigError("missing config key: " + key);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw kpo::ConfigError("config key has wrong type: " + key);
    }
}

kpo::ModelParams model_from(const json& cfg) {
    const json& m = cfg.at("model");
    kpo::ModelParams p;
    p.hbar = require<double>(m, "hbar");
    p.kerr = require<double>(m, "kerr");
    p.pump1 = require<double>(m, "pump1");
    p.pump2 = require<double>(m, "pump2");
    p.detuning = require<double>(m, "detuning");
    p.coupling = require<double>(m, "coupling");
    p.validate();
    return p;
}

kpo::IntegratorConfig integrator_from(const json& cfg) {
    const json& c = cfg.at("classical");
    kpo::IntegratorConfig integ;
    integ.dt = require<double>(c, "dt");
    integ.t_final = require<double>(c, "t_final");
    integ.validate();
    return integ;
}

kpo::EvolutionConfig evolution_from(const json& cfg) {
    const json& q = cfg.at("quantum");
    kpo::EvolutionConfig evo;
    evo.dt = require<double>(q, "dt");
    evo.t_final = require<double>(q, "t_final");
    evo.stride = require<int>(q, "stride");
    evo.hbar = require<double>(cfg.at("model"), "hbar");
    evo.validate();
    return evo;
}

kpo::FockDimension fock_from(const json& cfg) {
    kpo::FockDimension dim;
    dim.n_max = require<int>(cfg.at("quantum"), "n_max");
    dim.validate();
    return dim;
}

kpo::GridSpec grid_from(const json& params) {
    const json& g = params.at("grid");
    kpo::GridSpec spec;
    spec.x_min = require<double>(g, "x_min");
    spec.x_max = require<double>(g, "x_max");
    spec.nx = require<int>(g, "nx");
    spec.y_min = require<double>(g, "y_min");
    spec.y_max = require<double>(g, "y_max");
    spec.ny = require<int>(g, "ny");
    spec.validate();
    return spec;
}

std::pair<int, int> quadrant_from(const json& params) {
    const auto q = require<std::vector<int>>(params, "quadrant");
    if (q.size() != 2 || std::abs(q[0]) != 1 || std::abs(q[1]) != 1)
        throw kpo::ConfigError("quadrant must be a pair of +-1 signs");
    return {q[0], q[1]};
}

kpo::ComplexVector initial_state_from(const json& params, const kpo::FockDimension& dim) {
    const json& st = params.at("initial_state");
    const auto type = require<std::string>(st, "type");
    if (type == "vacuum") return kpo::vacuum_state(dim);
    if (type == "coherent") {
        const auto a1 = require<std::vector<double>>(st, "alpha1");
        const auto a2 = require<std::vector<double>>(st, "alpha2");
        if (a1.size() != 2 || a2.size() != 2)
            throw kpo::ConfigError("coherent state needs alpha as [re, im]");
        const kpo::Complex alpha1(a1[0], a1[1]);
        const kpo::Complex alpha2(a2[0], a2[1]);
        if (!kpo::coherent_truncation_adequate(alpha1, dim.n_max) ||
            !kpo::coherent_truncation_adequate(alpha2, dim.n_max)) {
            std::cerr << "warning: coherent amplitude large for n_max = " << dim.n_max
                      << "; truncation may be lossy\n";
        }
        kpo::ComplexVector psi =
            kpo::product_state(kpo::coherent_mode(alpha1, dim.n_max), kpo::coherent_mode(alpha2, dim.n_max));
        psi /= psi.norm();
        return psi;
    }
    throw kpo::ConfigError("unknown initial state type: " + type);
}

std::vector<double> time_grid(double t_final, double time_step) {
    if (!(time_step > 0.0)) throw kpo::ConfigError("time_step must be positive");
    const long count = std::lround(t_final / time_step);
    if (count < 0) throw kpo::ConfigError("t_final must be nonnegative");
    std::vector<double> times;
    times.reserve(static_cast<size_t>(count) + 1);
    for (long k = 0; k <= count; ++k) times.push_back(static_cast<double>(k) * time_step);
    return times;
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

struct RunOutputs {
    fs::path dir;
    std::vector<std::string> files;

    fs::path path_of(const std::string& name) const { return dir / name; }
    void record(const std::string& name) { files.push_back(name); }
};

void write_meta_file(RunOutputs& out, const std::string& experiment, json meta) {
    meta["basis_flattening"] = kBasisConvention;
    meta["prng_algorithm"] = kpo::kRngAlgorithm;
    const std::string name = experiment + ".meta.json";
    std::ofstream f(out.path_of(name), std::ios::binary);
    f << meta.dump(2) << "\n";
    if (!f) throw kpo::ConfigError("write failure on metadata file");
    out.record(name);
}

void write_manifest(const RunOutputs& out, const std::string& experiment, const json& config,
                    const std::string& status, const std::string& error, double duration_seconds) {
    json m;
    m["experiment"] = experiment;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["tool_version"] = kpo::kToolVersion;
    m["prng"] = json{{"algorithm", kpo::kRngAlgorithm}, {"seed", config.value("seed", std::uint64_t{0})}};
    m["duration_seconds"] = duration_seconds;
    m["config"] = config;
    json outputs = json::array();
    for (const std::string& f : out.files) {
        outputs.push_back(json{{"path", f}, {"fnv1a64", kpo::fnv1a64_hex(out.path_of(f))}});
    }
    m["outputs"] = outputs;

    const fs::path final_path = out.dir / (experiment + ".manifest.json");
    const fs::path tmp_path = out.dir / (experiment + ".manifest.json.tmp");
    {
        std::ofstream f(tmp_path, std::ios::binary);
        f << m.dump(2) << "\n";
        if (!f) throw kpo::ConfigError("write failure on manifest");
    }
    fs::rename(tmp_path, final_path);
}

json grid_meta(const kpo::Grid2D& grid) {
    return json{{"diagnostic", grid.diagnostic},
                {"t_final", grid.t_final},
                {"dt", grid.dt},
                {"stride", grid.stride},
                {"n_max", grid.n_max},
                {"grid",
                 {{"x_min", grid.spec.x_min},
                  {"x_max", grid.spec.x_max},
                  {"nx", grid.spec.nx},
                  {"y_min", grid.spec.y_min},
                  {"y_max", grid.spec.y_max},
                  {"ny", grid.spec.ny}}}};
}

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

void run_classical_sos(const json& cfg, RunOutputs& out) {
    const kpo::ModelParams params = model_from(cfg);
    const kpo::IntegratorConfig integ = integrator_from(cfg);
    const json& xp = cfg.at("experiment_params");
    kpo::SosOptions options;
    options.iterations = require<int>(xp, "iterations");
    options.interpolate = require<bool>(xp, "interpolate");
    const auto seed = require<std::uint64_t>(cfg, "seed");
    const int threads = require<int>(cfg, "threads");

    const kpo::SosResult result = kpo::sos_crossings(params, integ, options, seed, threads);

    std::vector<std::pair<double, double>> rows;
    for (const auto& p : result.flattened()) rows.emplace_back(p.x1, p.y1);
    kpo::write_points_csv(out.path_of("sos_points.csv"), "x1", "y1", rows);
    out.record("sos_points.csv");
    write_meta_file(out, "classical-sos",
                    json{{"method", kpo::kClassicalMethod},
                         {"dt", integ.dt},
                         {"t_final", integ.t_final},
                         {"iterations", options.iterations},
                         {"crossings", rows.size()}});
}

void run_classical_mpmp(const json& cfg, RunOutputs& out) {
    const kpo::ModelParams params = model_from(cfg);
    const kpo::IntegratorConfig integ = integrator_from(cfg);
    const json& xp = cfg.at("experiment_params");
    kpo::MpmpOptions options;
    options.iterations = require<int>(xp, "iterations");
    options.tolerance = require<double>(xp, "tolerance");
    options.record_every_sample = require<bool>(xp, "record_every_sample");
    const auto [s1, s2] = quadrant_from(xp);
    const auto seed = require<std::uint64_t>(cfg, "seed");
    const int threads = require<int>(cfg, "threads");

    const kpo::PotentialMinimum minimum = kpo::find_potential_minimum(params, s1, s2);
    const auto points = kpo::mpmp_points(params, integ, minimum, options, seed, threads);

    std::vector<std::pair<double, double>> rows;
    for (const auto& p : points) rows.emplace_back(p.y1, p.y2);
    kpo::write_points_csv(out.path_of("mpmp_points.csv"), "y1", "y2", rows);
    out.record("mpmp_points.csv");
    write_meta_file(out, "classical-mpmp",
                    json{{"method", kpo::kClassicalMethod},
                         {"dt", integ.dt},
                         {"t_final", integ.t_final},
                         {"iterations", options.iterations},
                         {"tolerance", options.tolerance},
                         {"minimum", {{"x1", minimum.x1}, {"x2", minimum.x2}}},
                         {"records", rows.size()}});
}

void run_sensitivity(const json& cfg, RunOutputs& out) {
    const kpo::ModelParams params = model_from(cfg);
    const json& xp = cfg.at("experiment_params");
    kpo::SensitivityConfig sc;
    sc.dt = require<double>(cfg.at("classical"), "dt");
    sc.t_final = require<double>(cfg.at("classical"), "t_final");
    sc.deviation = require<double>(xp, "deviation");
    sc.output_stride = require<int>(xp, "output_stride");

    const kpo::TimeSeries series = kpo::sensitivity_distance(params, sc);
    kpo::write_series_csv(out.path_of("sensitivity_distance.csv"), "distance", series);
    out.record("sensitivity_distance.csv");
    write_meta_file(out, "sensitivity",
                    json{{"method", kpo::kClassicalMethod},
                         {"dt", sc.dt},
                         {"t_final", sc.t_final},
                         {"deviation", sc.deviation},
                         {"output_stride", sc.output_stride}});
}

void run_classical_otoc(const json& cfg, RunOutputs& out) {
    const kpo::ModelParams params = model_from(cfg);
    const json& xp = cfg.at("experiment_params");
    kpo::OtocEnsembleConfig oc;
    oc.dt = require<double>(cfg.at("classical"), "dt");
    oc.iterations = require<int>(xp, "iterations");
    oc.spread_x = require<double>(xp, "spread_x");
    oc.spread_y = require<double>(xp, "spread_y");
    oc.probe_offset = require<double>(xp, "probe_offset");
    oc.seed = require<std::uint64_t>(cfg, "seed");
    const json& center = xp.at("center");
    oc.center.x1 = require<double>(center, "x1");
    oc.center.x2 = require<double>(center, "x2");
    oc.center.y1 = require<double>(center, "y1");
    oc.center.y2 = require<double>(center, "y2");
    oc.validate();

    const double t_final = require<double>(cfg.at("classical"), "t_final");
    const double time_step = require<double>(xp, "time_step");
    const std::vector<double> times = time_grid(t_final, time_step);
    const auto modes = require<std::vector<int>>(xp, "modes");
    const int threads = require<int>(cfg, "threads");

    json series_meta = json::array();
    for (int mode : modes) {
        const kpo::OtocSeries series = kpo::classical_otoc(params, oc, mode, times, threads);
        kpo::TimeSeries ts{series.t, series.value};
        const std::string name = "classical_otoc_c" + std::to_string(mode) + "1.csv";
        kpo::write_series_csv(out.path_of(name), "c_tilde", ts);
        out.record(name);
        series_meta.push_back(json{{"file", name}, {"i", mode}, {"j", 1}});
    }
    write_meta_file(out, "classical-otoc",
                    json{{"method", kpo::kClassicalMethod},
                         {"dt", oc.dt},
                         {"t_final", t_final},
                         {"iterations", oc.iterations},
                         {"spread_x", oc.spread_x},
                         {"spread_y", oc.spread_y},
                         {"probe_offset", oc.probe_offset},
                         {"series", series_meta}});
}

enum class KindSelect { wigner, husimi, both };

KindSelect kind_from(const json& params) {
    const auto kind = require<std::string>(params, "kind");
    if (kind == "wigner") return KindSelect::wigner;
    if (kind == "husimi") return KindSelect::husimi;
    if (kind == "both") return KindSelect::both;
    throw kpo::ConfigError("kind must be wigner, husimi, or both");
}

void run_quantum_grid(const json& cfg, RunOutputs& out, bool mpmp) {
    const kpo::ModelParams params = model_from(cfg);
    const kpo::FockDimension dim = fock_from(cfg);
    const kpo::EvolutionConfig evo = evolution_from(cfg);
    const json& xp = cfg.at("experiment_params");
    const kpo::GridSpec spec = grid_from(xp);
    const KindSelect kind = kind_from(xp);
    const kpo::ComplexVector psi0 = initial_state_from(xp, dim);
    const int threads = require<int>(cfg, "threads");

    const std::string experiment = mpmp ? "quantum-mpmp" : "quantum-sos";
    const std::string prefix = mpmp ? "quantum_mpmp_" : "quantum_sos_";
    const char* col_x = mpmp ? "y1" : "x1";
    const char* col_y = mpmp ? "y2" : "y1";

    std::vector<kpo::Grid2D> grids;
    json extra;
    if (mpmp) {
        const auto [s1, s2] = quadrant_from(xp);
        const kpo::PotentialMinimum minimum = kpo::find_potential_minimum(params, s1, s2);
        extra["minimum"] = json{{"x1", minimum.x1}, {"x2", minimum.x2}};
        if (kind == KindSelect::both) {
            auto [w, q] =
                kpo::accumulate_quantum_mpmp_both(params, dim, evo, minimum, spec, &psi0, threads);
            grids.push_back(std::move(w));
            grids.push_back(std::move(q));
        } else {
            const auto k = kind == KindSelect::wigner ? kpo::QuasiKind::wigner : kpo::QuasiKind::husimi;
            grids.push_back(
                kpo::accumulate_quantum_mpmp(params, dim, evo, minimum, spec, k, &psi0, threads));
        }
    } else {
        if (kind == KindSelect::both) {
            auto [w, q] = kpo::accumulate_quantum_sos_both(params, dim, evo, spec, &psi0, threads);
            grids.push_back(std::move(w));
            grids.push_back(std::move(q));
        } else {
            const auto k = kind == KindSelect::wigner ? kpo::QuasiKind::wigner : kpo::QuasiKind::husimi;
            grids.push_back(kpo::accumulate_quantum_sos(params, dim, evo, spec, k, &psi0, threads));
        }
    }

    json files;
    for (const kpo::Grid2D& grid : grids) {
        const bool is_wigner = grid.diagnostic.rfind("wigner", 0) == 0;
        const std::string name = prefix + (is_wigner ? "wigner" : "husimi") + ".csv";
        kpo::write_grid_csv(out.path_of(name), col_x, col_y, grid);
        out.record(name);
        files[name] = grid_meta(grid);
    }
    json meta{{"files", files}, {"n_max", dim.n_max}};
    if (!extra.is_null()) deep_merge(meta, extra);
    write_meta_file(out, experiment, meta);
}

void run_otoc(const json& cfg, RunOutputs& out) {
    const kpo::ModelParams params = model_from(cfg);
    const kpo::FockDimension dim = fock_from(cfg);
    const json& xp = cfg.at("experiment_params");
    const kpo::ComplexVector psi0 = initial_state_from(xp, dim);
    const double t_final = require<double>(cfg.at("quantum"), "t_final");
    const std::vector<double> times = time_grid(t_final, require<double>(xp, "time_step"));
    const int mode_j = require<int>(xp, "mode_j");
    const bool include_zero = require<bool>(xp, "include_zero_series");
    auto modes_i = require<std::vector<int>>(xp, "modes_i");
    const int threads = require<int>(cfg, "threads");

    // With xi0 = 0 the cross correlator C_{2,1} vanishes identically and is
    // omitted unless explicitly requested.
    if (params.coupling == 0.0 && !include_zero) {
        std::erase_if(modes_i, [&](int i) { return i != mode_j; });
    }
    if (modes_i.empty()) throw kpo::ConfigError("no OTOC series left to compute");

    const kpo::Eigensystem eig = kpo::eigendecompose(kpo::build_hamiltonian(params, dim));

    json series_meta = json::array();
    for (int mode : modes_i) {
        const kpo::OtocResult result = kpo::quantum_otoc(eig, dim, psi0, mode, mode_j, times, threads);
        kpo::TimeSeries ts{result.t, result.value};
        const std::string name =
            "quantum_otoc_c" + std::to_string(mode) + std::to_string(mode_j) + ".csv";
        kpo::write_series_csv(out.path_of(name), "c", ts);
        out.record(name);
        series_meta.push_back(json{{"file", name}, {"i", mode}, {"j", mode_j}});
    }
    write_meta_file(out, "otoc", json{{"n_max", dim.n_max}, {"series", series_meta}});
}

void run_spectrum(const json& cfg, RunOutputs& out) {
    const kpo::ModelParams params = model_from(cfg);
    const kpo::FockDimension dim = fock_from(cfg);
    const json& xp = cfg.at("experiment_params");
    const int count = require<int>(xp, "spacing_count");
    const bool smallest = require<bool>(xp, "smallest_spacings");

    const kpo::Eigensystem eig = kpo::eigendecompose(kpo::build_hamiltonian(params, dim));
    const kpo::ParitySplit split = kpo::parity_split(eig, dim);

    Eigen::VectorXd even_energies(static_cast<int>(split.even.size()));
    for (size_t k = 0; k < split.even.size(); ++k)
        even_energies(static_cast<int>(k)) = eig.energies(split.even[k]);

    if (!smallest && count + 1 > even_energies.size()) {
        throw kpo::ConfigError("spacing count " + std::to_string(count) +
                               " exceeds available even-sector levels (" +
                               std::to_string(even_energies.size()) + ")");
    }
    const std::vector<double> spacings = kpo::level_spacings(even_energies, count, smallest);
    const kpo::SpacingFit fit = kpo::brody_fit(spacings);

    {
        kpo::CsvWriter csv(out.path_of("spectrum.csv"));
        csv.header({"k", "energy", "parity"});
        std::vector<bool> is_even(static_cast<size_t>(eig.dim()), false);
        for (int k : split.even) is_even[static_cast<size_t>(k)] = true;
        for (int k = 0; k < eig.dim(); ++k) {
            csv.row({std::to_string(k), kpo::format_double(eig.energies(k)),
                     is_even[static_cast<size_t>(k)] ? "even" : "odd"});
        }
        out.record("spectrum.csv");
    }
    {
        kpo::CsvWriter csv(out.path_of("spacings.csv"));
        csv.header({"spacing", "cumulative_count"});
        for (size_t k = 0; k < fit.spacings.size(); ++k)
            csv.row({fit.spacings[k], static_cast<double>(k + 1)});
        out.record("spacings.csv");
    }
    {
        kpo::CsvWriter csv(out.path_of("spacing_fit.csv"));
        csv.header({"omega", "A", "beta", "rss"});
        csv.row({fit.omega, fit.amplitude, fit.beta, fit.rss});
        out.record("spacing_fit.csv");
    }
    write_meta_file(out, "spectrum",
                    json{{"n_max", dim.n_max},
                         {"spacing_count", count},
                         {"smallest_spacings", smallest},
                         {"even_levels", even_energies.size()},
                         {"odd_levels", split.odd.size()},
                         {"fit", {{"omega", fit.omega}, {"A", fit.amplitude}, {"beta", fit.beta}, {"rss", fit.rss}}}});
}

int run_with_manifest(const std::string& experiment, const json& cfg,
                      const std::function<void(const json&, RunOutputs&)>& runner) {
    RunOutputs out;
    out.dir = fs::path(cfg.at("output_dir").get<std::string>());
    fs::create_directories(out.dir);

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    try {
        runner(cfg, out);
        write_manifest(out, experiment, cfg, "success", "", elapsed());
    } catch (const std::exception& e) {
        write_manifest(out, experiment, cfg, "failed", e.what(), elapsed());
        throw;
    }
    std::cout << experiment << ": wrote " << out.files.size() << " file(s) to " << out.dir.string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chaos diagnostics for two coupled Kerr-nonlinear parametric oscillators"};
    app.require_subcommand(1);

    struct Command {
        std::string name;
        std::string description;
        std::function<void(const json&, RunOutputs&)> runner;
        CommonFlags flags;
        std::function<void(json&)> apply_flags;
    };

    std::vector<std::shared_ptr<Command>> commands;
    auto add_command = [&](const std::string& name, const std::string& description,
                           std::function<void(const json&, RunOutputs&)> runner) {
        auto cmd = std::make_shared<Command>();
        cmd->name = name;
        cmd->description = description;
        cmd->runner = std::move(runner);
        commands.push_back(cmd);
        CLI::App* sub = app.add_subcommand(name, description);
        add_common_flags(sub, cmd->flags);
        return std::pair<CLI::App*, std::shared_ptr<Command>>(sub, cmd);
    };

    // classical-sos
    {
        auto [sub, cmd] = add_command("classical-sos", "Classical surface-of-section crossings",
                                      run_classical_sos);
        auto iterations = std::make_shared<std::optional<int>>();
        auto interpolate = std::make_shared<bool>(false);
        sub->add_option("--iterations", *iterations, "Trajectory count");
        sub->add_flag("--interpolate", *interpolate, "Linearly interpolate crossings");
        cmd->apply_flags = [iterations, interpolate](json& cfg) {
            if (*iterations) cfg["experiment_params"]["iterations"] = **iterations;
            if (*interpolate) cfg["experiment_params"]["interpolate"] = true;
        };
    }
    // classical-mpmp
    {
        auto [sub, cmd] = add_command("classical-mpmp", "Classical momentum plot at a potential minimum",
                                      run_classical_mpmp);
        auto iterations = std::make_shared<std::optional<int>>();
        auto tolerance = std::make_shared<std::optional<double>>();
        auto every = std::make_shared<bool>(false);
        sub->add_option("--iterations", *iterations, "Trajectory count");
        sub->add_option("--tolerance", *tolerance, "Position ball radius around the minimum");
        sub->add_flag("--record-every-sample", *every, "Record every in-ball sample, not one per entry");
        cmd->apply_flags = [iterations, tolerance, every](json& cfg) {
            if (*iterations) cfg["experiment_params"]["iterations"] = **iterations;
            if (*tolerance) cfg["experiment_params"]["tolerance"] = **tolerance;
            if (*every) cfg["experiment_params"]["record_every_sample"] = true;
        };
    }
    // sensitivity
    {
        auto [sub, cmd] =
            add_command("sensitivity", "Initial-condition sensitivity distance", run_sensitivity);
        auto deviation = std::make_shared<std::optional<double>>();
        sub->add_option("--deviation", *deviation, "Initial x1 deviation of the probe trajectory");
        cmd->apply_flags = [deviation](json& cfg) {
            if (*deviation) cfg["experiment_params"]["deviation"] = **deviation;
        };
    }
    // classical-otoc
    {
        auto [sub, cmd] = add_command("classical-otoc", "Classical OTOC ensemble", run_classical_otoc);
        auto iterations = std::make_shared<std::optional<int>>();
        auto modes = std::make_shared<std::vector<int>>();
        sub->add_option("--iterations", *iterations, "Ensemble size");
        sub->add_option("--modes", *modes, "Mode indices i for C~_{i,1}")->expected(1, 2);
        cmd->apply_flags = [iterations, modes](json& cfg) {
            if (*iterations) cfg["experiment_params"]["iterations"] = **iterations;
            if (!modes->empty()) cfg["experiment_params"]["modes"] = *modes;
        };
    }
    // quantum-sos / quantum-mpmp
    for (const bool mpmp : {false, true}) {
        const std::string name = mpmp ? "quantum-mpmp" : "quantum-sos";
        const std::string desc = mpmp ? "Time-integrated Wigner/Husimi momentum plot at the minimum"
                                      : "Time-integrated Wigner/Husimi surface of section";
        auto [sub, cmd] = add_command(
            name, desc, [mpmp](const json& cfg, RunOutputs& out) { run_quantum_grid(cfg, out, mpmp); });
        auto kind = std::make_shared<std::optional<std::string>>();
        auto n_max = std::make_shared<std::optional<int>>();
        auto t_final = std::make_shared<std::optional<double>>();
        auto grid_n = std::make_shared<std::optional<int>>();
        sub->add_option("--kind", *kind, "wigner, husimi, or both");
        sub->add_option("--n-max", *n_max, "Photon-number cutoff per mode");
        sub->add_option("--t-final", *t_final, "Accumulation time");
        sub->add_option("--grid-n", *grid_n, "Grid points per axis");
        cmd->apply_flags = [kind, n_max, t_final, grid_n](json& cfg) {
            if (*kind) cfg["experiment_params"]["kind"] = **kind;
            if (*n_max) cfg["quantum"]["n_max"] = **n_max;
            if (*t_final) cfg["quantum"]["t_final"] = **t_final;
            if (*grid_n) {
                cfg["experiment_params"]["grid"]["nx"] = **grid_n;
                cfg["experiment_params"]["grid"]["ny"] = **grid_n;
            }
        };
    }
    // otoc
    {
        auto [sub, cmd] = add_command("otoc", "Quantum OTOC in the eigenenergy basis", run_otoc);
        auto modes = std::make_shared<std::vector<int>>();
        auto include_zero = std::make_shared<bool>(false);
        auto n_max = std::make_shared<std::optional<int>>();
        auto t_final = std::make_shared<std::optional<double>>();
        auto time_step = std::make_shared<std::optional<double>>();
        sub->add_option("--modes", *modes, "Mode indices i for C_{i,j}")->expected(1, 2);
        sub->add_flag("--include-zero-series", *include_zero,
                      "Emit the identically-zero C_{2,1} series in the decoupled case");
        sub->add_option("--n-max", *n_max, "Photon-number cutoff per mode");
        sub->add_option("--t-final", *t_final, "Last sample time");
        sub->add_option("--time-step", *time_step, "Sample spacing");
        cmd->apply_flags = [modes, include_zero, n_max, t_final, time_step](json& cfg) {
            if (!modes->empty()) cfg["experiment_params"]["modes_i"] = *modes;
            if (*include_zero) cfg["experiment_params"]["include_zero_series"] = true;
            if (*n_max) cfg["quantum"]["n_max"] = **n_max;
            if (*t_final) cfg["quantum"]["t_final"] = **t_final;
            if (*time_step) cfg["experiment_params"]["time_step"] = **time_step;
        };
    }
    // spectrum
    {
        auto [sub, cmd] =
            add_command("spectrum", "Even-sector spectrum, spacings, and Brody-form fit", run_spectrum);
        auto count = std::make_shared<std::optional<int>>();
        auto smallest = std::make_shared<bool>(false);
        auto n_max = std::make_shared<std::optional<int>>();
        sub->add_option("--spacing-count", *count, "Number of level spacings to fit");
        sub->add_flag("--smallest-spacings", *smallest,
                      "Fit the smallest spacing values instead of spacings among the lowest levels");
        sub->add_option("--n-max", *n_max, "Photon-number cutoff per mode");
        cmd->apply_flags = [count, smallest, n_max](json& cfg) {
            if (*count) cfg["experiment_params"]["spacing_count"] = **count;
            if (*smallest) cfg["experiment_params"]["smallest_spacings"] = true;
            if (*n_max) cfg["quantum"]["n_max"] = **n_max;
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (const auto& cmd : commands) {
        if (!app.get_subcommand(cmd->name)->parsed()) continue;
        try {
            const json cfg = resolve_config(cmd->name, cmd->flags, cmd->apply_flags);
            return run_with_manifest(cmd->name, cfg, cmd->runner);
        } catch (const kpo::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const kpo::NumericError& e) {
            std::cerr << "numerical error: " << e.what() << "\n";
            return 3;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 2;
}
