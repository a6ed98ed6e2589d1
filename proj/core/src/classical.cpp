#include "kpo/classical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kpo/parallel.hpp"
#include "kpo/rng.hpp"

namespace kpo {

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrator dt must be positive");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("integrator t_final must be nonnegative");
    step_count();
}

long IntegratorConfig::step_count() const {
    const double ratio = t_final / dt;
    const long steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio)) {
        throw ConfigError("t_final must be an integer multiple of dt");
    }
    return steps;
}

void SensitivityConfig::validate() const {
    if (!(deviation > 0.0)) throw ConfigError("sensitivity deviation must be positive");
    if (output_stride < 1) throw ConfigError("output stride must be >= 1");
    IntegratorConfig{dt, t_final}.validate();
}

void OtocEnsembleConfig::validate() const {
    if (!(spread_x > 0.0) || !(spread_y > 0.0)) throw ConfigError("OTOC spreads must be positive");
    if (!(probe_offset > 0.0)) throw ConfigError("OTOC probe offset must be positive");
    if (iterations < 1) throw ConfigError("OTOC ensemble needs at least one iteration");
    if (!(dt > 0.0)) throw ConfigError("OTOC dt must be positive");
}

PhaseState flow_field(const PhaseState& s, const ModelParams& p) {
    const double r1 = s.x1 * s.x1 + s.y1 * s.y1;
    const double r2 = s.x2 * s.x2 + s.y2 * s.y2;
    PhaseState d;
    d.x1 = (p.kerr * r1 + p.pump1 + p.detuning) * s.y1 - p.coupling * s.y2;
    d.x2 = (p.kerr * r2 + p.pump2 + p.detuning) * s.y2 - p.coupling * s.y1;
    d.y1 = -(p.kerr * r1 - p.pump1 + p.detuning) * s.x1 + p.coupling * s.x2;
    d.y2 = -(p.kerr * r2 - p.pump2 + p.detuning) * s.x2 + p.coupling * s.x1;
    return d;
}

namespace {

inline PhaseState axpy(const PhaseState& s, const PhaseState& d, double a) {
    return PhaseState{s.x1 + a * d.x1, s.x2 + a * d.x2, s.y1 + a * d.y1, s.y2 + a * d.y2};
}

inline void check_state(const PhaseState& s) {
    if (!s.finite() || std::abs(s.x1) > kBlowupLimit || std::abs(s.x2) > kBlowupLimit ||
        std::abs(s.y1) > kBlowupLimit || std::abs(s.y2) > kBlowupLimit) {
        throw NumericError("classical trajectory blew up (coordinate beyond limit or non-finite)");
    }
}

PhaseState sos_initial_state(std::uint64_t seed, int iteration) {
    GaussianDraw gauss(substream(seed, static_cast<std::uint64_t>(iteration)));
    PhaseState s;
    s.x1 = 0.0;
    s.x2 = 0.0;
    s.y1 = 1e-6 * gauss.next();
    s.y2 = 1e-6 * gauss.next();
    return s;
}

} // namespace

PhaseState step_rk4(const PhaseState& state, const ModelParams& p, double dt) {
    const PhaseState k1 = flow_field(state, p);
    const PhaseState k2 = flow_field(axpy(state, k1, 0.5 * dt), p);
    const PhaseState k3 = flow_field(axpy(state, k2, 0.5 * dt), p);
    const PhaseState k4 = flow_field(axpy(state, k3, dt), p);

    PhaseState out;
    const double w = dt / 6.0;
    out.x1 = state.x1 + w * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1);
    out.x2 = state.x2 + w * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2);
    out.y1 = state.y1 + w * (k1.y1 + 2.0 * k2.y1 + 2.0 * k3.y1 + k4.y1);
    out.y2 = state.y2 + w * (k1.y2 + 2.0 * k2.y2 + 2.0 * k3.y2 + k4.y2);
    check_state(out);
    return out;
}

std::vector<SosPoint> SosResult::flattened() const {
    std::vector<SosPoint> all;
    for (const auto& traj : per_trajectory) all.insert(all.end(), traj.begin(), traj.end());
    return all;
}

SosResult sos_crossings(const ModelParams& params, const IntegratorConfig& integ,
                        const SosOptions& options, std::uint64_t seed, int threads) {
    params.validate();
    integ.validate();
    if (options.iterations < 0) throw ConfigError("iteration count must be nonnegative");

    const long steps = integ.step_count();
    SosResult result;
    result.per_trajectory.resize(static_cast<size_t>(options.iterations));

    parallel_for_index(options.iterations, threads, [&](int iteration) {
        PhaseState s = sos_initial_state(seed, iteration);
        std::vector<SosPoint>& points = result.per_trajectory[static_cast<size_t>(iteration)];
        double y2_prev = s.y2;
        PhaseState prev = s;
        for (long step = 0; step < steps; ++step) {
            prev = s;
            s = step_rk4(s, params, integ.dt);
            if (y2_prev * s.y2 < 0.0) {
                if (options.interpolate) {
                    const double w = y2_prev / (y2_prev - s.y2);
                    points.push_back(SosPoint{prev.x1 + w * (s.x1 - prev.x1),
                                              prev.y1 + w * (s.y1 - prev.y1)});
                } else {
                    points.push_back(SosPoint{s.x1, s.y1});
                }
            }
            y2_prev = s.y2;
        }
    });
    return result;
}

std::vector<MpmpPoint> mpmp_points(const ModelParams& params, const IntegratorConfig& integ,
                                   const PotentialMinimum& minimum, const MpmpOptions& options,
                                   std::uint64_t seed, int threads) {
    params.validate();
    integ.validate();
    if (options.iterations < 0) throw ConfigError("iteration count must be nonnegative");
    if (options.tolerance < 0.0) throw ConfigError("tolerance must be nonnegative");

    const long steps = integ.step_count();
    const double tol_sq = options.tolerance * options.tolerance;
    std::vector<std::vector<MpmpPoint>> per_iteration(static_cast<size_t>(options.iterations));

    parallel_for_index(options.iterations, threads, [&](int iteration) {
        PhaseState s = sos_initial_state(seed, iteration);
        std::vector<MpmpPoint>& points = per_iteration[static_cast<size_t>(iteration)];
        bool inside = false;
        for (long step = 0; step < steps; ++step) {
            s = step_rk4(s, params, integ.dt);
            const double dx1 = s.x1 - minimum.x1;
            const double dx2 = s.x2 - minimum.x2;
            const bool now_inside = dx1 * dx1 + dx2 * dx2 < tol_sq;
            if (now_inside && (options.record_every_sample || !inside)) {
                points.push_back(MpmpPoint{s.y1, s.y2});
            }
            inside = now_inside;
        }
    });

    std::vector<MpmpPoint> all;
    for (const auto& traj : per_iteration) all.insert(all.end(), traj.begin(), traj.end());
    return all;
}

TimeSeries sensitivity_distance(const ModelParams& params, const SensitivityConfig& config) {
    params.validate();
    config.validate();

    PhaseState a;
    a.y1 = 0.5 * std::cos(0.65 * M_PI);
    a.y2 = 0.5 * std::sin(0.65 * M_PI);
    PhaseState b = a;
    b.x1 = config.deviation;

    const long steps = IntegratorConfig{config.dt, config.t_final}.step_count();
    auto distance = [](const PhaseState& u, const PhaseState& v) {
        const double dx1 = u.x1 - v.x1, dx2 = u.x2 - v.x2;
        const double dy1 = u.y1 - v.y1, dy2 = u.y2 - v.y2;
        return std::sqrt(dx1 * dx1 + dx2 * dx2 + dy1 * dy1 + dy2 * dy2);
    };

    TimeSeries series;
    series.t.push_back(0.0);
    series.value.push_back(distance(a, b));
    for (long step = 1; step <= steps; ++step) {
        a = step_rk4(a, params, config.dt);
        b = step_rk4(b, params, config.dt);
        if (step % config.output_stride == 0 || step == steps) {
            series.t.push_back(static_cast<double>(step) * config.dt);
            series.value.push_back(distance(a, b));
        }
    }
    return series;
}

PhaseState default_otoc_center() {
    PhaseState c;
    c.y1 = 0.5 * std::cos(0.65 * M_PI);
    c.y2 = 0.5 * std::sin(0.65 * M_PI);
    return c;
}

OtocSeries classical_otoc(const ModelParams& params, const OtocEnsembleConfig& config,
                          int mode_i, const std::vector<double>& times, int threads) {
    params.validate();
    config.validate();
    if (mode_i != 1 && mode_i != 2) throw ConfigError("mode index must be 1 or 2");
    if (times.empty()) throw ConfigError("OTOC needs at least one sample time");

    // Snap sample times to the step grid; they must be ascending and inside
    // the integration window.
    std::vector<long> sample_steps;
    sample_steps.reserve(times.size());
    for (double t : times) {
        if (t < 0.0 || !std::isfinite(t)) throw ConfigError("OTOC sample times must be finite and nonnegative");
        const long step = std::lround(t / config.dt);
        if (std::abs(t - static_cast<double>(step) * config.dt) > 1e-9 * std::max(1.0, t)) {
            throw ConfigError("OTOC sample times must lie on the integrator grid");
        }
        if (!sample_steps.empty() && step <= sample_steps.back()) {
            throw ConfigError("OTOC sample times must be strictly increasing");
        }
        sample_steps.push_back(step);
    }
    const long total_steps = sample_steps.back();

    const size_t n_times = times.size();
    std::vector<std::vector<double>> per_member(static_cast<size_t>(config.iterations));

    parallel_for_index(config.iterations, threads, [&](int member) {
        GaussianDraw gauss(substream(config.seed, static_cast<std::uint64_t>(member)));
        const double r1 = gauss.next();
        const double r2 = gauss.next();
        const double r3 = gauss.next();
        const double r4 = gauss.next();

        PhaseState base;
        base.x1 = config.center.x1 + config.spread_x * r1;
        base.x2 = config.center.x2 + config.spread_x * r2;
        base.y1 = config.center.y1 + config.spread_y * r3;
        base.y2 = config.center.y2 + config.spread_y * r4;
        PhaseState probe = base;
        probe.x1 += config.probe_offset;

        std::vector<double>& samples = per_member[static_cast<size_t>(member)];
        samples.resize(n_times);
        size_t next_sample = 0;
        auto record = [&](long step) {
            while (next_sample < n_times && sample_steps[next_sample] == step) {
                const double diff = (mode_i == 1) ? (probe.x1 - base.x1) : (probe.x2 - base.x2);
                const double scaled = diff / config.probe_offset;
                samples[next_sample++] = scaled * scaled;
            }
        };
        record(0);
        for (long step = 1; step <= total_steps; ++step) {
            base = step_rk4(base, params, config.dt);
            probe = step_rk4(probe, params, config.dt);
            record(step);
        }
    });

    // Reduce in member order so the result is independent of thread count.
    OtocSeries series;
    series.mode_i = mode_i;
    series.mode_j = 1;
    series.t = times;
    series.value.assign(n_times, 0.0);
    for (const auto& samples : per_member) {
        for (size_t k = 0; k < n_times; ++k) series.value[k] += samples[k];
    }
    for (double& v : series.value) v /= static_cast<double>(config.iterations);
    return series;
}

} // namespace kpo
