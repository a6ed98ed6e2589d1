#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kpo/model.hpp"

namespace kpo {

// Fixed-step classical RK4 over [0, t_final]; t_final/dt must be integral.
struct IntegratorConfig {
    double dt = 1e-4;
    double t_final = 20.0;

    void validate() const;
    // Number of RK4 steps; throws if t_final is not an integer multiple of dt.
    long step_count() const;
};

constexpr const char* kClassicalMethod = "rk4";

// Coordinates beyond this magnitude are energetically impossible for valid
// runs and indicate blow-up; the trajectory aborts with NumericError.
constexpr double kBlowupLimit = 1e3;

// One RK4 step of
//   dx_i/dt =  [K (x_i^2 + y_i^2) + p_i + Delta] y_i - xi0 y_j
//   dy_i/dt = -[K (x_i^2 + y_i^2) - p_i + Delta] x_i + xi0 x_j .
PhaseState step_rk4(const PhaseState& state, const ModelParams& params, double dt);

// Vector field of the equations of motion (exposed for tests / oracles).
PhaseState flow_field(const PhaseState& state, const ModelParams& params);

struct SosPoint {
    double x1 = 0.0;
    double y1 = 0.0;
};

struct SosOptions {
    int iterations = 200;
    // Record at the detection sample by default; linear interpolation to the
    // sign change is available for sharper plots.
    bool interpolate = false;
};

struct SosResult {
    // Crossing points grouped by trajectory, in iteration order.
    std::vector<std::vector<SosPoint>> per_trajectory;

    std::vector<SosPoint> flattened() const;
};

// Surface-of-section sampling: trajectories start at x(0) = 0,
// y_i(0) = 1e-6 * r_i with standard-normal r_i drawn from substream
// (seed, iteration); (x1, y1) is recorded whenever y2(t) * y2(t - dt) < 0.
SosResult sos_crossings(const ModelParams& params, const IntegratorConfig& integ,
                        const SosOptions& options, std::uint64_t seed, int threads = 0);

struct MpmpPoint {
    double y1 = 0.0;
    double y2 = 0.0;
};

struct MpmpOptions {
    int iterations = 1000;
    double tolerance = 1e-3;
    // One record per entry into the tolerance ball (first sample inside);
    // record_every_sample restores one record per in-ball sample.
    bool record_every_sample = false;
};

// Momentum plot at a minimum of potential: same trajectories as the SOS run;
// (y1, y2) is recorded when |x - X| < tolerance.
std::vector<MpmpPoint> mpmp_points(const ModelParams& params, const IntegratorConfig& integ,
                                   const PotentialMinimum& minimum, const MpmpOptions& options,
                                   std::uint64_t seed, int threads = 0);

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> value;
};

// Paired-trajectory sensitivity experiment:
//   x1(0) = x2(0) = x2'(0) = 0,  x1'(0) = deviation,
//   y1(0) = 0.5 cos(0.65 pi),    y2(0) = 0.5 sin(0.65 pi)  (both pairs equal).
struct SensitivityConfig {
    double deviation = 1e-6;
    double dt = 1e-4;
    double t_final = 20.0;
    int output_stride = 100;

    void validate() const;
};

// 4-D Euclidean distance |x(t) - x'(t)| sampled every output_stride steps.
TimeSeries sensitivity_distance(const ModelParams& params, const SensitivityConfig& config);

// Classical OTOC ensemble. Member k draws r1..r4 from substream(seed, k):
//   x1(0) = cx + spread_x r1,      x1'(0) = x1(0) + probe_offset,
//   x2(0) = x2'(0) = cx2 + spread_x r2,
//   y_i(0) = y_i'(0) = cy_i + spread_y r_(2+i).
struct OtocEnsembleConfig {
    double spread_x = 0.5;
    double spread_y = 0.5;
    double probe_offset = 0.5;
    int iterations = 10000;
    std::uint64_t seed = 1;
    PhaseState center;
    double dt = 1e-4;

    void validate() const;
};

struct OtocSeries {
    int mode_i = 1;
    int mode_j = 1;
    std::vector<double> t;
    std::vector<double> value;
};

// Default ensemble center for sensitivity and OTOC runs: x = 0,
// y = (0.5 cos 0.65 pi, 0.5 sin 0.65 pi).
PhaseState default_otoc_center();

// Ensemble mean of ((x_i'(t) - x_i(t)) / probe_offset)^2 at the requested
// times (snapped to the integrator grid). j is fixed to 1 by construction:
// only x1(0) carries the probe offset.
OtocSeries classical_otoc(const ModelParams& params, const OtocEnsembleConfig& config,
                          int mode_i, const std::vector<double>& times, int threads = 0);

} // namespace kpo
