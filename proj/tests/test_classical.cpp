#include <doctest.h>

#include <cmath>

#include "kpo/classical.hpp"
#include "oracles.hpp"

using namespace kpo;

namespace {
ModelParams coupled(double xi) {
    ModelParams p;
    p.coupling = xi;
    return p;
}

PhaseState integrate(PhaseState s, const ModelParams& p, double dt, long steps) {
    for (long k = 0; k < steps; ++k) s = step_rk4(s, p, dt);
    return s;
}
} // namespace

TEST_CASE("fixed points of the flow stay fixed") {
    CHECK(step_rk4(PhaseState{}, coupled(1.0), 1e-4).x1 == 0.0);
    CHECK(step_rk4(PhaseState{}, coupled(1.0), 1e-4).y2 == 0.0);

    const PhaseState minimum{std::sqrt(3.0), 0.0, 0.0, 0.0};
    const PhaseState after = integrate(minimum, coupled(0.0), 1e-4, 100);
    CHECK(std::abs(after.x1 - minimum.x1) <= 1e-13);
    CHECK(std::abs(after.y1) <= 1e-13);
}

TEST_CASE("energy drift is tiny and consistent with a half-step check") {
    const ModelParams p = coupled(1.0);
    const PhaseState start{0.1, 0.1, 0.0, 0.0};
    const double e0 = classical_energy(start, p);

    const PhaseState full = integrate(start, p, 1e-4, 10);
    CHECK(std::abs(classical_energy(full, p) - e0) <= 1e-10);

    const PhaseState half = integrate(start, p, 5e-5, 20);
    CHECK(std::abs(classical_energy(half, p) - classical_energy(full, p)) <= 1e-10);
}

TEST_CASE("energy is conserved along a full-length trajectory") {
    const ModelParams p = coupled(1.0);
    PhaseState s{0.0, 0.0, 0.3, -0.45};
    const double e0 = classical_energy(s, p);
    double worst = 0.0;
    for (int k = 0; k < 200000; ++k) {
        s = step_rk4(s, p, 1e-4);
        if (k % 1000 == 0) worst = std::max(worst, std::abs(classical_energy(s, p) - e0));
    }
    worst = std::max(worst, std::abs(classical_energy(s, p) - e0));
    CHECK(worst <= 1e-8 * std::max(1.0, std::abs(e0)));
}

TEST_CASE("integrator converges at fourth order") {
    const ModelParams p = coupled(1.0);
    const PhaseState start{0.4, -0.3, 0.5, 0.2};
    const double t_span = 0.8;

    auto endpoint = [&](double dt) { return integrate(start, p, dt, std::lround(t_span / dt)); };
    auto distance = [](const PhaseState& a, const PhaseState& b) {
        return std::sqrt((a.x1 - b.x1) * (a.x1 - b.x1) + (a.x2 - b.x2) * (a.x2 - b.x2) +
                         (a.y1 - b.y1) * (a.y1 - b.y1) + (a.y2 - b.y2) * (a.y2 - b.y2));
    };

    const PhaseState reference = endpoint(1e-3 / 8.0);
    const double err_coarse = distance(endpoint(2e-3), reference);
    const double err_fine = distance(endpoint(1e-3), reference);
    const double ratio = err_coarse / err_fine;
    CHECK(ratio >= 8.0);
    CHECK(ratio <= 32.0);
}

TEST_CASE("forward-backward integration returns to the start") {
    const ModelParams p = coupled(0.3);
    const PhaseState start{0.7, 0.1, -0.4, 0.25};
    PhaseState s = integrate(start, p, 1e-4, 20000);
    s = integrate(s, p, -1e-4, 20000);
    CHECK(std::abs(s.x1 - start.x1) <= 1e-6);
    CHECK(std::abs(s.x2 - start.x2) <= 1e-6);
    CHECK(std::abs(s.y1 - start.y1) <= 1e-6);
    CHECK(std::abs(s.y2 - start.y2) <= 1e-6);
}

TEST_CASE("flow commutes with phase-space negation") {
    const ModelParams p = coupled(1.0);
    PhaseState a{0.3, -0.2, 0.15, 0.4};
    PhaseState b{-0.3, 0.2, -0.15, -0.4};
    for (int k = 0; k < 1000; ++k) {
        a = step_rk4(a, p, 1e-4);
        b = step_rk4(b, p, 1e-4);
    }
    CHECK(std::abs(a.x1 + b.x1) <= 1e-14);
    CHECK(std::abs(a.x2 + b.x2) <= 1e-14);
    CHECK(std::abs(a.y1 + b.y1) <= 1e-14);
    CHECK(std::abs(a.y2 + b.y2) <= 1e-14);
}

TEST_CASE("blow-up aborts with a numeric error") {
    // dt far beyond the RK4 stability limit for the quartic term.
    PhaseState s{2.0, 2.0, 1.0, -1.0};
    CHECK_THROWS_AS(integrate(s, coupled(1.0), 0.9, 100), NumericError);
}

TEST_CASE("SOS crossings with zero iterations is empty") {
    const SosResult r = sos_crossings(coupled(1.0), IntegratorConfig{1e-4, 1.0}, SosOptions{0, false}, 1);
    CHECK(r.per_trajectory.empty());
    CHECK(r.flattened().empty());
}

TEST_CASE("decoupled SOS crossings stay on one invariant curve per trajectory") {
    const ModelParams p = coupled(0.0);
    const SosResult r = sos_crossings(p, IntegratorConfig{1e-4, 20.0}, SosOptions{3, false}, 42);
    int total = 0;
    for (const auto& traj : r.per_trajectory) {
        double lo = 1e300, hi = -1e300;
        for (const auto& pt : traj) {
            const double h1 = oracles::single_mode_invariant(pt.x1, pt.y1, p.kerr, p.pump1);
            lo = std::min(lo, h1);
            hi = std::max(hi, h1);
            ++total;
        }
        if (traj.size() >= 2) CHECK(hi - lo <= 1e-3);
    }
    CHECK(total > 0);
}

TEST_CASE("interpolated crossings match detected crossings in count and lie between samples") {
    const ModelParams p = coupled(1.0);
    const IntegratorConfig integ{1e-4, 5.0};
    const SosResult plain = sos_crossings(p, integ, SosOptions{2, false}, 9);
    const SosResult lerp = sos_crossings(p, integ, SosOptions{2, true}, 9);
    REQUIRE(plain.per_trajectory.size() == lerp.per_trajectory.size());
    for (size_t k = 0; k < plain.per_trajectory.size(); ++k) {
        CHECK(plain.per_trajectory[k].size() == lerp.per_trajectory[k].size());
    }
}

TEST_CASE("SOS and MPMP results do not depend on the thread count") {
    const ModelParams p = coupled(1.0);
    const IntegratorConfig integ{1e-4, 2.0};
    const SosResult a = sos_crossings(p, integ, SosOptions{6, false}, 3, 1);
    const SosResult b = sos_crossings(p, integ, SosOptions{6, false}, 3, 4);
    REQUIRE(a.per_trajectory.size() == b.per_trajectory.size());
    for (size_t k = 0; k < a.per_trajectory.size(); ++k) {
        REQUIRE(a.per_trajectory[k].size() == b.per_trajectory[k].size());
        for (size_t j = 0; j < a.per_trajectory[k].size(); ++j) {
            CHECK(a.per_trajectory[k][j].x1 == b.per_trajectory[k][j].x1);
            CHECK(a.per_trajectory[k][j].y1 == b.per_trajectory[k][j].y1);
        }
    }

    const PotentialMinimum minimum = find_potential_minimum(p, 1, 1);
    const auto ma = mpmp_points(p, integ, minimum, MpmpOptions{20, 0.2, false}, 3, 1);
    const auto mb = mpmp_points(p, integ, minimum, MpmpOptions{20, 0.2, false}, 3, 4);
    REQUIRE(ma.size() == mb.size());
    for (size_t k = 0; k < ma.size(); ++k) {
        CHECK(ma[k].y1 == mb[k].y1);
        CHECK(ma[k].y2 == mb[k].y2);
    }
}

TEST_CASE("MPMP tolerance zero records nothing") {
    const ModelParams p = coupled(0.0);
    const PotentialMinimum minimum = find_potential_minimum(p, 1, 1);
    const auto points = mpmp_points(p, IntegratorConfig{1e-4, 1.0}, minimum, MpmpOptions{5, 0.0, false}, 1);
    CHECK(points.empty());
}

TEST_CASE("MPMP ball-entry dedup records at most one point per entry") {
    const ModelParams p = coupled(0.0);
    const PotentialMinimum minimum = find_potential_minimum(p, 1, 1);
    const IntegratorConfig integ{1e-4, 20.0};
    const auto deduped = mpmp_points(p, integ, minimum, MpmpOptions{40, 0.1, false}, 5);
    const auto every = mpmp_points(p, integ, minimum, MpmpOptions{40, 0.1, true}, 5);
    CHECK(every.size() > deduped.size());
    CHECK(!deduped.empty());
}

TEST_CASE("decoupled MPMP points form a handful of clusters") {
    const ModelParams p = coupled(0.0);
    const PotentialMinimum minimum = find_potential_minimum(p, 1, 1);
    const auto points = mpmp_points(p, IntegratorConfig{1e-4, 20.0}, minimum, MpmpOptions{60, 0.05, false}, 5);
    REQUIRE(points.size() >= 2);
    std::vector<std::pair<double, double>> pairs;
    for (const auto& pt : points) pairs.emplace_back(pt.y1, pt.y2);
    CHECK(oracles::single_linkage_clusters(pairs, 0.05) <= 8);
}

TEST_CASE("sensitivity distance starts at the configured deviation") {
    SensitivityConfig cfg;
    cfg.t_final = 0.01;
    cfg.dt = 1e-4;
    const TimeSeries series = sensitivity_distance(coupled(0.3), cfg);
    CHECK(series.t.front() == 0.0);
    CHECK(series.value.front() == 1e-6);
}

TEST_CASE("classical OTOC anchors at t = 0") {
    OtocEnsembleConfig cfg;
    cfg.iterations = 25;
    cfg.seed = 17;
    cfg.center = default_otoc_center();

    const std::vector<double> times{0.0, 0.01};
    const OtocSeries c11 = classical_otoc(coupled(1.0), cfg, 1, times);
    CHECK(c11.value[0] == 1.0);
    const OtocSeries c21 = classical_otoc(coupled(1.0), cfg, 2, times);
    CHECK(c21.value[0] == 0.0);
}

TEST_CASE("decoupled classical OTOC of the unprobed mode is exactly zero") {
    OtocEnsembleConfig cfg;
    cfg.iterations = 10;
    cfg.seed = 23;
    cfg.center = default_otoc_center();
    const std::vector<double> times{0.0, 0.1, 0.5, 1.0};
    const OtocSeries c21 = classical_otoc(coupled(0.0), cfg, 2, times);
    for (double v : c21.value) CHECK(v == 0.0);
}

TEST_CASE("classical OTOC is deterministic across thread counts") {
    OtocEnsembleConfig cfg;
    cfg.iterations = 12;
    cfg.seed = 4;
    cfg.center = default_otoc_center();
    const std::vector<double> times{0.0, 0.05, 0.2};
    const OtocSeries a = classical_otoc(coupled(0.3), cfg, 1, times, 1);
    const OtocSeries b = classical_otoc(coupled(0.3), cfg, 1, times, 3);
    for (size_t k = 0; k < times.size(); ++k) CHECK(a.value[k] == b.value[k]);
}

TEST_CASE("integrator config validation") {
    const IntegratorConfig bad_dt{0.0, 1.0};
    CHECK_THROWS_AS(bad_dt.validate(), ConfigError);
    const IntegratorConfig off_grid{1e-4, 1.00003};
    CHECK_THROWS_AS(off_grid.validate(), ConfigError);
    const IntegratorConfig ok{1e-4, 2.0};
    CHECK(ok.step_count() == 20000);
}
