#include "kpo/model.hpp"

#include <cmath>
#include <sstream>

namespace kpo {

void ModelParams::validate() const {
    const double fields[] = {hbar, kerr, pump1, pump2, detuning, coupling};
    for (double v : fields) {
        if (!std::isfinite(v)) throw ConfigError("model parameter is not finite");
    }
    if (kerr <= 0.0) throw ConfigError("Kerr coefficient must be positive");
    if (hbar <= 0.0) throw ConfigError("hbar must be positive");
}

void FockDimension::validate() const {
    if (n_max < 2) throw ConfigError("n_max must be at least 2 (pump couples n <-> n+2)");
}

bool PhaseState::finite() const {
    return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(y1) && std::isfinite(y2);
}

ComplexMatrix build_hamiltonian(const ModelParams& params, const FockDimension& dim) {
    params.validate();
    dim.validate();

    const int per_mode = dim.dim_per_mode();
    const int n_max = dim.n_max;
    ComplexMatrix h = ComplexMatrix::Zero(dim.total_dim(), dim.total_dim());

    const double hbar = params.hbar;
    auto at = [&](int n1, int n2) { return flat_index(n1, n2, n_max); };

    for (int n1 = 0; n1 < per_mode; ++n1) {
        for (int n2 = 0; n2 < per_mode; ++n2) {
            const int row = at(n1, n2);

            const double kerr_term =
                0.5 * params.kerr * (static_cast<double>(n1) * (n1 - 1) + static_cast<double>(n2) * (n2 - 1));
            const double detuning_term = params.detuning * (n1 + n2);
            h(row, row) = Complex(hbar * (kerr_term + detuning_term), 0.0);

            // Pump: -p_i/2 (a_i^2 + a_i^dag^2); set both triangle entries
            // from the same value so Hermiticity is exact by construction.
            if (n1 + 2 <= n_max) {
                const double v = -0.5 * hbar * params.pump1 *
                                 std::sqrt(static_cast<double>(n1 + 1) * (n1 + 2));
                h(at(n1 + 2, n2), row) = Complex(v, 0.0);
                h(row, at(n1 + 2, n2)) = Complex(v, 0.0);
            }
            if (n2 + 2 <= n_max) {
                const double v = -0.5 * hbar * params.pump2 *
                                 std::sqrt(static_cast<double>(n2 + 1) * (n2 + 2));
                h(at(n1, n2 + 2), row) = Complex(v, 0.0);
                h(row, at(n1, n2 + 2)) = Complex(v, 0.0);
            }

            // Coupling: -xi0 (a1^dag a2 + a2^dag a1).
            if (n1 + 1 <= n_max && n2 - 1 >= 0) {
                const double v = -hbar * params.coupling *
                                 std::sqrt(static_cast<double>(n1 + 1) * n2);
                h(at(n1 + 1, n2 - 1), row) = Complex(v, 0.0);
                h(row, at(n1 + 1, n2 - 1)) = Complex(v, 0.0);
            }
        }
    }
    return h;
}

double classical_energy(const PhaseState& s, const ModelParams& p) {
    const double r1 = s.x1 * s.x1 + s.y1 * s.y1;
    const double r2 = s.x2 * s.x2 + s.y2 * s.y2;
    double e = 0.25 * p.kerr * r1 * r1 - 0.5 * p.pump1 * (s.x1 * s.x1 - s.y1 * s.y1) + 0.5 * p.detuning * r1;
    e += 0.25 * p.kerr * r2 * r2 - 0.5 * p.pump2 * (s.x2 * s.x2 - s.y2 * s.y2) + 0.5 * p.detuning * r2;
    e -= p.coupling * (s.x1 * s.x2 + s.y1 * s.y2);
    return e;
}

double potential(double x1, double x2, const ModelParams& p) {
    const double v1 = 0.25 * p.kerr * x1 * x1 * x1 * x1 - 0.5 * (p.pump1 - p.detuning) * x1 * x1;
    const double v2 = 0.25 * p.kerr * x2 * x2 * x2 * x2 - 0.5 * (p.pump2 - p.detuning) * x2 * x2;
    return v1 + v2 - p.coupling * x1 * x2;
}

Eigen::Vector2d potential_gradient(double x1, double x2, const ModelParams& p) {
    Eigen::Vector2d g;
    g(0) = p.kerr * x1 * x1 * x1 - (p.pump1 - p.detuning) * x1 - p.coupling * x2;
    g(1) = p.kerr * x2 * x2 * x2 - (p.pump2 - p.detuning) * x2 - p.coupling * x1;
    return g;
}

Eigen::Matrix2d potential_hessian(double x1, double x2, const ModelParams& p) {
    Eigen::Matrix2d h;
    h(0, 0) = 3.0 * p.kerr * x1 * x1 - (p.pump1 - p.detuning);
    h(1, 1) = 3.0 * p.kerr * x2 * x2 - (p.pump2 - p.detuning);
    h(0, 1) = -p.coupling;
    h(1, 0) = -p.coupling;
    return h;
}

PotentialMinimum find_potential_minimum(const ModelParams& params, int sign1, int sign2) {
    params.validate();
    if (sign1 * sign1 != 1 || sign2 * sign2 != 1) throw ConfigError("quadrant signs must be +1 or -1");
    if (params.pump1 <= params.detuning || params.pump2 <= params.detuning)
        throw ConfigError("no potential well: pump must exceed detuning in both modes");

    // The quartic is smooth and the seed sits in the right basin, so plain
    // Newton converges in a handful of steps.
    Eigen::Vector2d x(sign1 * std::sqrt((params.pump1 - params.detuning) / params.kerr),
                      sign2 * std::sqrt((params.pump2 - params.detuning) / params.kerr));

    constexpr int kMaxIterations = 50;
    constexpr double kGradTol = 1e-10;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const Eigen::Vector2d g = potential_gradient(x(0), x(1), params);
        if (g.norm() <= kGradTol) {
            const Eigen::Matrix2d h = potential_hessian(x(0), x(1), params);
            if (h(0, 0) <= 0.0 || h.determinant() <= 0.0) {
                throw NumericError("stationary point is not a minimum (Hessian not positive definite)");
            }
            return PotentialMinimum{x(0), x(1), sign1, sign2};
        }
        const Eigen::Matrix2d h = potential_hessian(x(0), x(1), params);
        x -= h.fullPivLu().solve(g);
        if (!x.allFinite()) throw NumericError("Newton iterate diverged in potential minimum search");
    }

    std::ostringstream msg;
    msg << "potential minimum search did not converge in " << kMaxIterations << " Newton steps";
    throw NumericError(msg.str());
}

} // namespace kpo
