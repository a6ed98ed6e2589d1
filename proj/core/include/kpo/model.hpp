#pragma once

#include <Eigen/Dense>
#include <complex>

#include "kpo/errors.hpp"

namespace kpo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Physical constants of the two coupled Kerr-nonlinear parametric
// oscillators. Units: hbar = K = 1 makes energies multiples of hbar*K and
// times multiples of 1/K.
struct ModelParams {
    double hbar = 1.0;
    double kerr = 1.0;                  // K, Kerr coefficient
    double pump1 = 3.0;                 // p1, parametric pump amplitude, KPO 1
    double pump2 = 3.14159265358979324; // p2, pump amplitude, KPO 2
    double detuning = 0.0;              // Delta
    double coupling = 0.0;              // xi0, linear coupling strength

    // K > 0 keeps the quartic wall attractive; all fields must be finite.
    void validate() const;
};

// Truncated two-mode photon-number basis, 0 <= n_i <= n_max per mode.
// Flattening is row-major in (n1, n2): flat = n1 * (n_max + 1) + n2.
struct FockDimension {
    int n_max = 30;

    int dim_per_mode() const { return n_max + 1; }
    int total_dim() const { return (n_max + 1) * (n_max + 1); }

    // n_max >= 2: both pump terms couple n <-> n+2.
    void validate() const;
};

inline int flat_index(int n1, int n2, int n_max) { return n1 * (n_max + 1) + n2; }

// Classical phase-space point; alpha_i = x_i + i*y_i.
struct PhaseState {
    double x1 = 0.0;
    double x2 = 0.0;
    double y1 = 0.0;
    double y2 = 0.0;

    bool finite() const;
};

// Local minimum of the classical potential, tagged by quadrant signs.
struct PotentialMinimum {
    double x1 = 0.0;
    double x2 = 0.0;
    int sign1 = 1;
    int sign2 = 1;
};

// Hamiltonian matrix in the truncated photon-number basis. Diagonal Kerr
// n(n-1)*K/2 and detuning Delta*n per mode, pump -p/2 on (n, n+-2) with
// sqrt((n+1)(n+2)) factors, coupling -xi0 on (n1, n2) <-> (n1-+1, n2+-1).
// Built symmetrically, so entry(m, n) == conj(entry(n, m)) bit-exactly.
// Amplitude that would flow above n_max is dropped (hard truncation).
ComplexMatrix build_hamiltonian(const ModelParams& params, const FockDimension& dim);

// Classical Hamiltonian
//   H_c = sum_i [ K/4 (x_i^2+y_i^2)^2 - p_i/2 (x_i^2-y_i^2)
//                 + Delta/2 (x_i^2+y_i^2) ] - xi0 (x1 x2 + y1 y2).
double classical_energy(const PhaseState& state, const ModelParams& params);

// Potential V_c(x) = sum_i ( K/4 x_i^4 - (p_i - Delta)/2 x_i^2 ) - xi0 x1 x2.
// This equals min_y H_c only when xi0 < min(p1, p2); the polynomial is
// returned regardless.
double potential(double x1, double x2, const ModelParams& params);

// Gradient and Hessian of V_c, used by the Newton minimum search.
Eigen::Vector2d potential_gradient(double x1, double x2, const ModelParams& params);
Eigen::Matrix2d potential_hessian(double x1, double x2, const ModelParams& params);

// Newton refinement from the decoupled seed (sign1*sqrt(p1/K), sign2*sqrt(p2/K))
// down to gradient norm <= 1e-10; the Hessian must be positive definite at the
// result. Throws NumericError if the iteration budget is exhausted.
PotentialMinimum find_potential_minimum(const ModelParams& params, int sign1 = 1, int sign2 = 1);

} // namespace kpo
