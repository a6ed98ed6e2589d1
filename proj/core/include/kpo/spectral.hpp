#pragma once

#include <utility>
#include <vector>

#include "kpo/model.hpp"
#include "kpo/quantum.hpp"

namespace kpo {

struct Eigensystem {
    Eigen::VectorXd energies; // ascending
    ComplexMatrix vectors;    // eigenvectors as columns over the photon-number basis

    int dim() const { return static_cast<int>(energies.size()); }
};

// Full Hermitian eigendecomposition, eigenvalues ascending. The input is
// validated for conjugate symmetry; an all-real matrix takes the real
// symmetric path. Residual and orthonormality are the caller-facing
// contract: ||H v - E v|| <= 1e-8 ||H||, |<v_j|v_k> - delta| <= 1e-10.
Eigensystem eigendecompose(const ComplexMatrix& h);

struct ParitySplit {
    std::vector<int> even; // indices into the ascending spectrum
    std::vector<int> odd;
};

// Classify eigenstates by total photon-number parity. The Hamiltonian
// conserves parity, so each state carries even mass <= 1e-8 or >= 1 - 1e-8;
// mixed states can only arise from numerically degenerate pairs and are
// resolved by rotating each degenerate group onto parity eigenvectors.
// Throws NumericError if a state remains ambiguous after resolution.
ParitySplit parity_split(const Eigensystem& eig, const FockDimension& dim);

// Energy differences E_{k+1} - E_k among the (count+1) lowest energies.
// With smallest_values = true, instead returns the `count` smallest
// consecutive-spacing values of the whole list (alternative reading).
std::vector<double> level_spacings(const Eigen::VectorXd& energies, int count,
                                   bool smallest_values = false);

struct SpacingFit {
    std::vector<double> spacings; // sorted ascending
    double omega = 0.0;
    double amplitude = 0.0; // A
    double beta = 0.0;
    double rss = 0.0;
};

// Least-squares fit of the cumulative spacing count N(d) with
// A (1 - e^{-beta d^{omega+1}}), omega = 0 Poisson, omega = 1 Wigner.
// Derivative-free Nelder-Mead over (log A, log beta, omega), multi-start
// omega in {0, 0.5, 1}. Throws NumericError on degenerate input (all
// spacings equal or zero).
SpacingFit brody_fit(const std::vector<double>& spacings);

struct OtocResult {
    int mode_i = 1;
    int mode_j = 1;
    std::vector<double> t;
    std::vector<double> value;
};

// Quantum OTOC C_{i,j}(t) = -4 <psi0| [x_i(t), y_j(0)]^2 |psi0>, evaluated in
// the eigenbasis: x_i, y_j and psi0 are rotated once, then each time sample
// costs four matrix-vector chains with diagonal phase factors e^{-i E t}.
// The commutator is anti-Hermitian, so the result is real (residue checked
// against 1e-8) and equals 4 ||[x_i(t), y_j(0)] psi0||^2.
OtocResult quantum_otoc(const Eigensystem& eig, const FockDimension& dim, const ComplexVector& psi0,
                        int mode_i, int mode_j, const std::vector<double>& times, int threads = 0);

} // namespace kpo
