#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kpo/model.hpp"

namespace kpo {

// ---------------------------------------------------------------------------
// State construction in the truncated photon-number basis
// ---------------------------------------------------------------------------

// |0,0>: amplitude 1 on the flat index 0.
ComplexVector vacuum_state(const FockDimension& dim);

// Truncated single-mode coherent state, <n|alpha> = alpha^n / sqrt(n!) e^{-|alpha|^2/2}.
ComplexVector coherent_mode(Complex alpha, int n_max);

// Truncation quality heuristic |alpha|^2 <~ n_max / 2; callers may warn when
// this returns false (the coefficients are still returned as-is).
bool coherent_truncation_adequate(Complex alpha, int n_max);

// Two-mode product state psi_{n1,n2} = a_{n1} b_{n2} under the row-major flattening.
ComplexVector product_state(const ComplexVector& mode1, const ComplexVector& mode2);

// log(n!) via a cached table.
double log_factorial(int n);

// ---------------------------------------------------------------------------
// Displacement operator matrix elements
// ---------------------------------------------------------------------------

// D_{m,n}(alpha) = e^{-|alpha|^2/2} sqrt(m! n!)
//                  sum_k 1/k! alpha^{m-k}/(m-k)! (-alpha*)^{n-k}/(n-k)! .
// The sum is evaluated by a descending-k ratio recurrence so that no
// intermediate exceeds double range at n_max = 30 and small |alpha| does not
// underflow.
Complex displacement_element(int m, int n, Complex alpha);

// All elements for 0 <= m, n <= n_max.
ComplexMatrix displacement_matrix(int n_max, Complex alpha);

// ---------------------------------------------------------------------------
// Quasi-probability functions (pure states)
// ---------------------------------------------------------------------------

// Wigner function
//   W = (2/pi)^2 sum (-1)^{n1+n2} D^(1)_{m1,n1}(2 a1) D^(2)_{m2,n2}(2 a2)
//                     psi_{n1,n2} psi*_{m1,m2},
// contracted as two small matrix products. The exact value is real (the
// displaced-parity kernel is Hermitian); an imaginary residue above 1e-10
// signals numerical inconsistency and throws NumericError.
double wigner(const ComplexVector& psi, const FockDimension& dim, Complex alpha1, Complex alpha2);

// Husimi function Q = |<alpha1|<alpha2|psi>|^2 / pi^2, always >= 0.
double husimi(const ComplexVector& psi, const FockDimension& dim, Complex alpha1, Complex alpha2);

// ---------------------------------------------------------------------------
// Analytic x2 marginals (time-independent matrices)
// ---------------------------------------------------------------------------

// M2[m,n] = integral dx2 of D_{m,n}(2 x2)
//         = sqrt(pi/2 m! n!) sum_k (-1)^{n-k} (m+n-2k-1)!! / (k!(m-k)!(n-k)!)
// for even m+n, else 0. Convention (-1)!! = 1.
Eigen::MatrixXd marginal_x2_wigner_matrix(int n_max);

// N2[m,n] = integral dx2 of <x2|m><n|x2> coherent overlaps
//         = sqrt(pi/(m! n!)) (m+n-1)!! / 2^{(m+n)/2}  for even m+n, else 0.
Eigen::MatrixXd marginal_x2_husimi_matrix(int n_max);

// integral dx2 W(x1, x2, y1, 0) evaluated with the analytic M2 matrix.
double wigner_sos_marginal(const ComplexVector& psi, const FockDimension& dim, double x1, double y1);

// integral dx2 Q(x1, x2, y1, 0) evaluated with the analytic N2 matrix.
double husimi_sos_marginal(const ComplexVector& psi, const FockDimension& dim, double x1, double y1);

// ---------------------------------------------------------------------------
// Hamiltonian application and Schrodinger evolution
// ---------------------------------------------------------------------------

class HamiltonianAction {
public:
    virtual ~HamiltonianAction() = default;
    virtual int dim() const = 0;
    virtual void apply(const ComplexVector& in, ComplexVector& out) const = 0;

    ComplexVector operator()(const ComplexVector& in) const {
        ComplexVector out(dim());
        apply(in, out);
        return out;
    }

    // <psi|H|psi>, real for Hermitian H.
    double expectation(const ComplexVector& psi) const;
};

class DenseHamiltonian final : public HamiltonianAction {
public:
    explicit DenseHamiltonian(ComplexMatrix h);
    int dim() const override { return static_cast<int>(h_.rows()); }
    void apply(const ComplexVector& in, ComplexVector& out) const override;
    const ComplexMatrix& matrix() const { return h_; }

private:
    ComplexMatrix h_;
};

// Matrix-free application of the model Hamiltonian using its band structure
// (diagonal, n +- 2 per mode, one-photon exchange between modes). Agrees with
// the dense matrix to ~1e-12 and is what the evolution path uses.
class MatrixFreeHamiltonian final : public HamiltonianAction {
public:
    MatrixFreeHamiltonian(const ModelParams& params, const FockDimension& dim);
    int dim() const override { return total_dim_; }
    void apply(const ComplexVector& in, ComplexVector& out) const override;

private:
    int n_max_;
    int per_mode_;
    int total_dim_;
    double hbar_coupling_;
    Eigen::VectorXd diagonal_;
    Eigen::VectorXd pump1_coeff_; // -hbar p1/2 sqrt((n+1)(n+2)), index n
    Eigen::VectorXd pump2_coeff_;
    Eigen::VectorXd sqrt_n_;
};

struct EvolutionConfig {
    double dt = 1e-3;
    double t_final = 20.0;
    int stride = 10;   // observer cadence in steps
    double hbar = 1.0;

    void validate() const;
    long step_count() const;
};

using EvolveObserver = std::function<void(double t, const ComplexVector& psi)>;

// Classical RK4 on d psi/dt = -(i/hbar) H psi. The observer fires at steps
// 0, stride, 2*stride, ... strictly before t_final (left endpoints of the
// accumulation grid). No renormalization is applied; if the norm drifts more
// than 1e-3 from 1 the run aborts with NumericError (truncation or step size
// too aggressive).
ComplexVector evolve(const ComplexVector& psi0, const HamiltonianAction& h,
                     const EvolutionConfig& config, const EvolveObserver& observer = {});

// ---------------------------------------------------------------------------
// Time-integrated quasi-probability grids
// ---------------------------------------------------------------------------

struct GridSpec {
    double x_min = -3.0;
    double x_max = 3.0;
    int nx = 81;
    double y_min = -3.0;
    double y_max = 3.0;
    int ny = 81;

    void validate() const;
    double x_at(int i) const { return x_min + (x_max - x_min) * i / (nx - 1); }
    double y_at(int j) const { return y_min + (y_max - y_min) * j / (ny - 1); }
};

struct Grid2D {
    GridSpec spec;
    Eigen::MatrixXd values; // (nx, ny), values(i, j) at (x_at(i), y_at(j))
    std::string diagnostic; // e.g. "wigner_sos"
    double t_final = 0.0;
    double dt = 0.0;
    int stride = 1;
    int n_max = 0;
};

enum class QuasiKind { wigner, husimi };

// Quantum SOS (time integral over [0, T) of the x2 marginal at y2 = 0 on an
// (x1, y1) grid) and quantum MPMP (time integral of W or Q at the potential
// minimum (X1, X2) on a (y1, y2) grid). Left-Riemann accumulation:
// value += f(t) * dt * stride at t = 0, stride*dt, ... < T.
//
// The displacement kernels are time independent and are built once from the
// exact matrix elements: per grid point for the SOS (alpha_1 spans the whole
// 2-D window; memory is nx*ny*(n_max+1)^2 complex values) and per axis value
// for the MPMP (each axis pins one coherent argument). Splitting D(2x+2iy)
// into a product of separately truncated D(2x) D(2iy) factors is avoided:
// such a product loses unitarity once the displaced states pass n_max.
// Grid cells at a fixed time are evaluated by a deterministic parallel map
// (`threads`); the evolution itself is sequential in time.
Grid2D accumulate_quantum_sos(const ModelParams& params, const FockDimension& dim,
                              const EvolutionConfig& config, const GridSpec& grid, QuasiKind kind,
                              const ComplexVector* psi0 = nullptr, int threads = 1);

Grid2D accumulate_quantum_mpmp(const ModelParams& params, const FockDimension& dim,
                               const EvolutionConfig& config, const PotentialMinimum& minimum,
                               const GridSpec& grid, QuasiKind kind,
                               const ComplexVector* psi0 = nullptr, int threads = 1);

// Both kinds from a single evolution pass (grid evaluation dominates cost,
// but the evolution itself is shared).
std::pair<Grid2D, Grid2D> accumulate_quantum_sos_both(const ModelParams& params,
                                                      const FockDimension& dim,
                                                      const EvolutionConfig& config,
                                                      const GridSpec& grid,
                                                      const ComplexVector* psi0 = nullptr,
                                                      int threads = 1);
std::pair<Grid2D, Grid2D> accumulate_quantum_mpmp_both(const ModelParams& params,
                                                       const FockDimension& dim,
                                                       const EvolutionConfig& config,
                                                       const PotentialMinimum& minimum,
                                                       const GridSpec& grid,
                                                       const ComplexVector* psi0 = nullptr,
                                                       int threads = 1);

// ---------------------------------------------------------------------------
// Quadrature operators (used by the OTOC eigenbasis route)
// ---------------------------------------------------------------------------

// x_i = (a_i + a_i^dag)/2 and y_i = (a_i - a_i^dag)/(2i) as dense matrices in
// the photon-number basis; mode is 1 or 2.
ComplexMatrix position_operator(const FockDimension& dim, int mode);
ComplexMatrix momentum_operator(const FockDimension& dim, int mode);

// Total probability on basis states with odd n1 + n2.
double odd_parity_probability(const ComplexVector& psi, const FockDimension& dim);

// <n1 + n2> for truncation diagnostics.
double mean_total_photon(const ComplexVector& psi, const FockDimension& dim);

} // namespace kpo
