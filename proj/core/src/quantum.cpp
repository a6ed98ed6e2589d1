#include "kpo/quantum.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "kpo/parallel.hpp"

namespace kpo {

namespace {

using RowMatrixC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PsiMap = Eigen::Map<const RowMatrixC>;

constexpr double kWignerPrefactor = 4.0 / (M_PI * M_PI);  // (2/pi)^2
constexpr double kHusimiPrefactor = 1.0 / (M_PI * M_PI);
constexpr double kImagResidueTol = 1e-10;

// log(n!!) for odd n >= -1, with (-1)!! = 1.
double log_double_factorial_odd(int n) {
    double s = 0.0;
    for (int k = n; k >= 3; k -= 2) s += std::log(static_cast<double>(k));
    return s;
}

} // namespace

ComplexVector vacuum_state(const FockDimension& dim) {
    ComplexVector psi = ComplexVector::Zero(dim.total_dim());
    psi(0) = Complex(1.0, 0.0);
    return psi;
}

ComplexVector coherent_mode(Complex alpha, int n_max) {
    ComplexVector c(n_max + 1);
    c(0) = Complex(std::exp(-0.5 * std::norm(alpha)), 0.0);
    for (int n = 1; n <= n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return c;
}

bool coherent_truncation_adequate(Complex alpha, int n_max) {
    return std::norm(alpha) <= 0.5 * static_cast<double>(n_max);
}

ComplexVector product_state(const ComplexVector& mode1, const ComplexVector& mode2) {
    const int d1 = static_cast<int>(mode1.size());
    const int d2 = static_cast<int>(mode2.size());
    if (d1 != d2) throw ConfigError("product state requires equal per-mode dimensions");
    ComplexVector psi(d1 * d2);
    for (int n1 = 0; n1 < d1; ++n1)
        for (int n2 = 0; n2 < d2; ++n2) psi(n1 * d2 + n2) = mode1(n1) * mode2(n2);
    return psi;
}

double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(513);
        for (size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
        return t;
    }();
    if (n < 0) throw ConfigError("log_factorial of negative argument");
    if (static_cast<size_t>(n) < table.size()) return table[static_cast<size_t>(n)];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

Complex displacement_element(int m, int n, Complex alpha) {
    if (m < 0 || n < 0) throw ConfigError("displacement element indices must be nonnegative");
    const double a2 = std::norm(alpha);
    if (a2 == 0.0) return m == n ? Complex(1.0, 0.0) : Complex(0.0, 0.0);

    // Term at k = min(m, n); only small powers and 1/k! products appear.
    const int k_top = std::min(m, n);
    Complex t(1.0, 0.0);
    for (int j = 1; j <= k_top; ++j) t /= static_cast<double>(j);
    if (m > n) {
        for (int j = 1; j <= m - n; ++j) t *= alpha / static_cast<double>(j);
    } else {
        for (int j = 1; j <= n - m; ++j) t *= -std::conj(alpha) / static_cast<double>(j);
    }

    // Descending ratio recurrence t_k = -t_{k+1} (k+1)|alpha|^2 / ((m-k)(n-k)).
    Complex sum = t;
    for (int k = k_top - 1; k >= 0; --k) {
        t *= -(static_cast<double>(k + 1) * a2) /
             (static_cast<double>(m - k) * static_cast<double>(n - k));
        sum += t;
    }

    const double prefactor = std::exp(0.5 * (log_factorial(m) + log_factorial(n)) - 0.5 * a2);
    return prefactor * sum;
}

ComplexMatrix displacement_matrix(int n_max, Complex alpha) {
    ComplexMatrix d(n_max + 1, n_max + 1);
    for (int m = 0; m <= n_max; ++m)
        for (int n = 0; n <= n_max; ++n) d(m, n) = displacement_element(m, n, alpha);
    return d;
}

namespace {

// D(2 alpha) with the parity (-1)^n folded into its columns.
ComplexMatrix displaced_parity_matrix(int n_max, Complex alpha) {
    ComplexMatrix d = displacement_matrix(n_max, 2.0 * alpha);
    for (int n = 1; n <= n_max; n += 2) d.col(n) = -d.col(n);
    return d;
}

double take_real_checked(Complex value, const char* what) {
    if (std::abs(value.imag()) > kImagResidueTol) {
        std::ostringstream msg;
        msg << what << ": imaginary residue " << value.imag() << " exceeds " << kImagResidueTol;
        throw NumericError(msg.str());
    }
    return value.real();
}

} // namespace

double wigner(const ComplexVector& psi, const FockDimension& dim, Complex alpha1, Complex alpha2) {
    dim.validate();
    const int d = dim.dim_per_mode();
    if (psi.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    PsiMap p(psi.data(), d, d);

    const ComplexMatrix d1s = displaced_parity_matrix(dim.n_max, alpha1);
    const ComplexMatrix d2s = displaced_parity_matrix(dim.n_max, alpha2);

    // Contract with mode 2 first, then mode 1.
    const ComplexMatrix t2 = p * d2s.transpose();
    const ComplexMatrix t12 = d1s * t2;
    const Complex value = (p.conjugate().cwiseProduct(t12)).sum();
    return kWignerPrefactor * take_real_checked(value, "wigner");
}

double husimi(const ComplexVector& psi, const FockDimension& dim, Complex alpha1, Complex alpha2) {
    dim.validate();
    const int d = dim.dim_per_mode();
    if (psi.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    PsiMap p(psi.data(), d, d);

    const ComplexVector c1 = coherent_mode(alpha1, dim.n_max);
    const ComplexVector c2 = coherent_mode(alpha2, dim.n_max);
    const ComplexVector v = p * c2.conjugate();
    const Complex overlap = c1.dot(v); // conjugates c1
    return kHusimiPrefactor * std::norm(overlap);
}

Eigen::MatrixXd marginal_x2_wigner_matrix(int n_max) {
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    const double root_half_pi = std::sqrt(0.5 * M_PI);
    for (int m = 0; m <= n_max; ++m) {
        for (int n = m; n <= n_max; ++n) {
            if ((m + n) % 2 != 0) continue;
            long double sum = 0.0L;
            for (int k = 0; k <= std::min(m, n); ++k) {
                const double lt = log_double_factorial_odd(m + n - 2 * k - 1) - log_factorial(k) -
                                  log_factorial(m - k) - log_factorial(n - k);
                const long double term = std::exp(static_cast<long double>(lt));
                sum += ((n - k) % 2 == 0) ? term : -term;
            }
            const double value = root_half_pi *
                                 std::exp(0.5 * (log_factorial(m) + log_factorial(n))) *
                                 static_cast<double>(sum);
            m2(m, n) = value;
            m2(n, m) = value; // symmetric for even m + n
        }
    }
    return m2;
}

Eigen::MatrixXd marginal_x2_husimi_matrix(int n_max) {
    Eigen::MatrixXd n2 = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    const double log2 = std::log(2.0);
    for (int m = 0; m <= n_max; ++m) {
        for (int n = m; n <= n_max; ++n) {
            if ((m + n) % 2 != 0) continue;
            const double lv = 0.5 * (std::log(M_PI) - log_factorial(m) - log_factorial(n)) +
                              log_double_factorial_odd(m + n - 1) - 0.5 * (m + n) * log2;
            n2(m, n) = std::exp(lv);
            n2(n, m) = n2(m, n);
        }
    }
    return n2;
}

double wigner_sos_marginal(const ComplexVector& psi, const FockDimension& dim, double x1, double y1) {
    dim.validate();
    const int d = dim.dim_per_mode();
    if (psi.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    PsiMap p(psi.data(), d, d);

    // W2[m2,n2] = (-1)^{n2} M2[m2,n2]; value = (2/pi)^2 tr(D1S * Psi W2^T Psi^dag).
    Eigen::MatrixXd w2 = marginal_x2_wigner_matrix(dim.n_max);
    for (int n = 1; n <= dim.n_max; n += 2) w2.col(n) = -w2.col(n);
    const ComplexMatrix a = p * w2.transpose().cast<Complex>() * p.adjoint();
    const ComplexMatrix d1s = displaced_parity_matrix(dim.n_max, Complex(x1, y1));
    const Complex value = (d1s.transpose().cwiseProduct(a)).sum();
    return kWignerPrefactor * take_real_checked(value, "wigner_sos_marginal");
}

double husimi_sos_marginal(const ComplexVector& psi, const FockDimension& dim, double x1, double y1) {
    dim.validate();
    const int d = dim.dim_per_mode();
    if (psi.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    PsiMap p(psi.data(), d, d);

    const Eigen::MatrixXd n2 = marginal_x2_husimi_matrix(dim.n_max);
    const ComplexMatrix a = p * n2.transpose().cast<Complex>() * p.adjoint();
    const ComplexVector c = coherent_mode(Complex(x1, y1), dim.n_max);
    const Complex value = c.dot(a * c);
    return kHusimiPrefactor * take_real_checked(value, "husimi_sos_marginal");
}

// ---------------------------------------------------------------------------
// Hamiltonian application
// ---------------------------------------------------------------------------

double HamiltonianAction::expectation(const ComplexVector& psi) const {
    ComplexVector hpsi(dim());
    apply(psi, hpsi);
    return psi.dot(hpsi).real();
}

DenseHamiltonian::DenseHamiltonian(ComplexMatrix h) : h_(std::move(h)) {
    if (h_.rows() != h_.cols()) throw ConfigError("Hamiltonian matrix must be square");
}

void DenseHamiltonian::apply(const ComplexVector& in, ComplexVector& out) const {
    out.noalias() = h_ * in;
}

MatrixFreeHamiltonian::MatrixFreeHamiltonian(const ModelParams& params, const FockDimension& dim) {
    params.validate();
    dim.validate();
    n_max_ = dim.n_max;
    per_mode_ = dim.dim_per_mode();
    total_dim_ = dim.total_dim();
    hbar_coupling_ = params.hbar * params.coupling;

    diagonal_.resize(total_dim_);
    for (int n1 = 0; n1 < per_mode_; ++n1) {
        for (int n2 = 0; n2 < per_mode_; ++n2) {
            const double kerr = 0.5 * params.kerr *
                                (static_cast<double>(n1) * (n1 - 1) + static_cast<double>(n2) * (n2 - 1));
            diagonal_(flat_index(n1, n2, n_max_)) =
                params.hbar * (kerr + params.detuning * (n1 + n2));
        }
    }

    pump1_coeff_.resize(std::max(per_mode_ - 2, 0));
    pump2_coeff_.resize(std::max(per_mode_ - 2, 0));
    for (int n = 0; n + 2 <= n_max_; ++n) {
        const double s = std::sqrt(static_cast<double>(n + 1) * (n + 2));
        pump1_coeff_(n) = -0.5 * params.hbar * params.pump1 * s;
        pump2_coeff_(n) = -0.5 * params.hbar * params.pump2 * s;
    }

    sqrt_n_.resize(per_mode_ + 1);
    for (int n = 0; n <= per_mode_; ++n) sqrt_n_(n) = std::sqrt(static_cast<double>(n));
}

void MatrixFreeHamiltonian::apply(const ComplexVector& in, ComplexVector& out) const {
    if (in.size() != total_dim_) throw ConfigError("state dimension mismatch");
    const Complex* src = in.data();
    Complex* dst = out.data();
    const int per = per_mode_;

    for (int i = 0; i < total_dim_; ++i) dst[i] = diagonal_(i) * src[i];

    for (int n1 = 0; n1 + 2 <= n_max_; ++n1) {
        const double c = pump1_coeff_(n1);
        const int lo = n1 * per;
        const int hi = (n1 + 2) * per;
        for (int n2 = 0; n2 < per; ++n2) {
            dst[hi + n2] += c * src[lo + n2];
            dst[lo + n2] += c * src[hi + n2];
        }
    }

    for (int n1 = 0; n1 < per; ++n1) {
        const int base = n1 * per;
        for (int n2 = 0; n2 + 2 <= n_max_; ++n2) {
            const double c = pump2_coeff_(n2);
            dst[base + n2 + 2] += c * src[base + n2];
            dst[base + n2] += c * src[base + n2 + 2];
        }
    }

    if (hbar_coupling_ != 0.0) {
        for (int n1 = 0; n1 + 1 <= n_max_; ++n1) {
            const int lo = n1 * per;
            const int hi = (n1 + 1) * per;
            for (int n2 = 1; n2 < per; ++n2) {
                const double v = -hbar_coupling_ * sqrt_n_(n1 + 1) * sqrt_n_(n2);
                dst[hi + n2 - 1] += v * src[lo + n2];
                dst[lo + n2] += v * src[hi + n2 - 1];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

void EvolutionConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("evolution dt must be positive");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("evolution t_final must be nonnegative");
    if (stride < 1) throw ConfigError("evolution stride must be >= 1");
    if (!(hbar > 0.0)) throw ConfigError("hbar must be positive");
    step_count();
}

long EvolutionConfig::step_count() const {
    const double ratio = t_final / dt;
    const long steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio)) {
        throw ConfigError("evolution t_final must be an integer multiple of dt");
    }
    return steps;
}

ComplexVector evolve(const ComplexVector& psi0, const HamiltonianAction& h,
                     const EvolutionConfig& config, const EvolveObserver& observer) {
    config.validate();
    if (psi0.size() != h.dim()) throw ConfigError("state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-6) throw ConfigError("initial state must be normalized");

    const long steps = config.step_count();
    const Complex minus_i_over_hbar(0.0, -1.0 / config.hbar);
    const double dt = config.dt;

    ComplexVector psi = psi0;
    ComplexVector k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size()), stage(psi.size());

    auto check_norm = [&](long step) {
        const double drift = std::abs(psi.norm() - 1.0);
        if (drift > 1e-3) {
            std::ostringstream msg;
            msg << "norm drift " << drift << " at t = " << static_cast<double>(step) * dt
                << "; increase n_max or decrease dt";
            throw NumericError(msg.str());
        }
    };

    for (long step = 0; step < steps; ++step) {
        if (step % config.stride == 0) {
            check_norm(step);
            if (observer) observer(static_cast<double>(step) * dt, psi);
        }
        h.apply(psi, k1);
        k1 *= minus_i_over_hbar;
        stage = psi + (0.5 * dt) * k1;
        h.apply(stage, k2);
        k2 *= minus_i_over_hbar;
        stage = psi + (0.5 * dt) * k2;
        h.apply(stage, k3);
        k3 *= minus_i_over_hbar;
        stage = psi + dt * k3;
        h.apply(stage, k4);
        k4 *= minus_i_over_hbar;
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    check_norm(steps);
    return psi;
}

// ---------------------------------------------------------------------------
// Grid accumulation
// ---------------------------------------------------------------------------

void GridSpec::validate() const {
    if (nx < 2 || ny < 2) throw ConfigError("grid needs at least 2 points per axis");
    if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("grid extents must be increasing");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max))
        throw ConfigError("grid extents must be finite");
}

namespace {

// Grid evaluations at a fixed time are independent across cells; rows of the
// grid (fixed first-axis index) are distributed over threads, each row
// writing only its own cells, so results match the single-thread run exactly.
class QuasiAccumulator {
public:
    virtual ~QuasiAccumulator() = default;
    virtual void accumulate(const PsiMap& psi, double weight) = 0;
    Grid2D& grid() { return grid_; }

protected:
    Grid2D grid_;
    int threads_ = 1;

    void init_grid(const GridSpec& spec, const char* diagnostic, const EvolutionConfig& config,
                   int n_max, int threads) {
        spec.validate();
        grid_.spec = spec;
        grid_.values = Eigen::MatrixXd::Zero(spec.nx, spec.ny);
        grid_.diagnostic = diagnostic;
        grid_.t_final = config.t_final;
        grid_.dt = config.dt;
        grid_.stride = config.stride;
        grid_.n_max = n_max;
        threads_ = threads;
    }
};

// Quantum SOS, Wigner kind. The grid kernels tr(D(2 alpha) S . ) are time
// independent, so each grid point's displaced-parity matrix is built once
// from the exact matrix elements and flattened into one row of a dense
// kernel-by-state matrix; every time sample is then a single GEMV against
// vec(A(t)). A product of separately truncated D(2x) D(2iy) factors is NOT
// used: it loses unitarity once the displaced states pass n_max, which is
// already severe at |2 alpha| ~ 6. Cache size is nx*ny*(n_max+1)^2 complex
// values (about 100 MB at the 81x81, n_max = 30 defaults).
class WignerSosAccumulator final : public QuasiAccumulator {
public:
    WignerSosAccumulator(const FockDimension& dim, const GridSpec& spec,
                         const EvolutionConfig& config, int threads) {
        init_grid(spec, "wigner_sos", config, dim.n_max, threads);
        const int d = dim.dim_per_mode();
        const long points = static_cast<long>(spec.nx) * spec.ny;
        const long bytes = points * d * d * static_cast<long>(sizeof(Complex));
        if (bytes > (4L << 30)) {
            throw ConfigError("Wigner SOS kernel cache would exceed 4 GiB; reduce grid or n_max");
        }

        Eigen::MatrixXd w2 = marginal_x2_wigner_matrix(dim.n_max);
        for (int n = 1; n <= dim.n_max; n += 2) w2.col(n) = -w2.col(n);
        w2t_ = w2.transpose().cast<Complex>();

        // Row g holds vec(D1S^T) so that value_g = kernel_row . vec(A).
        kernels_.resize(points, d * d);
        for (int i = 0; i < spec.nx; ++i) {
            for (int j = 0; j < spec.ny; ++j) {
                const ComplexMatrix d1s =
                    displaced_parity_matrix(dim.n_max, Complex(spec.x_at(i), spec.y_at(j)));
                const ComplexMatrix d1s_t = d1s.transpose();
                kernels_.row(i * spec.ny + j) =
                    Eigen::Map<const ComplexVector>(d1s_t.data(), d * d).transpose();
            }
        }
    }

    void accumulate(const PsiMap& psi, double weight) override {
        const ComplexMatrix a = psi * w2t_ * psi.adjoint();
        const Eigen::Map<const ComplexVector> a_vec(a.data(), a.size());
        const int ny = grid_.spec.ny;
        parallel_for_index(grid_.spec.nx, threads_, [&](int i) {
            const ComplexVector row = kernels_.middleRows(i * ny, ny) * a_vec;
            for (int j = 0; j < ny; ++j) {
                grid_.values(i, j) +=
                    weight * kWignerPrefactor * take_real_checked(row(j), "wigner_sos accumulation");
            }
        });
    }

private:
    ComplexMatrix w2t_;
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> kernels_;
};

class HusimiSosAccumulator final : public QuasiAccumulator {
public:
    HusimiSosAccumulator(const FockDimension& dim, const GridSpec& spec,
                         const EvolutionConfig& config, int threads) {
        init_grid(spec, "husimi_sos", config, dim.n_max, threads);
        const int d = dim.dim_per_mode();
        n2t_ = marginal_x2_husimi_matrix(dim.n_max).transpose().cast<Complex>();
        coherent_.resize(d, spec.nx * spec.ny);
        for (int i = 0; i < spec.nx; ++i)
            for (int j = 0; j < spec.ny; ++j)
                coherent_.col(i * spec.ny + j) =
                    coherent_mode(Complex(spec.x_at(i), spec.y_at(j)), dim.n_max);
    }

    void accumulate(const PsiMap& psi, double weight) override {
        const ComplexMatrix a = psi * n2t_ * psi.adjoint();
        const int ny = grid_.spec.ny;
        parallel_for_index(grid_.spec.nx, threads_, [&](int i) {
            const ComplexMatrix t = a * coherent_.middleCols(i * ny, ny);
            for (int j = 0; j < ny; ++j) {
                const Complex v = coherent_.col(i * ny + j).dot(t.col(j));
                grid_.values(i, j) +=
                    weight * kHusimiPrefactor * take_real_checked(v, "husimi_sos accumulation");
            }
        });
    }

private:
    ComplexMatrix n2t_;
    ComplexMatrix coherent_;
};

// Quantum MPMP, Wigner kind. alpha_1 = X1 + i y1 depends only on the grid's
// first axis and alpha_2 = X2 + i y2 only on the second, so one exact
// displaced-parity matrix per axis value suffices (no product factorization).
class WignerMpmpAccumulator final : public QuasiAccumulator {
public:
    WignerMpmpAccumulator(const FockDimension& dim, const PotentialMinimum& minimum,
                          const GridSpec& spec, const EvolutionConfig& config, int threads) {
        init_grid(spec, "wigner_mpmp", config, dim.n_max, threads);
        d1s_.reserve(spec.nx);
        for (int i = 0; i < spec.nx; ++i)
            d1s_.push_back(displaced_parity_matrix(dim.n_max, Complex(minimum.x1, spec.x_at(i))));
        d2s_.reserve(spec.ny);
        for (int j = 0; j < spec.ny; ++j)
            d2s_.push_back(displaced_parity_matrix(dim.n_max, Complex(minimum.x2, spec.y_at(j))));
    }

    // value(i,j) = (2/pi)^2 sum_{m2,n2} D2S_j[m2,n2] (Psi^dag D1S_i Psi)[m2,n2]
    void accumulate(const PsiMap& psi, double weight) override {
        parallel_for_index(grid_.spec.nx, threads_, [&](int i) {
            const ComplexMatrix w = d1s_[static_cast<size_t>(i)] * psi;
            const ComplexMatrix v = psi.adjoint() * w;
            for (int j = 0; j < grid_.spec.ny; ++j) {
                const Complex value = (d2s_[static_cast<size_t>(j)].cwiseProduct(v)).sum();
                grid_.values(i, j) +=
                    weight * kWignerPrefactor * take_real_checked(value, "wigner_mpmp accumulation");
            }
        });
    }

private:
    std::vector<ComplexMatrix> d1s_, d2s_;
};

class HusimiMpmpAccumulator final : public QuasiAccumulator {
public:
    HusimiMpmpAccumulator(const FockDimension& dim, const PotentialMinimum& minimum,
                          const GridSpec& spec, const EvolutionConfig& config, int threads) {
        init_grid(spec, "husimi_mpmp", config, dim.n_max, threads);
        const int d = dim.dim_per_mode();
        c1_.resize(d, spec.nx);
        for (int i = 0; i < spec.nx; ++i)
            c1_.col(i) = coherent_mode(Complex(minimum.x1, spec.x_at(i)), dim.n_max);
        c2_conj_.resize(d, spec.ny);
        for (int j = 0; j < spec.ny; ++j)
            c2_conj_.col(j) = coherent_mode(Complex(minimum.x2, spec.y_at(j)), dim.n_max).conjugate();
    }

    void accumulate(const PsiMap& psi, double weight) override {
        const ComplexMatrix v = psi * c2_conj_;
        parallel_for_index(grid_.spec.nx, threads_, [&](int i) {
            const Eigen::RowVectorXcd overlaps = c1_.col(i).adjoint() * v;
            grid_.values.row(i) += (weight * kHusimiPrefactor) * overlaps.cwiseAbs2();
        });
    }

private:
    ComplexMatrix c1_, c2_conj_;
};

std::vector<Grid2D> run_accumulation(const ModelParams& params, const FockDimension& dim,
                                     const EvolutionConfig& config,
                                     std::vector<std::unique_ptr<QuasiAccumulator>> accumulators,
                                     const ComplexVector* psi0) {
    const ComplexVector initial = psi0 ? *psi0 : vacuum_state(dim);
    const MatrixFreeHamiltonian h(params, dim);
    const int d = dim.dim_per_mode();
    const double dt_effective = config.dt * config.stride;

    evolve(initial, h, config, [&](double, const ComplexVector& psi) {
        PsiMap map(psi.data(), d, d);
        for (auto& acc : accumulators) acc->accumulate(map, dt_effective);
    });

    std::vector<Grid2D> grids;
    grids.reserve(accumulators.size());
    for (auto& acc : accumulators) grids.push_back(std::move(acc->grid()));
    return grids;
}

std::unique_ptr<QuasiAccumulator> make_sos_accumulator(QuasiKind kind, const FockDimension& dim,
                                                       const GridSpec& spec,
                                                       const EvolutionConfig& config, int threads) {
    if (kind == QuasiKind::wigner)
        return std::make_unique<WignerSosAccumulator>(dim, spec, config, threads);
    return std::make_unique<HusimiSosAccumulator>(dim, spec, config, threads);
}

std::unique_ptr<QuasiAccumulator> make_mpmp_accumulator(QuasiKind kind, const FockDimension& dim,
                                                        const PotentialMinimum& minimum,
                                                        const GridSpec& spec,
                                                        const EvolutionConfig& config, int threads) {
    if (kind == QuasiKind::wigner)
        return std::make_unique<WignerMpmpAccumulator>(dim, minimum, spec, config, threads);
    return std::make_unique<HusimiMpmpAccumulator>(dim, minimum, spec, config, threads);
}

} // namespace

Grid2D accumulate_quantum_sos(const ModelParams& params, const FockDimension& dim,
                              const EvolutionConfig& config, const GridSpec& grid, QuasiKind kind,
                              const ComplexVector* psi0, int threads) {
    std::vector<std::unique_ptr<QuasiAccumulator>> accs;
    accs.push_back(make_sos_accumulator(kind, dim, grid, config, threads));
    return std::move(run_accumulation(params, dim, config, std::move(accs), psi0)[0]);
}

Grid2D accumulate_quantum_mpmp(const ModelParams& params, const FockDimension& dim,
                               const EvolutionConfig& config, const PotentialMinimum& minimum,
                               const GridSpec& grid, QuasiKind kind, const ComplexVector* psi0,
                               int threads) {
    std::vector<std::unique_ptr<QuasiAccumulator>> accs;
    accs.push_back(make_mpmp_accumulator(kind, dim, minimum, grid, config, threads));
    return std::move(run_accumulation(params, dim, config, std::move(accs), psi0)[0]);
}

std::pair<Grid2D, Grid2D> accumulate_quantum_sos_both(const ModelParams& params,
                                                      const FockDimension& dim,
                                                      const EvolutionConfig& config,
                                                      const GridSpec& grid,
                                                      const ComplexVector* psi0, int threads) {
    std::vector<std::unique_ptr<QuasiAccumulator>> accs;
    accs.push_back(make_sos_accumulator(QuasiKind::wigner, dim, grid, config, threads));
    accs.push_back(make_sos_accumulator(QuasiKind::husimi, dim, grid, config, threads));
    auto grids = run_accumulation(params, dim, config, std::move(accs), psi0);
    return {std::move(grids[0]), std::move(grids[1])};
}

std::pair<Grid2D, Grid2D> accumulate_quantum_mpmp_both(const ModelParams& params,
                                                       const FockDimension& dim,
                                                       const EvolutionConfig& config,
                                                       const PotentialMinimum& minimum,
                                                       const GridSpec& grid,
                                                       const ComplexVector* psi0, int threads) {
    std::vector<std::unique_ptr<QuasiAccumulator>> accs;
    accs.push_back(make_mpmp_accumulator(QuasiKind::wigner, dim, minimum, grid, config, threads));
    accs.push_back(make_mpmp_accumulator(QuasiKind::husimi, dim, minimum, grid, config, threads));
    auto grids = run_accumulation(params, dim, config, std::move(accs), psi0);
    return {std::move(grids[0]), std::move(grids[1])};
}

// ---------------------------------------------------------------------------
// Quadrature operators and parity diagnostics
// ---------------------------------------------------------------------------

namespace {

ComplexMatrix mode_ladder_combination(const FockDimension& dim, int mode, Complex lower_coeff,
                                      Complex raise_coeff) {
    dim.validate();
    if (mode != 1 && mode != 2) throw ConfigError("mode index must be 1 or 2");
    const int per = dim.dim_per_mode();
    ComplexMatrix op = ComplexMatrix::Zero(dim.total_dim(), dim.total_dim());
    for (int n1 = 0; n1 < per; ++n1) {
        for (int n2 = 0; n2 < per; ++n2) {
            const int col = flat_index(n1, n2, dim.n_max);
            const int n = (mode == 1) ? n1 : n2;
            if (n >= 1) {
                const int row = (mode == 1) ? flat_index(n1 - 1, n2, dim.n_max)
                                            : flat_index(n1, n2 - 1, dim.n_max);
                op(row, col) += lower_coeff * std::sqrt(static_cast<double>(n));
            }
            if (n + 1 < per) {
                const int row = (mode == 1) ? flat_index(n1 + 1, n2, dim.n_max)
                                            : flat_index(n1, n2 + 1, dim.n_max);
                op(row, col) += raise_coeff * std::sqrt(static_cast<double>(n + 1));
            }
        }
    }
    return op;
}

} // namespace

ComplexMatrix position_operator(const FockDimension& dim, int mode) {
    return mode_ladder_combination(dim, mode, Complex(0.5, 0.0), Complex(0.5, 0.0));
}

ComplexMatrix momentum_operator(const FockDimension& dim, int mode) {
    return mode_ladder_combination(dim, mode, Complex(0.0, -0.5), Complex(0.0, 0.5));
}

double odd_parity_probability(const ComplexVector& psi, const FockDimension& dim) {
    const int per = dim.dim_per_mode();
    if (psi.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    double p = 0.0;
    for (int n1 = 0; n1 < per; ++n1)
        for (int n2 = 0; n2 < per; ++n2)
            if ((n1 + n2) % 2 != 0) p += std::norm(psi(flat_index(n1, n2, dim.n_max)));
    return p;
}

double mean_total_photon(const ComplexVector& psi, const FockDimension& dim) {
    const int per = dim.dim_per_mode();
    if (psi.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    double mean = 0.0;
    for (int n1 = 0; n1 < per; ++n1)
        for (int n2 = 0; n2 < per; ++n2)
            mean += (n1 + n2) * std::norm(psi(flat_index(n1, n2, dim.n_max)));
    return mean;
}

} // namespace kpo
