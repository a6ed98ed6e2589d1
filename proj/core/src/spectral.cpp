#include "kpo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kpo/parallel.hpp"

namespace kpo {

Eigensystem eigendecompose(const ComplexMatrix& h) {
    if (h.rows() != h.cols()) throw ConfigError("eigendecompose requires a square matrix");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ConfigError("eigendecompose requires a Hermitian matrix");
    }

    Eigensystem result;
    if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
        // The model Hamiltonian is real symmetric; the real solver is ~4x faster.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.real());
        if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
        result.energies = solver.eigenvalues();
        result.vectors = solver.eigenvectors().cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
        if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
        result.energies = solver.eigenvalues();
        result.vectors = solver.eigenvectors();
    }
    return result;
}

namespace {

Eigen::VectorXd even_mass_per_state(const Eigensystem& eig, const FockDimension& dim) {
    const int per = dim.dim_per_mode();
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(eig.dim());
    for (int k = 0; k < eig.dim(); ++k) {
        double even = 0.0;
        for (int n1 = 0; n1 < per; ++n1)
            for (int n2 = 0; n2 < per; ++n2)
                if ((n1 + n2) % 2 == 0) even += std::norm(eig.vectors(flat_index(n1, n2, dim.n_max), k));
        mass(k) = even;
    }
    return mass;
}

// Rotate a numerically degenerate group of eigenvectors onto eigenvectors of
// the parity operator restricted to the group span.
void rotate_group_onto_parity(Eigensystem& eig, const FockDimension& dim, int first, int last) {
    const int g = last - first + 1;
    const int per = dim.dim_per_mode();
    ComplexMatrix block = eig.vectors.middleCols(first, g);

    ComplexMatrix parity_block = block;
    for (int n1 = 0; n1 < per; ++n1)
        for (int n2 = 0; n2 < per; ++n2)
            if ((n1 + n2) % 2 != 0) parity_block.row(flat_index(n1, n2, dim.n_max)) *= -1.0;

    const ComplexMatrix gram = block.adjoint() * parity_block; // g x g Hermitian, spectrum ~ +-1
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(gram);
    if (solver.info() != Eigen::Success) throw NumericError("parity resolution failed to converge");
    eig.vectors.middleCols(first, g) = block * solver.eigenvectors();
}

} // namespace

ParitySplit parity_split(const Eigensystem& eig, const FockDimension& dim) {
    dim.validate();
    if (eig.dim() != dim.total_dim()) throw ConfigError("eigensystem dimension mismatch");
    constexpr double kMassTol = 1e-8;

    Eigensystem working = eig;
    Eigen::VectorXd mass = even_mass_per_state(working, dim);

    bool any_ambiguous = false;
    for (int k = 0; k < working.dim(); ++k)
        if (mass(k) > kMassTol && mass(k) < 1.0 - kMassTol) any_ambiguous = true;

    if (any_ambiguous) {
        const double gap_tol = 1e-10 * std::max(1.0, working.energies.cwiseAbs().maxCoeff());
        int k = 0;
        while (k < working.dim()) {
            int last = k;
            while (last + 1 < working.dim() &&
                   working.energies(last + 1) - working.energies(last) <= gap_tol) {
                ++last;
            }
            bool group_ambiguous = false;
            for (int j = k; j <= last; ++j)
                if (mass(j) > kMassTol && mass(j) < 1.0 - kMassTol) group_ambiguous = true;
            if (group_ambiguous && last > k) rotate_group_onto_parity(working, dim, k, last);
            k = last + 1;
        }
        mass = even_mass_per_state(working, dim);
    }

    ParitySplit split;
    for (int k = 0; k < working.dim(); ++k) {
        if (mass(k) >= 1.0 - kMassTol) {
            split.even.push_back(k);
        } else if (mass(k) <= kMassTol) {
            split.odd.push_back(k);
        } else {
            std::ostringstream msg;
            msg << "eigenstate " << k << " has ambiguous parity (even mass " << mass(k) << ")";
            throw NumericError(msg.str());
        }
    }
    return split;
}

std::vector<double> level_spacings(const Eigen::VectorXd& energies, int count, bool smallest_values) {
    if (count < 1) throw ConfigError("spacing count must be positive");
    const int n = static_cast<int>(energies.size());
    for (int k = 1; k < n; ++k)
        if (energies(k) < energies(k - 1)) throw ConfigError("energies must be sorted ascending");

    if (!smallest_values) {
        if (count + 1 > n) throw ConfigError("not enough energies for the requested spacing count");
        std::vector<double> spacings(static_cast<size_t>(count));
        for (int k = 0; k < count; ++k) spacings[static_cast<size_t>(k)] = energies(k + 1) - energies(k);
        return spacings;
    }

    if (n < 2 || count > n - 1) throw ConfigError("not enough energies for the requested spacing count");
    std::vector<double> all(static_cast<size_t>(n - 1));
    for (int k = 0; k + 1 < n; ++k) all[static_cast<size_t>(k)] = energies(k + 1) - energies(k);
    std::sort(all.begin(), all.end());
    all.resize(static_cast<size_t>(count));
    return all;
}

namespace {

// Minimal Nelder-Mead simplex search.
struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
};

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& start, double step, int max_iterations) {
    const int n = static_cast<int>(start.size());
    std::vector<Eigen::VectorXd> simplex(static_cast<size_t>(n + 1), start);
    for (int i = 0; i < n; ++i) simplex[static_cast<size_t>(i + 1)](i) += step;
    std::vector<double> values(static_cast<size_t>(n + 1));
    for (size_t i = 0; i < simplex.size(); ++i) values[i] = f(simplex[i]);

    std::vector<size_t> order(simplex.size());
    for (int iter = 0; iter < max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
        const size_t best = order.front(), worst = order.back(), second_worst = order[order.size() - 2];

        if (std::abs(values[worst] - values[best]) <= 1e-12 * (std::abs(values[best]) + 1e-12)) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (size_t i : order)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = f(reflected);
        if (fr < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if (fr < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
            const double fc = f(contracted);
            if (fc < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (size_t i : order) {
                    if (i == best) continue;
                    simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }

    size_t best = 0;
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return SimplexResult{simplex[best], values[best]};
}

} // namespace

SpacingFit brody_fit(const std::vector<double>& spacings) {
    if (spacings.size() < 10) throw ConfigError("Brody fit needs at least 10 spacings");
    for (double s : spacings)
        if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("spacings must be finite and nonnegative");

    std::vector<double> sorted = spacings;
    std::sort(sorted.begin(), sorted.end());
    const double smallest = sorted.front(), largest = sorted.back();
    if (largest <= 0.0 || largest - smallest <= 1e-12 * largest) {
        throw NumericError("Brody fit undefined for degenerate spacings (all equal or zero)");
    }

    // Empirical cumulative count N(d) = #{spacings <= d} at each sorted spacing.
    const size_t n = sorted.size();
    std::vector<double> cumulative(n);
    for (size_t k = 0; k < n; ++k) {
        cumulative[k] = static_cast<double>(
            std::upper_bound(sorted.begin(), sorted.end(), sorted[k]) - sorted.begin());
    }

    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    auto residual = [&](const Eigen::VectorXd& u) {
        const double amplitude = std::exp(u(0));
        const double beta = std::exp(u(1));
        const double omega = u(2);
        if (omega <= -0.999 || omega > 20.0 || std::abs(u(0)) > 50.0 || std::abs(u(1)) > 50.0)
            return 1e30;
        double rss = 0.0;
        for (size_t k = 0; k < n; ++k) {
            const double model = amplitude * (1.0 - std::exp(-beta * std::pow(sorted[k], omega + 1.0)));
            const double r = cumulative[k] - model;
            rss += r * r;
        }
        return rss;
    };

    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (double omega0 : {0.0, 0.5, 1.0}) {
        Eigen::VectorXd start(3);
        start << std::log(static_cast<double>(n)), std::log(1.0 / mean), omega0;
        const SimplexResult r = nelder_mead(residual, start, 0.25, 2000);
        if (r.value < best.value) best = r;
    }
    if (!std::isfinite(best.value)) throw NumericError("Brody fit did not converge");

    SpacingFit fit;
    fit.spacings = std::move(sorted);
    fit.amplitude = std::exp(best.x(0));
    fit.beta = std::exp(best.x(1));
    fit.omega = best.x(2);
    fit.rss = best.value;
    return fit;
}

OtocResult quantum_otoc(const Eigensystem& eig, const FockDimension& dim, const ComplexVector& psi0,
                        int mode_i, int mode_j, const std::vector<double>& times, int threads) {
    dim.validate();
    if (eig.dim() != dim.total_dim()) throw ConfigError("eigensystem dimension mismatch");
    if (psi0.size() != dim.total_dim()) throw ConfigError("state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-6) throw ConfigError("initial state must be normalized");
    if (mode_i != 1 && mode_i != 2) throw ConfigError("mode index i must be 1 or 2");
    if (mode_j != 1 && mode_j != 2) throw ConfigError("mode index j must be 1 or 2");

    // One-time rotation into the eigenbasis.
    const ComplexMatrix x_eig =
        eig.vectors.adjoint() * position_operator(dim, mode_i) * eig.vectors;
    const ComplexMatrix y_eig =
        eig.vectors.adjoint() * momentum_operator(dim, mode_j) * eig.vectors;
    const ComplexVector psi_eig = eig.vectors.adjoint() * psi0;
    const ComplexVector y_psi = y_eig * psi_eig;

    OtocResult result;
    result.mode_i = mode_i;
    result.mode_j = mode_j;
    result.t = times;
    result.value.assign(times.size(), 0.0);

    parallel_for_index(static_cast<int>(times.size()), threads, [&](int idx) {
        const double t = times[static_cast<size_t>(idx)];
        ComplexVector phase(eig.dim());
        for (int k = 0; k < eig.dim(); ++k) phase(k) = std::exp(Complex(0.0, -eig.energies(k) * t));

        // x(t) v = e^{iEt} . (X (e^{-iEt} . v))
        auto apply_xt = [&](const ComplexVector& v) -> ComplexVector {
            ComplexVector w = phase.cwiseProduct(v);
            w = x_eig * w;
            return phase.conjugate().cwiseProduct(w);
        };
        auto apply_commutator = [&](const ComplexVector& v) -> ComplexVector {
            return apply_xt(y_eig * v) - y_eig * apply_xt(v);
        };

        const ComplexVector b_psi = apply_xt(y_psi) - y_eig * apply_xt(psi_eig);
        const ComplexVector bb_psi = apply_commutator(b_psi);
        const Complex c = -4.0 * psi_eig.dot(bb_psi);
        if (std::abs(c.imag()) > 1e-8) {
            std::ostringstream msg;
            msg << "OTOC imaginary residue " << c.imag() << " at t = " << t;
            throw NumericError(msg.str());
        }
        result.value[static_cast<size_t>(idx)] = c.real();
    });
    return result;
}

} // namespace kpo
