// Test-only oracles, kept independent of the implementation paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// Single-KPO invariant h1(x, y) = K/4 (x^2+y^2)^2 - p/2 (x^2-y^2); conserved
// per mode when the coupling vanishes.
inline double single_mode_invariant(double x, double y, double kerr, double pump) {
    const double r = x * x + y * y;
    return 0.25 * kerr * r * r - 0.5 * pump * (x * x - y * y);
}

// Occupied-cell count of an n-by-n grid over [lo, hi]^2.
inline int box_count(const std::vector<std::pair<double, double>>& points, double lo, double hi,
                     int n) {
    std::vector<char> occupied(static_cast<size_t>(n) * n, 0);
    const double scale = n / (hi - lo);
    for (const auto& [x, y] : points) {
        const int i = static_cast<int>((x - lo) * scale);
        const int j = static_cast<int>((y - lo) * scale);
        if (i >= 0 && i < n && j >= 0 && j < n) occupied[static_cast<size_t>(i) * n + j] = 1;
    }
    return static_cast<int>(std::count(occupied.begin(), occupied.end(), 1));
}

// Single-linkage cluster count: points within `radius` of each other merge.
inline int single_linkage_clusters(const std::vector<std::pair<double, double>>& points,
                                   double radius) {
    const size_t n = points.size();
    std::vector<size_t> parent(n);
    std::iota(parent.begin(), parent.end(), size_t{0});
    std::function<size_t(size_t)> find = [&](size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    const double r2 = radius * radius;
    for (size_t a = 0; a < n; ++a) {
        for (size_t b = a + 1; b < n; ++b) {
            const double dx = points[a].first - points[b].first;
            const double dy = points[a].second - points[b].second;
            if (dx * dx + dy * dy <= r2) parent[find(a)] = find(b);
        }
    }
    int clusters = 0;
    for (size_t a = 0; a < n; ++a)
        if (find(a) == a) ++clusters;
    return clusters;
}

// Centroids of the single-linkage clusters at the given radius.
inline std::vector<std::pair<double, double>> cluster_centroids(
    const std::vector<std::pair<double, double>>& points, double radius) {
    const size_t n = points.size();
    std::vector<size_t> parent(n);
    std::iota(parent.begin(), parent.end(), size_t{0});
    std::function<size_t(size_t)> find = [&](size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    const double r2 = radius * radius;
    for (size_t a = 0; a < n; ++a) {
        for (size_t b = a + 1; b < n; ++b) {
            const double dx = points[a].first - points[b].first;
            const double dy = points[a].second - points[b].second;
            if (dx * dx + dy * dy <= r2) parent[find(a)] = find(b);
        }
    }
    std::vector<double> sx(n, 0.0), sy(n, 0.0);
    std::vector<int> count(n, 0);
    for (size_t a = 0; a < n; ++a) {
        const size_t root = find(a);
        sx[root] += points[a].first;
        sy[root] += points[a].second;
        ++count[root];
    }
    std::vector<std::pair<double, double>> centroids;
    for (size_t a = 0; a < n; ++a)
        if (count[a] > 0 && find(a) == a) centroids.emplace_back(sx[a] / count[a], sy[a] / count[a]);
    return centroids;
}

// Composite 16-point Gauss-Legendre quadrature.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                             int panels) {
    static const double nodes[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                    0.9445750230732326, 0.9894009349916499};
    static const double weights[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                      0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                      0.0622535239386479, 0.0271524594117541};
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        const double half = 0.5 * h;
        for (int k = 0; k < 8; ++k) {
            total += weights[k] * half * (f(mid + half * nodes[k]) + f(mid - half * nodes[k]));
        }
    }
    return total;
}

// Displacement matrix element by direct factorial summation in long double;
// adequate for small indices and used as the independent high-precision check.
inline std::complex<double> displacement_element_longdouble(int m, int n,
                                                            std::complex<double> alpha_in) {
    using CLD = std::complex<long double>;
    const CLD alpha(alpha_in.real(), alpha_in.imag());
    const long double a2 = std::norm(alpha);
    auto factorial = [](int k) {
        long double f = 1.0L;
        for (int j = 2; j <= k; ++j) f *= j;
        return f;
    };
    CLD sum = 0.0L;
    for (int k = 0; k <= std::min(m, n); ++k) {
        CLD term = CLD(1.0L / factorial(k));
        CLD ap = 1.0L;
        for (int j = 0; j < m - k; ++j) ap *= alpha;
        CLD an = 1.0L;
        for (int j = 0; j < n - k; ++j) an *= -std::conj(alpha);
        term *= ap / factorial(m - k) * an / factorial(n - k);
        sum += term;
    }
    const CLD value = std::exp(-a2 / 2.0L) * std::sqrt(factorial(m) * factorial(n)) * sum;
    return {static_cast<double>(value.real()), static_cast<double>(value.imag())};
}

// Smallest eigenvalue by inverse power iteration on (H - shift I).
inline double lowest_eigenvalue_inverse_iteration(const Eigen::MatrixXcd& h, double shift,
                                                  int iterations = 200) {
    const int n = static_cast<int>(h.rows());
    const Eigen::MatrixXcd shifted =
        h - shift * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n).normalized();
    for (int it = 0; it < iterations; ++it) {
        v = lu.solve(v);
        v.normalize();
    }
    return (v.adjoint() * h * v)(0).real();
}

} // namespace oracles
