#pragma once

// Reference computations that share no code with the library: dense matrices,
// brute-force minimization, scalar recursions.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Dense 5-point Dirichlet Laplacian (positive), node index i + nx*j.
inline Matrix laplacian(int nx, int ny, double hx, double hy) {
    const int n = nx * ny;
    Matrix A(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int k = i + nx * j;
            A[k][k] += 2.0 / (hx * hx);
            if (i > 0) A[k][k - 1] -= 1.0 / (hx * hx);
            if (i + 1 < nx) A[k][k + 1] -= 1.0 / (hx * hx);
            if (ny > 1) {
                A[k][k] += 2.0 / (hy * hy);
                if (j > 0) A[k][k - nx] -= 1.0 / (hy * hy);
                if (j + 1 < ny) A[k][k + nx] -= 1.0 / (hy * hy);
            }
        }
    return A;
}

inline std::vector<double> matvec(const Matrix& A, const std::vector<double>& x) {
    std::vector<double> y(A.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += A[i][j] * x[j];
    return y;
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        std::swap(A[c], A[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// argmin over a uniform grid of step h on [lo, hi] of f.
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, double h) {
    double best = lo, fbest = std::numeric_limits<double>::infinity();
    const long steps = static_cast<long>(std::ceil((hi - lo) / h));
    for (long i = 0; i <= steps; ++i) {
        const double x = std::min(lo + i * h, hi);
        const double v = f(x);
        if (v < fbest) {
            fbest = v;
            best = x;
        }
    }
    return best;
}

/// Sign-change scan plus bisection for a root of f on [lo, hi].
inline std::vector<double> roots(const std::function<double(double)>& f, double lo, double hi, int samples = 100000) {
    std::vector<double> out;
    double a = lo, fa = f(lo);
    for (int i = 1; i <= samples; ++i) {
        const double b = lo + (hi - lo) * i / samples, fb = f(b);
        if (fa == 0.0) out.push_back(a);
        else if (fa * fb < 0.0) {
            double x0 = a, x1 = b, f0 = fa;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (x0 + x1), fm = f(m);
                if ((fm < 0.0) == (f0 < 0.0)) {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            out.push_back(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    return out;
}

/// Unit (h-weighted) discrete sine mode j on n interior nodes of [0, 1].
inline std::vector<double> sine_mode(int n, int j) {
    const double h = 1.0 / (n + 1);
    std::vector<double> e(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        e[i] = std::sin(j * std::numbers::pi * (i + 1) * h);
        s += h * e[i] * e[i];
    }
    for (double& v : e) v /= std::sqrt(s);
    return e;
}

inline double sine_eigenvalue(int n, int j) {
    const double h = 1.0 / (n + 1);
    const double s = std::sin(j * std::numbers::pi * h / 2.0);
    return 4.0 / (h * h) * s * s;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("fbpsim_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace oracle
