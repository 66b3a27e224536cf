#pragma once

// Finite-difference realization of A = -Laplacian with homogeneous Dirichlet
// conditions, its inverse, the dual norm ||w||_*^2 = <w, A^{-1} w>, and the
// discrete harmonic extension of boundary data.
//
// 1D systems (A + D) with D diagonal are tridiagonal and solved directly.
// 2D systems use conjugate gradients preconditioned by (A + cI)^{-1}, applied
// exactly in the sine basis (DST-I through FFTW); with D in [0, 1] the
// preconditioned spectrum lies in a narrow band and CG needs a handful of
// iterations.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fbpsim/errors.hpp"
#include "fbpsim/grid.hpp"

namespace fbpsim {

inline constexpr double kDefaultSolveTol = 1e-10;

/// out = A f, 3-point (1D) or 5-point (2D) stencil scaled by 1/h^2.
inline void apply_A(const Grid& g, std::span<const double> f, std::span<double> out) {
    const int nx = g.n(0);
    const double cx = 1.0 / (g.h(0) * g.h(0));
    if (g.dim() == 1) {
        for (int i = 0; i < nx; ++i) {
            const double left = i > 0 ? f[i - 1] : 0.0;
            const double right = i + 1 < nx ? f[i + 1] : 0.0;
            out[i] = cx * (2.0 * f[i] - left - right);
        }
        return;
    }
    const int ny = g.n(1);
    const double cy = 1.0 / (g.h(1) * g.h(1));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int k = i + nx * j;
            const double w = i > 0 ? f[k - 1] : 0.0;
            const double e = i + 1 < nx ? f[k + 1] : 0.0;
            const double s = j > 0 ? f[k - nx] : 0.0;
            const double n = j + 1 < ny ? f[k + nx] : 0.0;
            out[k] = cx * (2.0 * f[k] - w - e) + cy * (2.0 * f[k] - s - n);
        }
    }
}

inline Field apply_A(const Field& f) {
    Field out(f.grid());
    apply_A(f.grid(), f.values(), out.values());
    return out;
}

/// Eigenvalue of the 1D stencil for sine mode j = 1..n.
inline double dirichlet_eigenvalue(double h, int n, int j) {
    const double s = std::sin(j * std::numbers::pi / (2.0 * (n + 1)));
    return 4.0 / (h * h) * s * s;
}

namespace detail {

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

/// Thomas algorithm for (A + diag(d)) x = b on a 1D grid.
inline void solve_tridiagonal(const Grid& g, std::span<const double> d, std::span<const double> b,
                              std::span<double> x) {
    const int n = g.n(0);
    const double c = 1.0 / (g.h(0) * g.h(0));
    std::vector<double> cp(n), dp(n);
    double diag = 2.0 * c + (d.empty() ? 0.0 : d[0]);
    cp[0] = -c / diag;
    dp[0] = b[0] / diag;
    for (int i = 1; i < n; ++i) {
        diag = 2.0 * c + (d.empty() ? 0.0 : d[i]) + c * cp[i - 1];
        cp[i] = -c / diag;
        dp[i] = (b[i] + c * dp[i - 1]) / diag;
    }
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
}

/// Exact (A + shift I)^{-1} on a 2D grid through the sine transform.
class SpectralSolver {
public:
    explicit SpectralSolver(const Grid& g) : nx_(g.n(0)), ny_(g.n(1)) {
        lx_.resize(nx_);
        ly_.resize(ny_);
        for (int p = 0; p < nx_; ++p) lx_[p] = dirichlet_eigenvalue(g.h(0), nx_, p + 1);
        for (int q = 0; q < ny_; ++q) ly_[q] = dirichlet_eigenvalue(g.h(1), ny_, q + 1);
        scale_ = 1.0 / (4.0 * (nx_ + 1) * (ny_ + 1));
        std::vector<double> in(nx_ * ny_), out(nx_ * ny_);
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_r2r_2d(ny_, nx_, in.data(), out.data(), FFTW_RODFT00, FFTW_RODFT00,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan_ == nullptr) throw SolverBreakdown("FFTW could not plan the sine transform");
    }
    ~SpectralSolver() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    SpectralSolver(const SpectralSolver&) = delete;
    SpectralSolver& operator=(const SpectralSolver&) = delete;

    /// x = (A + shift I)^{-1} b; b and x must not alias.
    void solve(std::span<const double> b, std::span<double> x, double shift) const {
        std::vector<double> tmp(b.begin(), b.end());
        std::vector<double> hat(tmp.size());
        fftw_execute_r2r(plan_, tmp.data(), hat.data());
        for (int q = 0; q < ny_; ++q)
            for (int p = 0; p < nx_; ++p) hat[p + nx_ * q] *= scale_ / (lx_[p] + ly_[q] + shift);
        fftw_execute_r2r(plan_, hat.data(), x.data());
    }

    /// Shared instance per grid shape (plans are created once, executed concurrently).
    static std::shared_ptr<const SpectralSolver> for_grid(const Grid& g) {
        static std::mutex m;
        static std::map<std::pair<std::pair<int, int>, std::pair<double, double>>,
                        std::shared_ptr<const SpectralSolver>>
            cache;
        std::lock_guard lock(m);
        auto key = std::make_pair(std::make_pair(g.n(0), g.n(1)), std::make_pair(g.h(0), g.h(1)));
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        auto s = std::make_shared<const SpectralSolver>(g);
        cache.emplace(key, s);
        return s;
    }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    int nx_, ny_;
    std::vector<double> lx_, ly_;
    double scale_ = 1.0;
    fftw_plan plan_ = nullptr;
};

}  // namespace detail

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
};

/// Solves (A + diag(d)) x = b with d >= 0 (empty d means zero).
/// Succeeds when ||(A + D) x - b||_2 <= tol * (1 + ||b||_2); x holds the initial guess on entry.
inline SolveStats solve_shifted(const Grid& g, std::span<const double> d, std::span<const double> b,
                                std::span<double> x, double tol = kDefaultSolveTol) {
    const int n = g.size();
    std::vector<double> r(n);
    auto residual = [&](std::span<const double> xx, std::span<double> out) {
        apply_A(g, xx, out);
        for (int k = 0; k < n; ++k) out[k] = b[k] - out[k] - (d.empty() ? 0.0 : d[k] * xx[k]);
    };
    const double bnorm = detail::norm2(b);
    const double requested = tol * (1.0 + bnorm);
    // A x cannot be formed more accurately than its cancellation allows
    double stencil = 4.0 / (g.h(0) * g.h(0)) + (g.dim() == 2 ? 4.0 / (g.h(1) * g.h(1)) : 0.0);
    if (!d.empty()) stencil += *std::max_element(d.begin(), d.end());
    auto target_for = [&](std::span<const double> xx) {
        return std::max(requested, 16.0 * std::numeric_limits<double>::epsilon() *
                                       (stencil * detail::norm2(xx) + bnorm));
    };
    double target = target_for(x);

    if (g.dim() == 1) {
        detail::solve_tridiagonal(g, d, b, x);
        residual(x, r);
        return {1, detail::norm2(r)};
    }

    double shift = 0.0;
    if (!d.empty()) {
        for (double v : d) shift += v;
        shift /= n;
    }
    const auto pre = detail::SpectralSolver::for_grid(g);
    std::vector<double> z(n), p(n), q(n);
    residual(x, r);
    double rnorm = detail::norm2(r);
    if (rnorm <= target) return {0, rnorm};
    pre->solve(r, z, shift);
    p = z;
    double rz = detail::dot(r, z);
    const int cap = 10 * n;
    for (int it = 1; it <= cap; ++it) {
        apply_A(g, p, q);
        if (!d.empty())
            for (int k = 0; k < n; ++k) q[k] += d[k] * p[k];
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0)) throw SolverBreakdown("CG lost positive definiteness");
        const double alpha = rz / pq;
        for (int k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        rnorm = detail::norm2(r);
        target = target_for(x);
        if (rnorm <= target) {
            // confirm with the true residual; the recursive one drifts
            residual(x, r);
            rnorm = detail::norm2(r);
            if (rnorm <= target) return {it, rnorm};
        }
        pre->solve(r, z, shift);
        const double rz_new = detail::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    throw SolverBreakdown("CG exceeded " + std::to_string(cap) + " iterations (residual " +
                          std::to_string(rnorm) + ")");
}

/// mu with A mu = rhs.
inline Field solve_A(const Field& rhs, double tol = kDefaultSolveTol) {
    Field x(rhs.grid());
    solve_shifted(rhs.grid(), {}, rhs.values(), x.values(), tol);
    return x;
}

/// ||w||_* = sqrt(<w, A^{-1} w>) with the h-weighted inner product.
inline double dual_norm(const Field& w, double tol = kDefaultSolveTol) {
    return std::sqrt(std::max(0.0, l2_inner(w, solve_A(w, tol))));
}

/// <f, A f> = discrete integral of |grad f|^2 (summation by parts).
inline double grad_energy(const Field& f) { return l2_inner(f, apply_A(f)); }

/// Interior values g with zero stencil residual when the boundary neighbours
/// take the trace values.
inline Field harmonic_extend(const Grid& g, const BoundaryTrace& trace, double tol = kDefaultSolveTol) {
    Field rhs(g);
    const int nx = g.n(0);
    const double cx = 1.0 / (g.h(0) * g.h(0));
    if (g.dim() == 1) {
        if (trace.west.size() != 1 || trace.east.size() != 1)
            throw GridMismatch("1D boundary trace needs one value per end");
        rhs[0] += cx * trace.west[0];
        rhs[nx - 1] += cx * trace.east[0];
    } else {
        const int ny = g.n(1);
        const double cy = 1.0 / (g.h(1) * g.h(1));
        if (static_cast<int>(trace.west.size()) != ny || static_cast<int>(trace.east.size()) != ny ||
            static_cast<int>(trace.south.size()) != nx || static_cast<int>(trace.north.size()) != nx)
            throw GridMismatch("2D boundary trace sizes do not match the grid");
        for (int j = 0; j < ny; ++j) {
            rhs[nx * j] += cx * trace.west[j];
            rhs[nx - 1 + nx * j] += cx * trace.east[j];
        }
        for (int i = 0; i < nx; ++i) {
            rhs[i] += cy * trace.south[i];
            rhs[i + nx * (ny - 1)] += cy * trace.north[i];
        }
    }
    return solve_A(rhs, tol);
}

}  // namespace fbpsim
