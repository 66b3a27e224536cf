#pragma once

// The per-instant nonlinear problem: find mu with
//
//     A mu + R(mu - g) = 0,     R = (I + beta)^{-1} applied nodewise,
//
// where g = mu_flat + psi_*'(v) collects the frozen data. A is strongly
// monotone and R is monotone and 1-Lipschitz, so the solution is unique.
// R is piecewise affine with slopes in {0, 1}; semismooth Newton with the
// diagonal generalized Jacobian A + D is exact once the active pieces settle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "fbpsim/errors.hpp"
#include "fbpsim/graphs.hpp"
#include "fbpsim/grid.hpp"
#include "fbpsim/laplacian.hpp"
#include "fbpsim/potentials.hpp"

namespace fbpsim {

struct EllipticProblem {
    Grid grid;
    MonotoneGraph graph;
    Field g;
    double tol = 1e-9;
    int max_outer = 200;
};

struct ChemicalPotential {
    Field mu;
    Field w;  ///< R(mu - g), the rate of change of the concentration
    int iterations = 0;
    double residual = 0.0;
    bool used_fallback = false;
};

namespace detail {

inline double elliptic_residual(const EllipticProblem& p, std::span<const double> mu,
                                std::span<double> out) {
    apply_A(p.grid, mu, out);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += resolvent(p.graph, 1.0, mu[k] - p.g[k]);
    return norm2(out);
}

}  // namespace detail

/// Semismooth Newton with step halving; after max_outer/2 failed Newton steps
/// it switches to the damped fixed point mu <- mu - 0.5 A^{-1} F(mu).
inline ChemicalPotential solve_chemical_potential(const EllipticProblem& p,
                                                  const std::optional<Field>& initial_guess = std::nullopt) {
    const Grid& grid = p.grid;
    if (!(p.g.grid() == grid)) throw GridMismatch("datum g is not on the problem grid");
    for (double v : p.g.values())
        if (!std::isfinite(v)) throw DomainError("datum g is not finite");
    const int n = grid.size();

    Field mu = initial_guess.value_or(Field(grid));
    mu.check(p.g);
    std::vector<double> F(n), trial(n), Ftrial(n), delta(n), diag(n), rhs(n);

    const double gnorm = detail::norm2(p.g.values());
    const double requested = p.tol * (1.0 + gnorm);
    const double inner_tol = std::min(1e-12, 1e-2 * p.tol);
    // F cannot be evaluated more accurately than the cancellation in A mu allows.
    const double stencil = 4.0 / (grid.h(0) * grid.h(0)) + (grid.dim() == 2 ? 4.0 / (grid.h(1) * grid.h(1)) : 0.0);
    auto target = [&] {
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                             (stencil * detail::norm2(mu.values()) + gnorm);
        return std::max(requested, floor);
    };
    double fnorm = detail::elliptic_residual(p, mu.values(), F);

    int iterations = 0;
    int failed = 0;
    bool fallback = false;
    while (fnorm > target()) {
        if (iterations >= p.max_outer)
            throw NonConvergence("chemical-potential solve did not converge after " +
                                     std::to_string(iterations) + " iterations (residual " +
                                     std::to_string(fnorm) + ")",
                                 iterations, fnorm);
        ++iterations;

        if (failed < p.max_outer / 2) {
            for (int k = 0; k < n; ++k) {
                diag[k] = resolvent_slope(p.graph, 1.0, mu[k] - p.g[k]);
                rhs[k] = -F[k];
                delta[k] = 0.0;
            }
            solve_shifted(grid, diag, rhs, delta, inner_tol);
            bool accepted = false;
            double t = 1.0;
            for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
                for (int k = 0; k < n; ++k) trial[k] = mu[k] + t * delta[k];
                const double tn = detail::elliptic_residual(p, trial, Ftrial);
                if (tn < fnorm) {
                    std::copy(trial.begin(), trial.end(), mu.values().begin());
                    F.swap(Ftrial);
                    fnorm = tn;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) ++failed;
        } else {
            fallback = true;
            Field Ff(grid, F);
            const Field correction = solve_A(Ff, inner_tol);
            for (int k = 0; k < n; ++k) mu[k] -= 0.5 * correction[k];
            fnorm = detail::elliptic_residual(p, mu.values(), F);
        }
    }

    Field w(grid);
    for (int k = 0; k < n; ++k) w[k] = resolvent(p.graph, 1.0, mu[k] - p.g[k]);
    return {std::move(mu), std::move(w), iterations, fnorm, fallback};
}

struct InitialFields {
    Field mu0;
    Field w0;
    Field xi0;
    bool outside_truncation = false;  ///< some u0 value lies where psi_* != psi
    int iterations = 0;
    double residual = 0.0;
};

/// Consistent initial chemical potential, rate and selection:
/// mu0 solves the elliptic problem with g = mu_flat0 + psi_*'(u0),
/// w0 = R(mu0 - g), equal to -A mu0 up to the solve tolerance but exactly in D(beta),
/// xi0 = mu0 - w0 - mu_flat0 - psi_*'(u0) (so xi0 in beta(w0)).
inline InitialFields initial_state(const Grid& grid, const MonotoneGraph& graph,
                                   const TruncatedPotential& psi, const Field& u0,
                                   const Field& mu_flat0, double tol = 1e-9, int max_outer = 200) {
    u0.check(mu_flat0);
    Field dpsi(grid);
    bool outside = false;
    for (int k = 0; k < grid.size(); ++k) {
        dpsi[k] = psi.prime(u0[k]);
        if (u0[k] < psi.k_low() || u0[k] > psi.k_high()) outside = true;
    }
    EllipticProblem prob{grid, graph, mu_flat0 + dpsi, tol, max_outer};
    auto sol = solve_chemical_potential(prob);
    Field w0 = std::move(sol.w);
    Field xi0(grid);
    for (int k = 0; k < grid.size(); ++k) xi0[k] = sol.mu[k] - w0[k] - mu_flat0[k] - dpsi[k];
    return {std::move(sol.mu), std::move(w0), std::move(xi0), outside, sol.iterations, sol.residual};
}

}  // namespace fbpsim
