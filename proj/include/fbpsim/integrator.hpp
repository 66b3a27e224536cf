#pragma once

// Implicit Euler for
//     u_t = -A mu,   mu = u_t + xi + mu_flat + psi_*'(u),   xi in beta(u_t).
// Each step solves the coupled system by Picard iteration on the frozen
// argument of psi_*' (the contraction map), re-solving mu and w exactly per pass.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fbpsim/elliptic.hpp"
#include "fbpsim/errors.hpp"
#include "fbpsim/scenario.hpp"
#include "fbpsim/state.hpp"

namespace fbpsim {

struct Schedule {
    double T_end;
    double tau;
    Scheme scheme = Scheme::PicardImplicit;
    double picard_tol = 1e-12;
    int picard_max = 2000;
    double elliptic_tol = 1e-9;
    int elliptic_max_outer = 200;
    double L = 0.0;

    Schedule(double T_end, double tau, Scheme scheme, double L)
        : T_end(T_end), tau(tau), scheme(scheme), L(L) {
        if (!(T_end > 0.0)) throw DomainError("T_end must be positive");
        if (!(tau > 0.0)) throw DomainError("tau must be positive");
        if (scheme == Scheme::PicardImplicit && !(tau * L < 1.0))
            throw DomainError("tau * L = " + std::to_string(tau * L) +
                              " violates the contraction bound tau * L < 1");
    }

    /// Steps of equal length covering [0, T_end], none longer than tau.
    int steps() const { return std::max(1, static_cast<int>(std::ceil(T_end / tau - 1e-12))); }
    double step_length() const { return T_end / steps(); }
};

inline Schedule make_schedule(const ScenarioConfig& cfg, double L) {
    const double tau = cfg.tau.value_or(0.5 / L);
    Schedule s(cfg.T_end, tau, cfg.scheme, L);
    s.picard_tol = cfg.picard_tol;
    s.picard_max = cfg.picard_max;
    s.elliptic_tol = cfg.elliptic_tol;
    s.elliptic_max_outer = cfg.elliptic_max_outer;
    return s;
}

/// One time step of length tau to the datum mu_flat_next.
inline SimState step(const SimState& s, double tau, const Schedule& sch, const Model& model,
                     const Field& mu_flat_next, StepStats* stats = nullptr) {
    const Grid& grid = model.grid;
    const int n = grid.size();
    StepStats local;
    StepStats& st = stats ? *stats : local;
    st = StepStats{};

    // Picard stops on a 1e-12 gap, so w must be resolved well below picard_tol / tau.
    const double etol = std::min(sch.elliptic_tol, 1e-2 * sch.picard_tol / std::max(tau, 1.0));

    Field v = s.u;
    Field g(grid);
    std::optional<Field> guess = s.mu;
    ChemicalPotential sol;
    Field next(grid);
    for (int j = 0;; ++j) {
        for (int k = 0; k < n; ++k) g[k] = mu_flat_next[k] + model.psi.prime(v[k]);
        EllipticProblem prob{grid, model.graph, g, etol, sch.elliptic_max_outer};
        sol = solve_chemical_potential(prob, guess);
        st.newton_iterations += sol.iterations;
        st.elliptic_residual = sol.residual;
        st.fallback_used = st.fallback_used || sol.used_fallback;
        guess = sol.mu;
        for (int k = 0; k < n; ++k) next[k] = s.u[k] + tau * sol.w[k];
        st.picard_iterations = j + 1;
        if (sch.scheme == Scheme::SemiImplicit) break;

        Field diff = next;
        diff -= v;
        const double gap = linf_norm(diff);
        st.gaps_linf.push_back(gap);
        st.gaps_l2.push_back(l2_norm(diff));
        if (gap <= sch.picard_tol) break;
        if (j + 1 >= sch.picard_max)
            throw PicardNonConvergence("Picard iteration stalled at gap " + std::to_string(gap) +
                                           " with tau * L = " + std::to_string(tau * sch.L) +
                                           "; reduce tau",
                                       tau * sch.L, gap);
        std::swap(v, next);
    }

    SimState out{s.t + tau, std::move(next), std::move(sol.mu), std::move(sol.w), Field(grid), mu_flat_next};
    for (int k = 0; k < n; ++k) out.xi[k] = out.mu[k] - out.w[k] - g[k];
    return out;
}

struct RunResult {
    explicit RunResult(Model m) : model(std::move(m)) {}

    Model model;
    double tau = 0.0;  ///< step length actually used
    int steps = 0;
    std::vector<SimState> trajectory;
    std::vector<StepStats> stats;  ///< stats[i] produced trajectory[i + 1]
    std::optional<std::string> error_kind;
    std::optional<std::string> error_message;
    double M_run = 0.0;  ///< max_t ||mu - mu_flat||_inf
    int M_rounds = 0;
    bool m_consistent = true;
    bool outside_truncation = false;
    bool ok() const { return !error_kind; }
};

inline double mu_shift_linf(const SimState& s) {
    double m = 0.0;
    for (int k = 0; k < s.mu.grid().size(); ++k) m = std::max(m, std::abs(s.mu[k] - s.mu_flat[k]));
    return m;
}

/// Integrates one scenario for a fixed model. Step failures end the
/// trajectory early and are recorded rather than thrown.
inline RunResult simulate(const ScenarioConfig& cfg, const Model& model, const Field& u0) {
    RunResult r(model);
    try {
        const Schedule sch = make_schedule(cfg, model.L());
        r.steps = sch.steps();
        r.tau = sch.step_length();
        const BoundaryDatum datum(model.grid, cfg.boundary);
        const Field mf0 = datum(0.0);
        auto init = initial_state(model.grid, model.graph, model.psi, u0, mf0, cfg.elliptic_tol,
                                  cfg.elliptic_max_outer);
        r.outside_truncation = init.outside_truncation;
        r.trajectory.reserve(static_cast<std::size_t>(r.steps) + 1);
        r.trajectory.push_back({0.0, u0, std::move(init.mu0), std::move(init.w0), std::move(init.xi0), mf0});
        r.M_run = mu_shift_linf(r.trajectory.back());
        for (int i = 1; i <= r.steps; ++i) {
            const double t = i == r.steps ? sch.T_end : i * r.tau;
            const SimState& prev = r.trajectory.back();
            StepStats st;
            SimState next = step(prev, t - prev.t, sch, model, datum(t), &st);
            next.t = t;
            r.M_run = std::max(r.M_run, mu_shift_linf(next));
            r.trajectory.push_back(std::move(next));
            r.stats.push_back(std::move(st));
        }
    } catch (const Error& e) {
        r.error_kind = e.kind();
        r.error_message = e.what();
    }
    return r;
}

inline void require_in_domain(const Potential& p, const Field& u0) {
    for (double v : u0.values())
        if (!p.in_domain(v))
            throw DomainError("initial value " + std::to_string(v) + " outside the domain of the " +
                              p.name() + " potential");
}

/// Runs with M chosen a posteriori: start from an estimate, integrate, and
/// enlarge M while the measured ||mu - mu_flat||_inf exceeds it.
inline RunResult run(const ScenarioConfig& cfg) {
    const Grid grid = cfg.grid.make();
    const Field u0 = initial_field(cfg, grid);
    require_in_domain(cfg.potential, u0);

    double M = cfg.M.value_or(initial_M_estimate(cfg, u0));
    const int rounds = cfg.M ? 1 : std::max(1, cfg.M_rounds);
    RunResult r(make_model(cfg, u0, M));
    for (int round = 1; round <= rounds; ++round) {
        r = simulate(cfg, make_model(cfg, u0, M), u0);
        r.M_rounds = round;
        r.m_consistent = r.M_run <= M * (1.0 + 1e-12);
        if (r.m_consistent || !r.ok() || round == rounds) break;
        M = 1.5 * r.M_run;
    }
    return r;
}

}  // namespace fbpsim
