#pragma once

// Runtime checks of the a-priori estimates on a stored trajectory. Every
// quantity here is a pure function of the states and the model, so rerunning
// on snapshots read back from disk reproduces the same report bit for bit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fbpsim/graphs.hpp"
#include "fbpsim/laplacian.hpp"
#include "fbpsim/scenario.hpp"
#include "fbpsim/state.hpp"
#include "json.hpp"

namespace fbpsim {

struct DiagnosticsRecord {
    double t = 0.0;
    double energy = 0.0;       ///< integral of psi_*(u)
    double rate_energy = 0.0;  ///< sum tau (||w||^2 + <xi, w> + grad_energy(mu))
    double source = 0.0;       ///< -sum tau <mu_flat, w>
    double allowance = 0.0;    ///< nonconvexity and Picard-freeze terms, see energy_check
    double grad_mu = 0.0;
    double w_norm = 0.0;
    double zeta_star_budget = 0.0;  ///< integral of zeta*(xi); +inf when xi leaves dom zeta*
    double u_min = 0.0, u_max = 0.0;
    double mu_shift_linf = 0.0;
    double min_dissipation = 0.0;  ///< min over nodes of xi * w
    double membership_defect = 0.0;
    double ledger_defect = 0.0;  ///< tau |<mu, w> + grad_energy(mu)|, zero for exact w = -A mu

    static std::vector<std::string> columns() {
        return {"t",     "energy", "rate_energy",   "source",          "allowance",
                "grad_mu", "w_norm", "zeta_star_budget", "u_min",       "u_max",
                "mu_shift_linf", "min_dissipation", "membership_defect", "ledger_defect"};
    }
    std::vector<double> row() const {
        return {t,     energy, rate_energy,   source,          allowance,
                grad_mu, w_norm, zeta_star_budget, u_min,       u_max,
                mu_shift_linf, min_dissipation, membership_defect, ledger_defect};
    }
};

namespace detail {

/// psi_*'(v) recovered from a state: mu = w + xi + mu_flat + psi_*'(v).
inline Field frozen_slope(const SimState& s) {
    Field f = s.mu;
    f -= s.w;
    f -= s.xi;
    f -= s.mu_flat;
    return f;
}

inline double zeta_star_integral(const MonotoneGraph& g, const Field& xi) {
    double sum = 0.0;
    for (double v : xi.values()) {
        const ExtendedReal z = zeta_star_tolerant(g, v, 1e-9 * (1.0 + std::abs(v)));
        if (!z.is_finite()) return std::numeric_limits<double>::infinity();
        sum += z.value();
    }
    return sum * xi.grid().weight();
}

}  // namespace detail

/// Per-snapshot records. Cumulative columns assume consecutive steps.
inline std::vector<DiagnosticsRecord> compute_records(const std::vector<SimState>& traj, const Model& model) {
    std::vector<DiagnosticsRecord> out;
    out.reserve(traj.size());
    const bool zero_graph = model.graph.is_zero();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const SimState& s = traj[i];
        const int n = s.u.size();
        DiagnosticsRecord r;
        r.t = s.t;
        double e = 0.0;
        for (double v : s.u.values()) e += model.psi.value(v);
        r.energy = e * s.u.grid().weight();
        r.grad_mu = grad_energy(s.mu);
        r.w_norm = l2_norm(s.w);
        r.zeta_star_budget = zero_graph ? 0.0 : detail::zeta_star_integral(model.graph, s.xi);
        r.u_min = min_value(s.u);
        r.u_max = max_value(s.u);
        r.mu_shift_linf = 0.0;
        r.min_dissipation = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
            r.mu_shift_linf = std::max(r.mu_shift_linf, std::abs(s.mu[k] - s.mu_flat[k]));
            r.min_dissipation = std::min(r.min_dissipation, s.xi[k] * s.w[k]);
            r.membership_defect = std::max(r.membership_defect, membership_defect(model.graph, s.w[k], s.xi[k]));
        }
        if (i > 0) {
            const SimState& p = traj[i - 1];
            const DiagnosticsRecord& q = out.back();
            const double tau = s.t - p.t;
            const double ww = l2_inner(s.w, s.w);
            const double mw = l2_inner(s.mu, s.w);
            r.rate_energy = q.rate_energy + tau * (ww + l2_inner(s.xi, s.w) + r.grad_mu);
            r.source = q.source - tau * l2_inner(s.mu_flat, s.w);
            // psi_*(b) - psi_*(a) <= psi_*'(b)(b - a) + K1/2 (b - a)^2, and the step
            // used psi_*'(v) in place of psi_*'(u^{n+1}).
            const Field du = s.u - p.u;
            Field freeze = detail::frozen_slope(s);
            for (int k = 0; k < n; ++k) freeze[k] = model.psi.prime(s.u[k]) - freeze[k];
            r.allowance = q.allowance + 0.5 * model.K1 * l2_inner(du, du) + std::abs(l2_inner(freeze, du));
            r.ledger_defect = tau * std::abs(mw + r.grad_mu);
        }
        out.push_back(r);
    }
    return out;
}

struct CheckResult {
    bool pass = true;
    bool skipped = false;
    nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

/// energy(t) + rate_energy <= energy(0) + source + allowance + slack at every step,
/// plus nodewise xi * w >= -1e-9.
inline CheckResult energy_check(const std::vector<DiagnosticsRecord>& rec) {
    CheckResult c;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_step = 0;
    double min_diss = std::numeric_limits<double>::infinity();
    double max_ledger = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& r = rec[i];
        min_diss = std::min(min_diss, r.min_dissipation);
        max_ledger = std::max(max_ledger, r.ledger_defect);
        if (i == 0) continue;
        const double slack = 1e-6 * (1.0 + std::abs(rec[0].energy) + std::abs(r.rate_energy) + std::abs(r.source) +
                                     r.allowance);
        const double margin = rec[0].energy + r.source + r.allowance + slack - (r.energy + r.rate_energy);
        if (margin < worst || std::isnan(margin)) {
            worst = margin;
            worst_step = i;
        }
        if (!(margin >= 0.0)) c.pass = false;
    }
    if (rec.size() < 2) worst = 0.0;
    if (rec.empty()) min_diss = 0.0;
    const bool diss_ok = min_diss >= -1e-9;
    c.pass = c.pass && diss_ok;
    c.detail["pass"] = c.pass;
    c.detail["worst_margin"] = worst;
    c.detail["worst_step"] = worst_step;
    c.detail["min_dissipation"] = min_diss;
    c.detail["dissipation_pass"] = diss_ok;
    c.detail["ledger_max_defect"] = max_ledger;
    return c;
}

/// kstar_low - 1e-8 <= u <= kstar_high + 1e-8 at every snapshot.
inline CheckResult max_principle_check(const std::vector<DiagnosticsRecord>& rec, double kstar_low, double kstar_high) {
    constexpr double eps = 1e-8;
    CheckResult c;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::int64_t first_bad = -1;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        lo = std::min(lo, rec[i].u_min);
        hi = std::max(hi, rec[i].u_max);
        if ((rec[i].u_min < kstar_low - eps || rec[i].u_max > kstar_high + eps) && first_bad < 0)
            first_bad = static_cast<std::int64_t>(i);
    }
    c.pass = first_bad < 0;
    c.detail["pass"] = c.pass;
    c.detail["kstar_low"] = kstar_low;
    c.detail["kstar_high"] = kstar_high;
    c.detail["u_min"] = lo;
    c.detail["u_max"] = hi;
    c.detail["first_violation"] = first_bad;
    return c;
}

/// Records sup_t ||mu - mu_flat||_inf and whether the run stayed below the M
/// its thresholds were built from.
inline CheckResult mu_linf_check(const std::vector<DiagnosticsRecord>& rec, double M) {
    CheckResult c;
    double sup = 0.0;
    for (const auto& r : rec) sup = std::max(sup, r.mu_shift_linf);
    c.pass = sup <= M * (1.0 + 1e-12);
    c.detail["pass"] = c.pass;
    c.detail["sup"] = sup;
    c.detail["M"] = M;
    return c;
}

/// Stability of the mu bound under tau -> tau/2: ratio within 10%.
inline bool mu_linf_refinement_stable(double sup_tau, double sup_half) {
    if (sup_tau == 0.0 && sup_half == 0.0) return true;
    if (sup_half == 0.0) return false;
    return std::abs(sup_tau / sup_half - 1.0) <= 0.1;
}

/// 1/2 grad(mu) + 1/2 ||w||^2 + int zeta*(xi) <= its value at 0 + C_hat(t), where
/// C_hat accumulates K1 tau ||w||^2 + ||d mu_flat|| ||w|| + |<d e, w>| with
/// e = psi_*'(v) - psi_*'(u) the Picard-freeze error.
inline CheckResult zeta_star_budget_check(const std::vector<SimState>& traj,
                                          const std::vector<DiagnosticsRecord>& rec, const Model& model) {
    CheckResult c;
    if (model.graph.is_zero()) {
        c.skipped = true;
        c.detail["pass"] = true;
        c.detail["skipped"] = "zero graph";
        return c;
    }
    auto lhs = [&](std::size_t i) { return 0.5 * rec[i].grad_mu + 0.5 * rec[i].w_norm * rec[i].w_norm + rec[i].zeta_star_budget; };
    auto freeze_error = [&](const SimState& s) {
        Field e = detail::frozen_slope(s);
        for (int k = 0; k < e.size(); ++k) e[k] -= model.psi.prime(s.u[k]);
        return e;
    };
    double C = 0.0;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_step = 0;
    bool infinite = false;
    const double lhs0 = traj.empty() ? 0.0 : lhs(0);
    if (!std::isfinite(lhs0)) infinite = true;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const SimState& s = traj[i];
        const SimState& p = traj[i - 1];
        const double tau = s.t - p.t;
        const double wn = rec[i].w_norm;
        const Field de = freeze_error(s) - freeze_error(p);
        C += model.K1 * tau * wn * wn + l2_norm(s.mu_flat - p.mu_flat) * wn + std::abs(l2_inner(de, s.w));
        const double L = lhs(i);
        if (!std::isfinite(L)) {
            infinite = true;
            continue;
        }
        const double slack = 1e-6 * (1.0 + std::abs(lhs0) + std::abs(L) + C);
        const double margin = lhs0 + C + slack - L;
        if (margin < worst) {
            worst = margin;
            worst_step = i;
        }
    }
    if (traj.size() < 2) worst = 0.0;
    c.pass = !infinite && worst >= 0.0;
    c.detail["pass"] = c.pass;
    c.detail["worst_margin"] = worst;
    c.detail["worst_step"] = worst_step;
    c.detail["C_hat"] = C;
    c.detail["infinite_zeta_star"] = infinite;
    return c;
}

struct DiagnosticsOptions {
    bool energy = true;
    bool max_principle = true;
    bool zeta_star = true;
    /// Snapshots are every step; false when outputs were subsampled, which
    /// disables the checks that difference consecutive states.
    bool consecutive = true;
};

struct DiagnosticsReport {
    std::vector<DiagnosticsRecord> records;
    nlohmann::ordered_json json;
    bool all_pass = true;
};

inline DiagnosticsReport diagnose(const std::vector<SimState>& traj, const Model& model,
                                  const DiagnosticsOptions& opt = {}) {
    DiagnosticsReport rep;
    rep.records = compute_records(traj, model);
    auto& j = rep.json;
    auto add = [&](const char* key, bool enabled, bool needs_steps, auto&& fn) {
        if (!enabled) {
            j[key] = {{"pass", true}, {"skipped", "disabled"}};
        } else if (needs_steps && !opt.consecutive) {
            j[key] = {{"pass", true}, {"skipped", "subsampled trajectory"}};
        } else {
            CheckResult c = fn();
            rep.all_pass = rep.all_pass && c.pass;
            j[key] = std::move(c.detail);
        }
    };
    add("energy", opt.energy, true, [&] { return energy_check(rep.records); });
    add("max_principle", opt.max_principle, false,
        [&] { return max_principle_check(rep.records, model.kstar.low, model.kstar.high); });
    add("mu_linf", true, false, [&] { return mu_linf_check(rep.records, model.M); });
    add("zeta_star_budget", opt.zeta_star, true, [&] { return zeta_star_budget_check(traj, rep.records, model); });
    double defect = 0.0;
    for (const auto& r : rep.records) defect = std::max(defect, r.membership_defect);
    j["membership_max_defect"] = defect;
    j["snapshots"] = traj.size();
    j["all_pass"] = rep.all_pass;
    return rep;
}

}  // namespace fbpsim
