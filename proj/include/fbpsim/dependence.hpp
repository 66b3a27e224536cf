#pragma once

// Empirical continuous-dependence constant: perturb u0 and the boundary datum
// by s * (du0, dmu) and measure the trajectory difference relative to s.

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <vector>

#include "fbpsim/integrator.hpp"
#include "json.hpp"

namespace fbpsim {

struct ProbeReport {
    std::vector<double> scales;
    std::vector<double> rho;
    double spread = 0.0;           ///< max rho / min rho
    double relative_spread = 0.0;  ///< max |rho_i / rho_0 - 1|
    bool pass = false;
    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["scales"] = scales;
        j["rho"] = rho;
        j["spread"] = spread;
        j["relative_spread"] = relative_spread;
        j["pass"] = pass;
        return j;
    }
};

namespace detail {

/// Uniform boundary signal base(t) + s * dmu(t), exact on the union of knots.
inline BoundarySpec perturbed_boundary(const BoundarySpec& base, const PiecewiseLinear& dmu, double s) {
    if (base.kind == BoundarySpec::Kind::Sides)
        throw DomainError("the dependence probe perturbs uniform boundary signals only");
    std::vector<double> col;
    if (base.kind == BoundarySpec::Kind::Uniform)
        for (const auto& row : base.values) col.push_back(row.at(0));
    const PiecewiseLinear b = base.kind == BoundarySpec::Kind::Uniform ? PiecewiseLinear(base.times, col)
                                                                       : PiecewiseLinear::constant(0.0);
    std::set<double> knots(b.times().begin(), b.times().end());
    knots.insert(dmu.times().begin(), dmu.times().end());
    BoundarySpec out;
    out.kind = BoundarySpec::Kind::Uniform;
    for (double t : knots) {
        out.times.push_back(t);
        out.values.push_back({b(t) + s * dmu(t)});
    }
    return out;
}

inline double trajectory_distance(const std::vector<SimState>& a, const std::vector<SimState>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Field dmu = a[i].mu - b[i].mu;
        d = std::max(d, l2_norm(a[i].u - b[i].u) + l2_norm(a[i].w - b[i].w) + std::sqrt(std::max(grad_energy(dmu), 0.0)));
    }
    return d;
}

}  // namespace detail

/// Runs the base scenario once and one perturbed run per scale, all sharing the
/// base model (truncation, M, step length).
inline ProbeReport continuous_dependence_probe(const ScenarioConfig& base, const Field& du0, const PiecewiseLinear& dmu,
                                               const std::vector<double>& scales, double max_spread = 3.0) {
    if (scales.empty()) throw DomainError("probe needs at least one scale");
    for (std::size_t i = 0; i < scales.size(); ++i)
        if (!(scales[i] > 0.0) || (i > 0 && !(scales[i] < scales[i - 1])))
            throw DomainError("probe scales must be positive and decreasing");

    const RunResult b = run(base);
    if (!b.ok()) throw NonConvergence("base run failed: " + b.error_message.value_or(""), 0, 0.0);
    const Field u0 = b.trajectory.front().u;
    du0.check(u0);

    double dmu_max = 0.0;
    for (double t : dmu.times()) dmu_max = std::max(dmu_max, std::abs(dmu(t)));
    const double denom_unit = l2_norm(du0) + dmu_max * std::sqrt(u0.grid().measure());

    std::vector<std::future<double>> jobs;
    for (double s : scales) {
        jobs.push_back(std::async(std::launch::async, [&, s] {
            ScenarioConfig cfg = base;
            Field up = u0 + s * du0;
            require_in_domain(cfg.potential, up);
            cfg.initial.kind = InitialSpec::Kind::Values;
            cfg.initial.values = up.vector();
            cfg.boundary = detail::perturbed_boundary(base.boundary, dmu, s);
            const RunResult p = simulate(cfg, b.model, up);
            if (!p.ok()) throw NonConvergence("perturbed run failed: " + p.error_message.value_or(""), 0, 0.0);
            const double denom = s * denom_unit;
            return denom > 0.0 ? detail::trajectory_distance(b.trajectory, p.trajectory) / denom : 0.0;
        }));
    }
    ProbeReport rep;
    rep.scales = scales;
    for (auto& j : jobs) rep.rho.push_back(j.get());
    const auto [lo, hi] = std::minmax_element(rep.rho.begin(), rep.rho.end());
    rep.spread = *lo > 0.0 ? *hi / *lo : (*hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    for (double r : rep.rho)
        rep.relative_spread = std::max(rep.relative_spread, rep.rho[0] > 0.0 ? std::abs(r / rep.rho[0] - 1.0) : std::abs(r));
    rep.pass = rep.spread <= max_spread;
    return rep;
}

}  // namespace fbpsim
