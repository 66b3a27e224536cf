#pragma once

// Slow-driving limit: with boundary potential f(t / tau_char) and tau_char large,
// the bulk relaxes to f in k u + beta0 sign(u'), the stop operator.

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <vector>

#include "fbpsim/integrator.hpp"
#include "fbpsim/signal.hpp"
#include "json.hpp"

namespace fbpsim {

using DrivingSignal = PiecewiseLinear;

/// Triangle wave on [0, periods]: 0 -> A -> -A -> 0 per unit period.
inline DrivingSignal triangle_wave(double amplitude, int periods = 1) {
    std::vector<double> s{0.0}, f{0.0};
    for (int p = 0; p < periods; ++p) {
        s.insert(s.end(), {p + 0.25, p + 0.75, p + 1.0});
        f.insert(f.end(), {amplitude, -amplitude, 0.0});
    }
    return DrivingSignal(std::move(s), std::move(f));
}

struct StopOutput {
    std::vector<double> s;
    std::vector<double> f;
    std::vector<double> ku;  ///< k * u, kept exactly inside [f - beta0, f + beta0]
    std::vector<double> u;
};

/// Stop operator sampled at `samples` (sorted). The recursion also visits the
/// signal's breakpoints, so the result does not depend on the sampling.
inline StopOutput stop_operator(const DrivingSignal& f, double k, double beta0, double u_init,
                                const std::vector<double>& samples) {
    if (!(k > 0.0) || !(beta0 > 0.0)) throw DomainError("stop operator needs k > 0 and beta0 > 0");
    double y = k * u_init;
    if (std::abs(f(f.times().front()) - y) > beta0)
        throw BandViolation("initial state k*u = " + std::to_string(y) + " is outside the band f(0) +/- beta0");
    std::set<double> marks(f.times().begin(), f.times().end());
    std::vector<double> wanted(samples);
    std::sort(wanted.begin(), wanted.end());
    StopOutput out;
    auto it = marks.begin();
    for (double s : wanted) {
        for (; it != marks.end() && *it < s; ++it) {
            const double fv = f(*it);
            y = std::clamp(y, fv - beta0, fv + beta0);
        }
        const double fv = f(s);
        y = std::clamp(y, fv - beta0, fv + beta0);
        out.s.push_back(s);
        out.f.push_back(fv);
        out.ku.push_back(y);
        out.u.push_back(y / k);
    }
    return out;
}

struct LoopRun {
    double tau_char = 0.0;
    double tau = 0.0;
    int steps = 0;
    double distance = 0.0;        ///< sup_s |k u_pde - k u_stop| at the probe node
    double mu_nonuniformity = 0.0;  ///< max_t max_x |mu - mean(mu)|
    std::vector<double> s, f, ku_pde, ku_stop;
};

struct HysteresisReport {
    std::vector<LoopRun> runs;
    bool decreasing = false;  ///< distance strictly decreasing along the ladder
    bool loop_closed = false;
    double closure_defect = 0.0;

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["tau_char"] = nlohmann::ordered_json::array();
        j["distance"] = nlohmann::ordered_json::array();
        j["mu_nonuniformity"] = nlohmann::ordered_json::array();
        j["steps"] = nlohmann::ordered_json::array();
        for (const auto& r : runs) {
            j["tau_char"].push_back(r.tau_char);
            j["distance"].push_back(r.distance);
            j["mu_nonuniformity"].push_back(r.mu_nonuniformity);
            j["steps"].push_back(r.steps);
        }
        j["decreasing"] = decreasing;
        j["loop_closure_defect"] = closure_defect;
        j["loop_closed"] = loop_closed;
        j["pass"] = decreasing && loop_closed;
        return j;
    }
};

/// Stop-operator state after one and two periods of a two-period wave (from rest).
inline double loop_closure_defect(double amplitude, double k, double beta0) {
    const auto out = stop_operator(triangle_wave(amplitude, 2), k, beta0, 0.0, {1.0, 2.0});
    return std::abs(out.ku[1] - out.ku[0]);
}

/// Runs the PDE for each tau_char with mu_flat(t) = -f(t / tau_char) (the
/// model's sign convention, so the physical boundary potential is f) and
/// compares the center node against the stop operator.
inline HysteresisReport slow_driving_experiment(const ScenarioConfig& base, const DrivingSignal& f,
                                                const std::vector<double>& tau_chars,
                                                int steps_per_segment = 256) {
    const auto* quad = std::get_if<potential::Quadratic>(&base.potential.variant());
    const auto* sign = std::get_if<graph::ScaledSign>(&base.graph.variant());
    if (!quad || !sign) throw DomainError("slow-driving experiment needs a quadratic potential and a sign graph");
    for (std::size_t i = 1; i < tau_chars.size(); ++i)
        if (!(tau_chars[i] > tau_chars[i - 1])) throw DomainError("tau_char ladder must be increasing");
    const double k = quad->k, beta0 = sign->beta0;
    if (f.times().size() < 2) throw DomainError("driving signal needs at least two samples");

    double min_seg = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < f.times().size(); ++i) min_seg = std::min(min_seg, f.times()[i] - f.times()[i - 1]);
    const double s_end = f.times().back();
    const double s_step = min_seg / steps_per_segment;

    auto one = [&](double tau_char) {
        ScenarioConfig cfg = base;
        cfg.boundary.kind = BoundarySpec::Kind::Uniform;
        cfg.boundary.times.clear();
        cfg.boundary.values.clear();
        for (std::size_t i = 0; i < f.times().size(); ++i) {
            cfg.boundary.times.push_back(tau_char * f.times()[i]);
            cfg.boundary.values.push_back({-f.values()[i]});
        }
        cfg.T_end = tau_char * s_end;
        // keep tau * L well inside the contraction bound for the long ladder rungs
        cfg.tau = std::min(tau_char * s_step, 0.5 / k);
        const RunResult r = run(cfg);
        if (!r.ok()) throw NonConvergence("hysteresis run failed: " + r.error_message.value_or(""), 0, 0.0);

        LoopRun lr;
        lr.tau_char = tau_char;
        lr.tau = r.tau;
        lr.steps = r.steps;
        const int probe = r.model.grid.center_index();
        std::vector<double> s;
        for (const auto& st : r.trajectory) s.push_back(st.t / tau_char);
        const StopOutput ref = stop_operator(f, k, beta0, r.trajectory.front().u[probe], s);
        for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
            const SimState& st = r.trajectory[i];
            const double kupde = k * st.u[probe];
            lr.s.push_back(s[i]);
            lr.f.push_back(f(s[i]));
            lr.ku_pde.push_back(kupde);
            lr.ku_stop.push_back(ref.ku[i]);
            lr.distance = std::max(lr.distance, std::abs(kupde - ref.ku[i]));
            double mean = 0.0;
            for (double v : st.mu.values()) mean += v;
            mean /= st.mu.size();
            for (double v : st.mu.values()) lr.mu_nonuniformity = std::max(lr.mu_nonuniformity, std::abs(v - mean));
        }
        return lr;
    };

    std::vector<std::future<LoopRun>> jobs;
    for (double tc : tau_chars) jobs.push_back(std::async(std::launch::async, one, tc));
    HysteresisReport rep;
    for (auto& j : jobs) rep.runs.push_back(j.get());
    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.runs.size(); ++i)
        rep.decreasing = rep.decreasing && rep.runs[i].distance < rep.runs[i - 1].distance;
    double amp = 0.0;
    for (double v : f.values()) amp = std::max(amp, std::abs(v));
    rep.closure_defect = loop_closure_defect(amp, k, beta0);
    rep.loop_closed = rep.closure_defect <= 1e-12;
    return rep;
}

}  // namespace fbpsim
