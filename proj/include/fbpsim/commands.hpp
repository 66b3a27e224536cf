#pragma once

// Command implementations behind the fbpsim executable. Each returns a process
// exit code; errors propagate as exceptions and are rendered by error_json.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fbpsim/config.hpp"
#include "fbpsim/hysteresis.hpp"
#include "fbpsim/io.hpp"

namespace fbpsim {

struct CommandOptions {
    fs::path config;
    fs::path out = "out";
    std::optional<int> workers;
    std::optional<int> subsample;
    bool quiet = false;
};

inline Json error_json(const std::exception& e) {
    Json j;
    const auto* fe = dynamic_cast<const Error*>(&e);
    j["error"] = fe ? fe->kind() : "Error";
    j["message"] = e.what();
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        j["line"] = pe->line();
        j["column"] = pe->column();
    }
    if (const auto* ve = dynamic_cast<const ValidationError*>(&e)) {
        j["violations"] = Json::array();
        for (const auto& v : ve->violations()) j["violations"].push_back({{"key", v.key}, {"value", v.value}, {"rule", v.rule}});
    }
    if (const auto* pn = dynamic_cast<const PicardNonConvergence*>(&e)) {
        j["tau_times_L"] = pn->tau_times_L();
        j["gap"] = pn->gap();
    }
    return j;
}

/// --workers, then FBPSIM_WORKERS, then 1.
inline int resolve_workers(std::optional<int> flag) {
    if (flag) {
        if (*flag < 1) throw DomainError("--workers must be at least 1");
        return *flag;
    }
    if (const char* env = std::getenv("FBPSIM_WORKERS")) {
        int n = 0;
        const std::string_view s(env);
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec != std::errc() || p != s.data() + s.size() || n < 1)
            throw DomainError("FBPSIM_WORKERS must be a positive integer, got '" + std::string(env) + "'");
        return n;
    }
    return 1;
}

/// Runs fn(i) for i in [0, count) on a bounded pool; the first exception wins.
template <class F>
void parallel_for(std::size_t count, int workers, F&& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    auto body = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct CellOutcome {
    bool ok = false;
    bool all_pass = false;
    int steps = 0;
    double tau = 0.0;
    double mu_linf_sup = 0.0;
    std::optional<SimState> final_state;
};

inline CellOutcome run_to_dir(const LoadedConfig& loaded, const fs::path& dir, std::optional<int> subsample_flag) {
    const int subsample = subsample_flag.value_or(loaded.cfg.subsample);
    if (subsample < 1) throw DomainError("--subsample must be at least 1");
    const RunResult r = run(loaded.cfg);
    const WrittenRun w = write_run(dir, loaded, r, subsample);
    CellOutcome c;
    c.ok = r.ok();
    c.all_pass = w.report.all_pass;
    c.steps = r.steps;
    c.tau = r.tau;
    for (const auto& rec : w.report.records) c.mu_linf_sup = std::max(c.mu_linf_sup, rec.mu_shift_linf);
    if (!r.trajectory.empty()) c.final_state = r.trajectory.back();
    return c;
}

inline int cmd_run(const CommandOptions& o) {
    const LoadedConfig loaded = parse_and_validate(o.config);
    const CellOutcome c = run_to_dir(loaded, o.out, o.subsample);
    Json s{{"command", "run"}, {"status", c.ok ? "ok" : "error"}, {"out", o.out.string()}, {"steps", c.steps},
           {"all_pass", c.all_pass}};
    if (!c.ok) {
        Json e = detail::parse_json_text(detail::read_text(o.out / "error.json"), "error.json");
        std::cerr << e.dump() << "\n";
        return 1;
    }
    if (!o.quiet) std::cout << s.dump() << "\n";
    return 0;
}

namespace detail {

inline std::vector<std::vector<std::pair<std::string, Json>>> cartesian(const Json& vary) {
    std::vector<std::vector<std::pair<std::string, Json>>> cells{{}};
    for (auto it = vary.begin(); it != vary.end(); ++it) {
        if (!it->is_array() || it->empty())
            throw ValidationError({{"vary." + it.key(), it->dump(), "must be a non-empty array of values"}});
        std::vector<std::vector<std::pair<std::string, Json>>> next;
        for (const auto& cell : cells)
            for (const auto& v : *it) {
                auto c = cell;
                c.emplace_back(it.key(), v);
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }
    return cells;
}

inline std::string cell_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%03zu", i);
    return buf;
}

}  // namespace detail

/// Sweep file: {"base": <scenario object or path>, "vary": {"dotted.key": [values...]}}.
inline int cmd_sweep(const CommandOptions& o) {
    const Json doc = detail::parse_json_text(detail::read_text(o.config), o.config.string());
    const fs::path cfg_dir = fs::absolute(o.config).parent_path();
    if (!doc.is_object() || !doc.contains("base") || !doc.contains("vary") || !doc["vary"].is_object())
        throw ValidationError({{"sweep", doc.dump(), "sweep file needs an object 'base' (or path) and an object 'vary'"}});
    Json base = doc["base"];
    fs::path base_dir = cfg_dir;
    if (base.is_string()) {
        const fs::path bp = cfg_dir / base.get<std::string>();
        base = detail::parse_json_text(detail::read_text(bp), bp.string());
        base_dir = fs::absolute(bp).parent_path();
    }
    const auto cells = detail::cartesian(doc["vary"]);

    // validate every cell before running any of them
    std::vector<LoadedConfig> loaded;
    std::vector<Violation> all;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        Json d = base;
        for (const auto& [k, v] : cells[i]) set_dotted(d, k, v);
        try {
            loaded.push_back(config_from_json(d, base_dir));
        } catch (const ValidationError& e) {
            for (auto v : e.violations()) {
                v.key = detail::cell_name(i) + ":" + v.key;
                all.push_back(v);
            }
        }
    }
    if (!all.empty()) throw ValidationError(all);

    std::vector<CellOutcome> outcomes(cells.size());
    parallel_for(cells.size(), resolve_workers(o.workers), [&](std::size_t i) {
        outcomes[i] = run_to_dir(loaded[i], o.out / detail::cell_name(i), o.subsample);
    });

    Json rep;
    rep["cells"] = Json::array();
    bool ok = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        Json ov = Json::object();
        for (const auto& [k, v] : cells[i]) ov[k] = v;
        ok = ok && outcomes[i].ok;
        rep["cells"].push_back({{"dir", detail::cell_name(i)}, {"overrides", ov}, {"status", outcomes[i].ok ? "ok" : "error"},
                                {"tau", outcomes[i].tau}, {"steps", outcomes[i].steps},
                                {"mu_linf_sup", outcomes[i].mu_linf_sup}, {"all_pass", outcomes[i].all_pass}});
    }

    // Refinement: cells equal up to time.tau, ordered by decreasing step length.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        Json key = Json::object();
        for (const auto& [k, v] : cells[i])
            if (k != "time.tau") key[k] = v;
        if (outcomes[i].ok && outcomes[i].final_state) groups[key.dump()].push_back(i);
    }
    rep["refinement"] = Json::array();
    for (auto& [key, members] : groups) {
        if (members.size() < 2) continue;
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return outcomes[a].tau > outcomes[b].tau; });
        Json chain = Json::array();
        std::vector<double> diffs;
        for (std::size_t j = 1; j < members.size(); ++j) {
            const auto& A = outcomes[members[j - 1]];
            const auto& B = outcomes[members[j]];
            const double d = linf_norm(A.final_state->u - B.final_state->u);
            diffs.push_back(d);
            chain.push_back({{"coarse", detail::cell_name(members[j - 1])}, {"fine", detail::cell_name(members[j])},
                             {"tau_ratio", A.tau / B.tau}, {"final_u_diff_linf", d},
                             {"mu_linf_ratio", B.mu_linf_sup > 0.0 ? A.mu_linf_sup / B.mu_linf_sup : 0.0},
                             {"mu_linf_stable", mu_linf_refinement_stable(A.mu_linf_sup, B.mu_linf_sup)}});
        }
        Json g{{"group", Json::parse(key)}, {"pairs", chain}};
        if (diffs.size() >= 2 && diffs.back() > 0.0 && diffs[diffs.size() - 2] > 0.0) {
            const double ratio = outcomes[members[members.size() - 2]].tau / outcomes[members.back()].tau;
            g["observed_order"] = std::log(diffs[diffs.size() - 2] / diffs.back()) / std::log(ratio);
        }
        rep["refinement"].push_back(std::move(g));
    }
    write_text(o.out / "sweep.json", rep.dump(2) + "\n");
    if (!o.quiet) std::cout << Json{{"command", "sweep"}, {"cells", cells.size()}, {"status", ok ? "ok" : "error"}}.dump() << "\n";
    return ok ? 0 : 1;
}

/// Scenario file plus an optional "hysteresis" block:
/// {"tau_chars": [...], "amplitude": A, "steps_per_segment": n}.
inline int cmd_hysteresis(const CommandOptions& o) {
    Json doc = detail::parse_json_text(detail::read_text(o.config), o.config.string());
    Json h = Json::object();
    if (doc.is_object() && doc.contains("hysteresis")) {
        h = doc["hysteresis"];
        doc.erase("hysteresis");
    }
    std::vector<double> ladder{10.0, 100.0, 1000.0};
    double amplitude = 1.0;
    int per_segment = 256;
    std::vector<Violation> v;
    detail::Reader rd(v);
    rd.known_keys(h, "hysteresis.", {"tau_chars", "amplitude", "steps_per_segment"});
    if (h.contains("tau_chars")) {
        const Json& t = h["tau_chars"];
        bool ok = t.is_array() && !t.empty();
        if (ok) {
            ladder.clear();
            for (const auto& x : t) {
                ok = ok && x.is_number() && x.get<double>() > 0.0;
                if (x.is_number()) ladder.push_back(x.get<double>());
            }
        }
        if (!ok) rd.fail("hysteresis.tau_chars", &t, "must be a non-empty array of positive numbers");
    }
    rd.number(h, "hysteresis.", "amplitude", amplitude);
    rd.integer(h, "hysteresis.", "steps_per_segment", per_segment);
    if (!(amplitude > 0.0)) rd.fail("hysteresis.amplitude", rd.get(h, "amplitude"), "must be positive");
    if (per_segment < 1) rd.fail("hysteresis.steps_per_segment", rd.get(h, "steps_per_segment"), "must be at least 1");
    if (!v.empty()) throw ValidationError(v);

    const LoadedConfig loaded = config_from_json(doc, fs::absolute(o.config).parent_path());
    const HysteresisReport rep = slow_driving_experiment(loaded.cfg, triangle_wave(amplitude), ladder, per_segment);
    Json j = rep.json();
    j["loops"] = Json::array();
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const auto& r = rep.runs[i];
        CsvTable t{{"s", "f", "ku_pde", "ku_stop"}, {}};
        for (std::size_t k = 0; k < r.s.size(); ++k) t.rows.push_back({r.s[k], r.f[k], r.ku_pde[k], r.ku_stop[k]});
        char name[32];
        std::snprintf(name, sizeof name, "loop_%02zu.csv", i);
        write_text(o.out / name, t.str());
        j["loops"].push_back({{"tau_char", r.tau_char}, {"file", name}});
    }
    j["config"] = loaded.raw;
    write_text(o.out / "hysteresis.json", j.dump(2) + "\n");
    if (!o.quiet) std::cout << Json{{"command", "hysteresis"}, {"pass", j["pass"]}, {"distance", j["distance"]}}.dump() << "\n";
    return 0;
}

struct CheckOutcome {
    bool report_matches = false;
    bool diagnostics_match = false;
    bool all_pass = false;
    std::vector<std::string> failures;
    Json json() const {
        return {{"command", "check"}, {"report_matches", report_matches}, {"diagnostics_match", diagnostics_match},
                {"all_pass", all_pass}, {"failures", failures},
                {"pass", report_matches && diagnostics_match && all_pass}};
    }
};

/// Recomputes diagnostics from the stored snapshots (no simulation) and compares
/// them with the stored report.
inline CheckOutcome check_run(const fs::path& dir) {
    const StoredRun s = read_run(dir);
    const DiagnosticsReport rep = diagnose(s.trajectory, s.model, diagnostics_options(s.loaded.cfg, s.subsample));
    CheckOutcome c;
    c.report_matches = detail::read_text(dir / "report.json") == rep.json.dump(2) + "\n";
    c.diagnostics_match = detail::read_text(dir / "diagnostics.csv") == diagnostics_table(rep.records).str();
    c.all_pass = rep.all_pass;
    for (auto it = rep.json.begin(); it != rep.json.end(); ++it)
        if (it->is_object() && it->contains("pass") && !(*it)["pass"].get<bool>()) c.failures.push_back(it.key());
    return c;
}

inline int cmd_check(const CommandOptions& o) {
    const CheckOutcome c = check_run(o.out);
    const Json j = c.json();
    const bool pass = j["pass"].get<bool>();
    if (!o.quiet || !pass) (pass ? std::cout : std::cerr) << j.dump() << "\n";
    return pass ? 0 : 2;
}

}  // namespace fbpsim
