#pragma once

// On-disk layout of a run directory:
//   manifest.json             config echo, derived constants, snapshot index, column orders
//   snapshots/step_NNNNNN.csv x[,y],u,mu,w,xi,mu_flat per interior node
//   diagnostics.csv           one row per stored snapshot
//   solver_stats.csv          one row per time step
//   report.json               check results
//   error.json                only when the run stopped early

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fbpsim/config.hpp"
#include "fbpsim/diagnostics.hpp"
#include "fbpsim/integrator.hpp"

namespace fbpsim {

namespace fs = std::filesystem;

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError(where + ": bad number '" + std::string(s) + "'");
    return v;
}

inline void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed for " + p.string());
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
        s += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) s += ',';
                s += format_double(r[i]);
            }
            s += '\n';
        }
        return s;
    }

    static CsvTable parse(const std::string& text, const std::string& where) {
        CsvTable t;
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line)) throw IoError(where + ": empty file");
        std::istringstream hs(line);
        for (std::string c; std::getline(hs, c, ',');) t.header.push_back(c);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<double> r;
            std::istringstream ls(line);
            for (std::string c; std::getline(ls, c, ',');) r.push_back(parse_double(c, where));
            if (r.size() != t.header.size()) throw IoError(where + ": row width does not match the header");
            t.rows.push_back(std::move(r));
        }
        return t;
    }

    std::size_t column(const std::string& name, const std::string& where) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError(where + ": missing column '" + name + "'");
    }
};

inline std::vector<std::string> snapshot_columns(int dim) {
    if (dim == 1) return {"x", "u", "mu", "w", "xi", "mu_flat"};
    return {"x", "y", "u", "mu", "w", "xi", "mu_flat"};
}

inline CsvTable snapshot_table(const SimState& s) {
    const Grid& g = s.u.grid();
    CsvTable t{snapshot_columns(g.dim()), {}};
    for (int k = 0; k < g.size(); ++k) {
        const auto c = g.coordinates(k);
        std::vector<double> r{c[0]};
        if (g.dim() == 2) r.push_back(c[1]);
        r.insert(r.end(), {s.u[k], s.mu[k], s.w[k], s.xi[k], s.mu_flat[k]});
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline SimState read_snapshot(const fs::path& p, const Grid& g, double t) {
    const CsvTable tab = CsvTable::parse(detail::read_text(p), p.string());
    if (static_cast<int>(tab.rows.size()) != g.size())
        throw GridMismatch(p.string() + ": " + std::to_string(tab.rows.size()) + " rows for " +
                           std::to_string(g.size()) + " nodes");
    auto col = [&](const char* name) {
        const std::size_t c = tab.column(name, p.string());
        std::vector<double> v;
        for (const auto& r : tab.rows) v.push_back(r[c]);
        return Field(g, std::move(v));
    };
    return {t, col("u"), col("mu"), col("w"), col("xi"), col("mu_flat")};
}

inline CsvTable diagnostics_table(const std::vector<DiagnosticsRecord>& rec) {
    CsvTable t{DiagnosticsRecord::columns(), {}};
    for (const auto& r : rec) t.rows.push_back(r.row());
    return t;
}

inline std::vector<std::string> solver_stats_columns() {
    return {"step", "picard_iterations", "newton_iterations", "elliptic_residual", "max_gap_ratio", "fallback_used"};
}

inline CsvTable solver_stats_table(const std::vector<StepStats>& stats) {
    CsvTable t{solver_stats_columns(), {}};
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        t.rows.push_back({static_cast<double>(i + 1), static_cast<double>(s.picard_iterations),
                          static_cast<double>(s.newton_iterations), s.elliptic_residual, s.max_contraction_ratio(1e-9),
                          s.fallback_used ? 1.0 : 0.0});
    }
    return t;
}

inline std::string snapshot_name(std::size_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshots/step_%06zu.csv", step);
    return buf;
}

/// Indices of the stored snapshots: every k-th step plus the last one.
inline std::vector<std::size_t> stored_indices(std::size_t count, int subsample) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < count; i += static_cast<std::size_t>(subsample)) idx.push_back(i);
    if (count > 0 && idx.back() != count - 1) idx.push_back(count - 1);
    return idx;
}

inline DiagnosticsOptions diagnostics_options(const ScenarioConfig& c, int subsample) {
    return {c.diagnostics_energy, c.diagnostics_max_principle, c.diagnostics_zeta_star, subsample == 1};
}

inline Json scenario_summary(const ScenarioConfig& c) {
    Json j;
    j["dim"] = c.grid.dim;
    j["n"] = c.grid.dim == 1 ? Json(c.grid.n[0]) : Json::array({c.grid.n[0], c.grid.n[1]});
    j["extent"] = c.grid.dim == 1 ? Json(c.grid.extent[0]) : Json::array({c.grid.extent[0], c.grid.extent[1]});
    j["T_end"] = c.T_end;
    j["scheme"] = scheme_name(c.scheme);
    j["potential"] = c.potential.name();
    j["graph"] = c.graph.name();
    j["picard_tol"] = c.picard_tol;
    j["elliptic_tol"] = c.elliptic_tol;
    if (c.physical) j["physical"] = {{"alpha", c.physical->alpha}, {"m", c.physical->m}};
    return j;
}

inline Json derived_constants(const RunResult& r) {
    Json d;
    d["L"] = r.model.L();
    d["K1"] = r.model.K1;
    d["M"] = r.model.M;
    d["M_proxy"] = r.M_run;
    d["M_rounds"] = r.M_rounds;
    d["m_consistent"] = r.m_consistent;
    d["kstar_low"] = r.model.kstar.low;
    d["kstar_high"] = r.model.kstar.high;
    d["Klow"] = r.model.psi.k_low();
    d["Khigh"] = r.model.psi.k_high();
    d["tau"] = r.tau;
    d["steps"] = r.steps;
    d["tau_L"] = r.tau * r.model.L();
    d["initial_outside_truncation"] = r.outside_truncation;
    return d;
}

struct WrittenRun {
    DiagnosticsReport report;
    Json manifest;
};

/// Writes every output of a (possibly partial) run into `dir`.
inline WrittenRun write_run(const fs::path& dir, const LoadedConfig& loaded, const RunResult& r, int subsample) {
    fs::create_directories(dir / "snapshots");
    const auto idx = stored_indices(r.trajectory.size(), subsample);
    std::vector<SimState> stored;
    Json index = Json::array();
    for (std::size_t i : idx) {
        const std::string name = snapshot_name(i);
        write_text(dir / name, snapshot_table(r.trajectory[i]).str());
        index.push_back({{"step", i}, {"t", r.trajectory[i].t}, {"file", name}});
        stored.push_back(r.trajectory[i]);
    }

    WrittenRun out;
    out.report = diagnose(stored, r.model, diagnostics_options(loaded.cfg, subsample));
    write_text(dir / "diagnostics.csv", diagnostics_table(out.report.records).str());
    write_text(dir / "solver_stats.csv", solver_stats_table(r.stats).str());
    write_text(dir / "report.json", out.report.json.dump(2) + "\n");

    Json& m = out.manifest;
    m["config"] = loaded.raw;
    m["config_dir"] = loaded.base_dir.string();
    m["scenario"] = scenario_summary(loaded.cfg);
    m["derived"] = derived_constants(r);
    m["subsample"] = subsample;
    m["snapshot_columns"] = snapshot_columns(loaded.cfg.grid.dim);
    m["diagnostics_columns"] = DiagnosticsRecord::columns();
    m["solver_stats_columns"] = solver_stats_columns();
    m["snapshots"] = std::move(index);
    m["status"] = r.ok() ? "ok" : "error";
    if (!r.ok()) {
        Json e{{"error", *r.error_kind}, {"message", *r.error_message}, {"completed_steps", r.stats.size()}};
        m["error"] = e;
        write_text(dir / "error.json", e.dump(2) + "\n");
    } else if (fs::exists(dir / "error.json")) {
        fs::remove(dir / "error.json");
    }
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    return out;
}

struct StoredRun {
    LoadedConfig loaded;
    Model model;
    int subsample = 1;
    std::vector<SimState> trajectory;
    Json manifest;
};

/// Reads a run directory back, rebuilding the model from the manifest.
inline StoredRun read_run(const fs::path& dir) {
    const fs::path mp = dir / "manifest.json";
    Json m = detail::parse_json_text(detail::read_text(mp), mp.string());
    try {
        LoadedConfig loaded = config_from_json(m.at("config"), m.at("config_dir").get<std::string>());
        const Grid grid = loaded.cfg.grid.make();
        const Field u0 = initial_field(loaded.cfg, grid);
        const Model model = make_model(loaded.cfg, u0, m.at("derived").at("M").get<double>());
        const int subsample = m.at("subsample").get<int>();
        std::vector<SimState> traj;
        for (const auto& s : m.at("snapshots"))
            traj.push_back(read_snapshot(dir / s.at("file").get<std::string>(), grid, s.at("t").get<double>()));
        return {std::move(loaded), model, subsample, std::move(traj), std::move(m)};
    } catch (const nlohmann::json::exception& e) {
        throw IoError(mp.string() + ": malformed manifest (" + e.what() + ")");
    }
}

}  // namespace fbpsim
