#pragma once

// JSON scenario files. Parsing collects every violation before failing so a
// bad file is reported in one pass.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fbpsim/errors.hpp"
#include "fbpsim/expression.hpp"
#include "fbpsim/integrator.hpp"
#include "json.hpp"

namespace fbpsim {

using Json = nlohmann::ordered_json;

struct LoadedConfig {
    ScenarioConfig cfg;
    Json raw;  ///< the document as written (after overrides), echoed into manifests
    std::filesystem::path base_dir;
};

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        int line = 1, col = 1;
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what(), line, col);
    }
}

/// Reads typed values out of a JSON object, recording violations instead of throwing.
class Reader {
public:
    explicit Reader(std::vector<Violation>& out) : out_(out) {}

    void fail(const std::string& key, const Json* v, const std::string& rule) {
        out_.push_back({key, v ? v->dump() : std::string("<missing>"), rule});
    }

    const Json* get(const Json& obj, const char* name) {
        if (!obj.is_object()) return nullptr;
        auto it = obj.find(name);
        return it == obj.end() ? nullptr : &*it;
    }

    void number(const Json& obj, const std::string& prefix, const char* name, double& dst) {
        if (const Json* v = get(obj, name)) {
            if (v->is_number() && std::isfinite(v->get<double>())) dst = v->get<double>();
            else fail(prefix + name, v, "must be a finite number");
        }
    }
    void optional_number(const Json& obj, const std::string& prefix, const char* name, std::optional<double>& dst) {
        if (const Json* v = get(obj, name)) {
            if (v->is_number() && std::isfinite(v->get<double>())) dst = v->get<double>();
            else fail(prefix + name, v, "must be a finite number");
        }
    }
    void integer(const Json& obj, const std::string& prefix, const char* name, int& dst) {
        if (const Json* v = get(obj, name)) {
            if (v->is_number_integer()) dst = v->get<int>();
            else fail(prefix + name, v, "must be an integer");
        }
    }
    void boolean(const Json& obj, const std::string& prefix, const char* name, bool& dst) {
        if (const Json* v = get(obj, name)) {
            if (v->is_boolean()) dst = v->get<bool>();
            else fail(prefix + name, v, "must be true or false");
        }
    }
    void string(const Json& obj, const std::string& prefix, const char* name, std::string& dst) {
        if (const Json* v = get(obj, name)) {
            if (v->is_string()) dst = v->get<std::string>();
            else fail(prefix + name, v, "must be a string");
        }
    }
    void known_keys(const Json& obj, const std::string& prefix, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const char* k : keys) ok = ok || it.key() == k;
            if (!ok) fail(prefix + it.key(), &it.value(), "unknown key");
        }
    }
    const Json& section(const Json& root, const char* name) {
        static const Json empty = Json::object();
        auto it = root.find(name);
        if (it == root.end()) return empty;
        if (!it->is_object()) {
            fail(name, &*it, "must be an object");
            return empty;
        }
        return *it;
    }

private:
    std::vector<Violation>& out_;
};

inline std::vector<double> read_csv_column(const std::filesystem::path& p, const std::string& column) {
    std::istringstream in(read_text(p));
    std::string line;
    if (!std::getline(in, line)) throw IoError(p.string() + ": empty file");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) throw IoError(p.string() + ": no column '" + column + "'");
    const std::size_t idx = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        for (std::size_t c = 0; c <= idx; ++c)
            if (!std::getline(ls, cell, ',')) throw IoError(p.string() + ": row " + std::to_string(row) + " is short");
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size())
            throw IoError(p.string() + ": row " + std::to_string(row) + ": bad number '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace detail

/// Sets a dotted key ("time.tau") in a JSON document, creating objects on the way.
inline void set_dotted(Json& doc, const std::string& dotted, const Json& value) {
    Json* cur = &doc;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = dotted.find('.', start);
        const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw DomainError("malformed key '" + dotted + "'");
        if (!cur->is_object()) *cur = Json::object();
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            return;
        }
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

/// Builds and validates a scenario from a parsed document. Relative file
/// references resolve against base_dir.
inline LoadedConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir = ".") {
    std::vector<Violation> v;
    detail::Reader rd(v);
    LoadedConfig out{{}, doc, base_dir};
    ScenarioConfig& c = out.cfg;
    if (!doc.is_object()) {
        rd.fail("", &doc, "top level must be an object");
        throw ValidationError(v);
    }
    rd.known_keys(doc, "", {"grid", "potential", "graph", "time", "picard", "elliptic", "initial", "boundary",
                            "physical", "thresholds", "diagnostics", "output", "seed", "description"});

    // grid
    const Json& g = rd.section(doc, "grid");
    rd.known_keys(g, "grid.", {"dim", "extent", "n"});
    rd.integer(g, "grid.", "dim", c.grid.dim);
    if (c.grid.dim != 1 && c.grid.dim != 2) rd.fail("grid.dim", rd.get(g, "dim"), "must be 1 or 2");
    auto pair_field = [&](const char* name, auto& dst, bool integral) {
        const Json* j = rd.get(g, name);
        if (!j) return;
        auto ok = [&](const Json& x) { return integral ? x.is_number_integer() : x.is_number(); };
        if (ok(*j)) {
            dst[0] = dst[1] = j->template get<typename std::decay_t<decltype(dst)>::value_type>();
        } else if (j->is_array() && j->size() == static_cast<std::size_t>(c.grid.dim) && ok((*j)[0]) &&
                   ok(j->back())) {
            dst[0] = (*j)[0].template get<typename std::decay_t<decltype(dst)>::value_type>();
            dst[1] = j->back().template get<typename std::decay_t<decltype(dst)>::value_type>();
        } else {
            rd.fail(std::string("grid.") + name, j,
                    integral ? "must be an integer or one integer per axis" : "must be a number or one number per axis");
        }
    };
    pair_field("extent", c.grid.extent, false);
    pair_field("n", c.grid.n, true);
    for (int a = 0; a < (c.grid.dim == 2 ? 2 : 1); ++a) {
        if (!(c.grid.extent[a] > 0.0)) rd.fail("grid.extent", rd.get(g, "extent"), "must be positive");
        if (c.grid.n[a] < 2) rd.fail("grid.n", rd.get(g, "n"), "needs at least 2 interior nodes per axis");
    }

    // potential
    const Json& p = rd.section(doc, "potential");
    rd.known_keys(p, "potential.", {"kind", "k", "theta"});
    std::string pk = "doublewell";
    double k = 1.0, theta = 1.0;
    rd.string(p, "potential.", "kind", pk);
    rd.number(p, "potential.", "k", k);
    rd.number(p, "potential.", "theta", theta);
    if (pk == "doublewell" || pk == "quadratic") {
        if (!(k > 0.0)) rd.fail("potential.k", rd.get(p, "k"), "must be positive");
        else c.potential = pk == "doublewell" ? Potential::double_well(k) : Potential::quadratic(k);
    } else if (pk == "log") {
        if (!(theta > 0.0)) rd.fail("potential.theta", rd.get(p, "theta"), "must be positive");
        else c.potential = Potential::logarithmic(theta);
    } else {
        rd.fail("potential.kind", rd.get(p, "kind"), "must be one of doublewell, quadratic, log");
    }

    // graph
    const Json& gr = rd.section(doc, "graph");
    rd.known_keys(gr, "graph.", {"kind", "beta0", "a", "b"});
    std::string gk = "zero";
    double beta0 = 1.0, ga = -1.0, gb = 1.0;
    rd.string(gr, "graph.", "kind", gk);
    rd.number(gr, "graph.", "beta0", beta0);
    rd.number(gr, "graph.", "a", ga);
    rd.number(gr, "graph.", "b", gb);
    if (gk == "zero") {
        c.graph = MonotoneGraph::zero();
    } else if (gk == "sign") {
        if (!(beta0 > 0.0)) rd.fail("graph.beta0", rd.get(gr, "beta0"), "must be positive");
        else c.graph = MonotoneGraph::scaled_sign(beta0);
    } else if (gk == "interval") {
        if (!(ga <= 0.0 && 0.0 <= gb))
            rd.fail("graph.a", rd.get(gr, "a"), "interval graph requires a <= 0 <= b (0 in [a, b])");
        else c.graph = MonotoneGraph::interval(ga, gb);
    } else if (gk == "halfline") {
        c.graph = MonotoneGraph::half_line();
    } else {
        rd.fail("graph.kind", rd.get(gr, "kind"), "must be one of zero, sign, interval, halfline");
    }

    // time stepping
    const Json& t = rd.section(doc, "time");
    rd.known_keys(t, "time.", {"T_end", "tau", "scheme"});
    rd.number(t, "time.", "T_end", c.T_end);
    if (!(c.T_end > 0.0)) rd.fail("time.T_end", rd.get(t, "T_end"), "must be positive");
    rd.optional_number(t, "time.", "tau", c.tau);
    if (c.tau && !(*c.tau > 0.0)) rd.fail("time.tau", rd.get(t, "tau"), "must be positive");
    std::string scheme = "picard";
    rd.string(t, "time.", "scheme", scheme);
    if (scheme == "picard") c.scheme = Scheme::PicardImplicit;
    else if (scheme == "semi") c.scheme = Scheme::SemiImplicit;
    else rd.fail("time.scheme", rd.get(t, "scheme"), "must be picard or semi");

    const Json& pc = rd.section(doc, "picard");
    rd.known_keys(pc, "picard.", {"tol", "max"});
    rd.number(pc, "picard.", "tol", c.picard_tol);
    rd.integer(pc, "picard.", "max", c.picard_max);
    if (!(c.picard_tol > 0.0)) rd.fail("picard.tol", rd.get(pc, "tol"), "must be positive");
    if (c.picard_max < 1) rd.fail("picard.max", rd.get(pc, "max"), "must be at least 1");

    const Json& el = rd.section(doc, "elliptic");
    rd.known_keys(el, "elliptic.", {"tol", "max_outer"});
    rd.number(el, "elliptic.", "tol", c.elliptic_tol);
    rd.integer(el, "elliptic.", "max_outer", c.elliptic_max_outer);
    if (!(c.elliptic_tol > 0.0)) rd.fail("elliptic.tol", rd.get(el, "tol"), "must be positive");
    if (c.elliptic_max_outer < 2) rd.fail("elliptic.max_outer", rd.get(el, "max_outer"), "must be at least 2");

    // initial condition
    const Json& ic = rd.section(doc, "initial");
    rd.known_keys(ic, "initial.", {"kind", "value", "expr", "path"});
    std::string ik = "constant";
    rd.string(ic, "initial.", "kind", ik);
    if (ik == "constant") {
        c.initial.kind = InitialSpec::Kind::Constant;
        rd.number(ic, "initial.", "value", c.initial.value);
    } else if (ik == "expression") {
        c.initial.kind = InitialSpec::Kind::Expression;
        rd.string(ic, "initial.", "expr", c.initial.expression);
        try {
            Expression::parse(c.initial.expression);
        } catch (const ParseError& e) {
            rd.fail("initial.expr", rd.get(ic, "expr"), e.what());
        }
    } else if (ik == "csv") {
        c.initial.kind = InitialSpec::Kind::Values;
        rd.string(ic, "initial.", "path", c.initial.path);
        try {
            c.initial.values = detail::read_csv_column(base_dir / c.initial.path, "u");
        } catch (const IoError& e) {
            rd.fail("initial.path", rd.get(ic, "path"), e.what());
        }
    } else {
        rd.fail("initial.kind", rd.get(ic, "kind"), "must be constant, expression or csv");
    }

    // boundary datum
    const Json& b = rd.section(doc, "boundary");
    rd.known_keys(b, "boundary.", {"kind", "times", "values"});
    std::string bk = "none";
    rd.string(b, "boundary.", "kind", bk);
    if (bk == "none") {
        c.boundary.kind = BoundarySpec::Kind::None;
    } else if (bk == "uniform" || bk == "sides") {
        c.boundary.kind = bk == "uniform" ? BoundarySpec::Kind::Uniform : BoundarySpec::Kind::Sides;
        const std::size_t width = bk == "uniform" ? 1 : (c.grid.dim == 2 ? 4 : 2);
        const Json* times = rd.get(b, "times");
        const Json* values = rd.get(b, "values");
        bool ok = times && times->is_array() && !times->empty();
        if (ok)
            for (const auto& x : *times) ok = ok && x.is_number();
        if (!ok) rd.fail("boundary.times", times, "must be a non-empty array of numbers");
        else
            for (const auto& x : *times) c.boundary.times.push_back(x.get<double>());
        for (std::size_t i = 1; i < c.boundary.times.size(); ++i)
            if (!(c.boundary.times[i] > c.boundary.times[i - 1])) {
                rd.fail("boundary.times", times, "must be strictly increasing");
                break;
            }
        bool vok = values && values->is_array() && times && values->size() == times->size();
        if (vok) {
            for (const auto& row : *values) {
                std::vector<double> r;
                if (width == 1 && row.is_number()) r.push_back(row.get<double>());
                else if (row.is_array() && row.size() == width)
                    for (const auto& x : row) {
                        if (x.is_number()) r.push_back(x.get<double>());
                        else vok = false;
                    }
                else vok = false;
                c.boundary.values.push_back(std::move(r));
            }
        }
        if (!vok)
            rd.fail("boundary.values", values,
                    "needs one entry per time, each " +
                        (width == 1 ? std::string("a number") : "an array of " + std::to_string(width) + " numbers (west, east" +
                                                                 (width == 4 ? ", south, north)" : ")")));
    } else {
        rd.fail("boundary.kind", rd.get(b, "kind"), "must be none, uniform or sides");
    }

    // physical units
    const Json& ph = rd.section(doc, "physical");
    rd.known_keys(ph, "physical.", {"alpha", "m"});
    std::optional<PhysicalSpec> phys;
    if (doc.contains("physical")) {
        phys = PhysicalSpec{};
        rd.number(ph, "physical.", "alpha", phys->alpha);
        rd.number(ph, "physical.", "m", phys->m);
        if (!(phys->alpha > 0.0)) rd.fail("physical.alpha", rd.get(ph, "alpha"), "must be positive");
        if (!(phys->m > 0.0)) rd.fail("physical.m", rd.get(ph, "m"), "must be positive");
    }

    const Json& th = rd.section(doc, "thresholds");
    rd.known_keys(th, "thresholds.", {"M", "rounds"});
    rd.optional_number(th, "thresholds.", "M", c.M);
    rd.integer(th, "thresholds.", "rounds", c.M_rounds);
    if (c.M && !(*c.M > 0.0)) rd.fail("thresholds.M", rd.get(th, "M"), "must be positive");
    if (c.M_rounds < 1) rd.fail("thresholds.rounds", rd.get(th, "rounds"), "must be at least 1");

    const Json& dg = rd.section(doc, "diagnostics");
    rd.known_keys(dg, "diagnostics.", {"energy", "max_principle", "zeta_star"});
    rd.boolean(dg, "diagnostics.", "energy", c.diagnostics_energy);
    rd.boolean(dg, "diagnostics.", "max_principle", c.diagnostics_max_principle);
    rd.boolean(dg, "diagnostics.", "zeta_star", c.diagnostics_zeta_star);

    const Json& o = rd.section(doc, "output");
    rd.known_keys(o, "output.", {"subsample"});
    rd.integer(o, "output.", "subsample", c.subsample);
    if (c.subsample < 1) rd.fail("output.subsample", rd.get(o, "subsample"), "must be at least 1");

    if (const Json* s = rd.get(doc, "seed")) {
        if (s->is_number_unsigned()) c.seed = s->get<std::uint64_t>();
        else rd.fail("seed", s, "must be a nonnegative integer");
    }

    if (!v.empty()) throw ValidationError(v);

    if (phys) c = nondimensionalize(c, *phys);

    // Rules that need the assembled scenario.
    try {
        const Grid grid = c.grid.make();
        const Field u0 = initial_field(c, grid);
        bool inside = true;
        for (double x : u0.values()) inside = inside && c.potential.in_domain(x) && std::isfinite(x);
        if (!inside) {
            rd.fail("initial", nullptr, "initial values must lie in the domain of the " + c.potential.name() + " potential");
        } else {
            const BoundaryDatum datum(grid, c.boundary);
            (void)datum;
            const double M = c.M.value_or(initial_M_estimate(c, u0));
            const Model m = make_model(c, u0, M);
            const double tau = c.tau.value_or(0.5 / m.L());
            if (c.scheme == Scheme::PicardImplicit && !(tau * m.L() < 1.0))
                v.push_back({"time.tau", std::to_string(tau),
                             "Picard contraction bound tau * L < 1 violated (L = " + std::to_string(m.L()) +
                                 ", tau * L = " + std::to_string(tau * m.L()) + ")"});
        }
    } catch (const GridMismatch& e) {
        rd.fail("initial.path", rd.get(ic, "path"), e.what());
    } catch (const Error& e) {
        v.push_back({"scenario", "", e.what()});
    }
    if (!v.empty()) throw ValidationError(v);
    return out;
}

inline LoadedConfig parse_and_validate(const std::filesystem::path& path, const std::vector<std::pair<std::string, Json>>& overrides = {}) {
    Json doc = detail::parse_json_text(detail::read_text(path), path.string());
    for (const auto& [key, value] : overrides) set_dotted(doc, key, value);
    return config_from_json(doc, std::filesystem::absolute(path).parent_path());
}

}  // namespace fbpsim
