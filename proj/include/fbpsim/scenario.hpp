#pragma once

// Resolved scenario description and the derived model constants
// (thresholds, truncation, Lipschitz constant) used by a run.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fbpsim/errors.hpp"
#include "fbpsim/expression.hpp"
#include "fbpsim/graphs.hpp"
#include "fbpsim/grid.hpp"
#include "fbpsim/laplacian.hpp"
#include "fbpsim/potentials.hpp"
#include "fbpsim/signal.hpp"

namespace fbpsim {

enum class Scheme { PicardImplicit, SemiImplicit };

inline std::string scheme_name(Scheme s) { return s == Scheme::PicardImplicit ? "picard" : "semi"; }

struct GridSpec {
    int dim = 1;
    std::array<double, 2> extent{1.0, 1.0};
    std::array<int, 2> n{63, 63};

    Grid make() const {
        return dim == 1 ? Grid::line(extent[0], n[0]) : Grid::rect(extent[0], extent[1], n[0], n[1]);
    }
};

struct InitialSpec {
    enum class Kind { Constant, Expression, Values };
    Kind kind = Kind::Constant;
    double value = 0.0;
    std::string expression;
    /// Node coordinates are multiplied by this before evaluating the
    /// expression (set by nondimensionalization so the expression stays physical).
    double coordinate_scale = 1.0;
    std::vector<double> values;  ///< Kind::Values, one per interior node
    std::string path;            ///< where Values came from, echoed in the manifest
};

/// Boundary datum mu_flat(t). Uniform: one value per sample time.
/// Sides: per sample time, (west, east) in 1D or (west, east, south, north) in 2D,
/// harmonically extended into the interior.
struct BoundarySpec {
    enum class Kind { None, Uniform, Sides };
    Kind kind = Kind::None;
    std::vector<double> times;
    std::vector<std::vector<double>> values;
};

struct PhysicalSpec {
    double alpha = 1.0;
    double m = 1.0;
};

struct ScenarioConfig {
    GridSpec grid;
    Potential potential = Potential::double_well(1.0);
    MonotoneGraph graph = MonotoneGraph::zero();

    double T_end = 1.0;
    std::optional<double> tau;  ///< default 0.5 / L
    Scheme scheme = Scheme::PicardImplicit;
    double picard_tol = 1e-12;
    int picard_max = 2000;
    double elliptic_tol = 1e-9;
    int elliptic_max_outer = 200;

    InitialSpec initial;
    BoundarySpec boundary;
    std::optional<PhysicalSpec> physical;  ///< echo of the physical block, already applied

    std::optional<double> M;  ///< bound on ||mu - mu_flat||_inf; estimated when absent
    int M_rounds = 6;

    bool diagnostics_energy = true;
    bool diagnostics_max_principle = true;
    bool diagnostics_zeta_star = true;
    int subsample = 1;
    std::uint64_t seed = 0;
};

/// Initial concentration sampled at the interior nodes.
inline Field initial_field(const ScenarioConfig& cfg, const Grid& g) {
    const auto& ic = cfg.initial;
    switch (ic.kind) {
        case InitialSpec::Kind::Constant:
            return Field(g, ic.value);
        case InitialSpec::Kind::Expression: {
            const auto e = Expression::parse(ic.expression);
            const double s = ic.coordinate_scale;
            return Field::from_function(g, [&](double x, double y) { return e(s * x, s * y); });
        }
        case InitialSpec::Kind::Values:
            return Field(g, ic.values);
    }
    throw DomainError("unknown initial condition kind");
}

/// mu_flat(t) as an interior field (the harmonic extension of the trace).
class BoundaryDatum {
public:
    BoundaryDatum(const Grid& g, const BoundarySpec& spec) : grid_(g), kind_(spec.kind) {
        if (kind_ == BoundarySpec::Kind::None) return;
        const std::size_t width = spec.values.empty() ? 0 : spec.values.front().size();
        for (std::size_t c = 0; c < width; ++c) {
            std::vector<double> col;
            for (const auto& row : spec.values) col.push_back(row.at(c));
            channels_.emplace_back(spec.times, std::move(col));
        }
        const std::size_t expected =
            kind_ == BoundarySpec::Kind::Uniform ? 1 : (g.dim() == 1 ? 2 : 4);
        if (channels_.size() != expected)
            throw DomainError("boundary signal needs " + std::to_string(expected) + " value(s) per sample");
    }

    Field operator()(double t) const {
        switch (kind_) {
            case BoundarySpec::Kind::None:
                return Field(grid_);
            case BoundarySpec::Kind::Uniform:
                // constants are discrete-harmonic, no solve needed
                return Field(grid_, channels_[0](t));
            case BoundarySpec::Kind::Sides: {
                BoundaryTrace tr;
                const int ny = grid_.dim() == 2 ? grid_.n(1) : 1;
                tr.west.assign(ny, channels_[0](t));
                tr.east.assign(ny, channels_[1](t));
                if (grid_.dim() == 2) {
                    tr.south.assign(grid_.n(0), channels_[2](t));
                    tr.north.assign(grid_.n(0), channels_[3](t));
                }
                return harmonic_extend(grid_, tr, 1e-13);
            }
        }
        return Field(grid_);
    }

    /// sup over sample times of the largest boundary value (the extension
    /// obeys the discrete maximum principle, so this bounds ||mu_flat||_inf).
    double max_abs() const {
        double m = 0.0;
        for (const auto& c : channels_) m = std::max(m, c.max_abs());
        return m;
    }

private:
    Grid grid_;
    BoundarySpec::Kind kind_;
    std::vector<PiecewiseLinear> channels_;
};

/// Rescales a scenario given in physical units to the nondimensional problem:
/// time by T0 = alpha, length by L0 = sqrt(m * alpha); the rate graph
/// beta~(r) = beta(r / T0) keeps sign and half-line graphs and stretches an
/// interval [a, b] to [T0 a, T0 b].
inline ScenarioConfig nondimensionalize(ScenarioConfig cfg, const PhysicalSpec& phys) {
    if (!(phys.alpha > 0.0) || !(phys.m > 0.0))
        throw DomainError("nondimensionalization needs alpha > 0 and m > 0");
    const double T0 = phys.alpha;
    const double L0 = std::sqrt(phys.m * phys.alpha);
    for (int a = 0; a < cfg.grid.dim; ++a) cfg.grid.extent[a] /= L0;
    cfg.T_end /= T0;
    if (cfg.tau) *cfg.tau /= T0;
    for (double& t : cfg.boundary.times) t /= T0;
    if (const auto* iv = std::get_if<graph::IndicatorInterval>(&cfg.graph.variant()))
        cfg.graph = MonotoneGraph::interval(T0 * iv->a, T0 * iv->b);
    cfg.initial.coordinate_scale *= L0;
    cfg.physical = phys;
    return cfg;
}

/// Structural constants of a run, fixed before time stepping.
struct Model {
    Grid grid;
    MonotoneGraph graph;
    Potential potential;
    TruncatedPotential psi;
    double K1 = 0.0;
    double M = 0.0;
    Thresholds kstar{};
    double L() const { return psi.lipschitz(); }
};

/// Thresholds for M widened to contain the initial range, then the
/// curvature-safe truncation around them.
inline Model make_model(const ScenarioConfig& cfg, const Field& u0, double M) {
    const Grid g = cfg.grid.make();
    Thresholds k = thresholds(cfg.potential, M);
    k.low = std::min(k.low, min_value(u0));
    k.high = std::max(k.high, max_value(u0));
    const auto [K_low, K_high] = truncation_points(cfg.potential, k.low, k.high);
    return Model{g, cfg.graph, cfg.potential, truncate(cfg.potential, K_low, K_high),
                 curvature_lower_bound(cfg.potential), M, k};
}

/// First guess for M before any trial run: |mu| <= ||mu_flat + psi'(u)||_inf
/// by the maximum principle of the elliptic problem, so this covers t = 0.
inline double initial_M_estimate(const ScenarioConfig& cfg, const Field& u0) {
    double m = 0.0;
    for (double v : u0.values()) m = std::max(m, std::abs(psi_prime(cfg.potential, v)));
    const BoundaryDatum datum(u0.grid(), cfg.boundary);
    return std::max(m + 2.0 * datum.max_abs(), 1e-3);
}

}  // namespace fbpsim
