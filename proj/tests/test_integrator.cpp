#include <gtest/gtest.h>

#include "fbpsim/integrator.hpp"
#include "oracles.hpp"

using namespace fbpsim;

namespace {

ScenarioConfig line_config(int n, Potential p, MonotoneGraph g, double T_end, double tau) {
    ScenarioConfig c;
    c.grid.dim = 1;
    c.grid.n = {n, 1};
    c.potential = p;
    c.graph = g;
    c.T_end = T_end;
    c.tau = tau;
    return c;
}

void set_values(ScenarioConfig& c, std::vector<double> v) {
    c.initial.kind = InitialSpec::Kind::Values;
    c.initial.values = std::move(v);
}

std::vector<double> bumpy(int n, double mean, double amp) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
        const double x = (i + 1.0) / (n + 1.0);
        v[i] = mean + amp * (std::sin(2 * std::numbers::pi * x) + 0.5 * std::sin(7 * std::numbers::pi * x));
    }
    return v;
}

// scalar recursion for the amplitude of sine mode j under psi = k u^2 / 2, beta = 0:
// (I + A) w = -k A u^{n+1}, u^{n+1} = u^n + tau w
double eigen_amplitude(int n, int j, double k, double tau, int steps) {
    const double lam = oracle::sine_eigenvalue(n, j);
    double a = 1.0;
    for (int s = 0; s < steps; ++s) a /= 1.0 + tau * k * lam / (1.0 + lam);
    return a;
}

}  // namespace

TEST(Schedule, StepCountAndLength) {
    const Schedule a(1.0, 0.3, Scheme::PicardImplicit, 1.0);
    EXPECT_EQ(a.steps(), 4);
    EXPECT_DOUBLE_EQ(a.step_length(), 0.25);
    const Schedule b(1.0, 0.1, Scheme::PicardImplicit, 1.0);
    EXPECT_EQ(b.steps(), 10);
}

TEST(Schedule, ContractionBoundIsEnforcedForPicardOnly) {
    EXPECT_THROW(Schedule(1.0, 0.5, Scheme::PicardImplicit, 2.0), DomainError);
    EXPECT_THROW(Schedule(1.0, 0.6, Scheme::PicardImplicit, 2.0), DomainError);
    EXPECT_NO_THROW(Schedule(1.0, 0.6, Scheme::SemiImplicit, 2.0));
    try {
        Schedule(1.0, 0.6, Scheme::PicardImplicit, 2.0);
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("tau * L < 1"), std::string::npos);
    }
}

TEST(Integrator, ZeroStateStaysZero) {
    auto c = line_config(31, Potential::quadratic(1.0), MonotoneGraph::zero(), 1.0, 0.1);
    const RunResult r = run(c);
    ASSERT_TRUE(r.ok()) << *r.error_message;
    EXPECT_EQ(r.trajectory.size(), 11u);
    for (const auto& s : r.trajectory) {
        EXPECT_EQ(linf_norm(s.u), 0.0);
        EXPECT_EQ(linf_norm(s.mu), 0.0);
    }
}

TEST(Integrator, EigenmodeFollowsTheScalarRecursion) {
    const int n = 63;
    for (int j : {1, 3, 8}) {
        auto c = line_config(n, Potential::quadratic(1.5), MonotoneGraph::zero(), 0.5, 0.05);
        set_values(c, oracle::sine_mode(n, j));
        const RunResult r = run(c);
        ASSERT_TRUE(r.ok()) << *r.error_message;
        const auto e = oracle::sine_mode(n, j);
        for (std::size_t s = 0; s < r.trajectory.size(); ++s) {
            const double a = eigen_amplitude(n, j, 1.5, 0.05, static_cast<int>(s));
            for (int k = 0; k < n; ++k) ASSERT_NEAR(r.trajectory[s].u[k], a * e[k], 1e-11 * std::abs(e[k]) + 1e-13);
        }
    }
}

TEST(Integrator, EigenmodeErrorIsFirstOrderInTau) {
    const int n = 31, j = 2;
    const double k = 1.0, T = 1.0;
    const double rate = k * oracle::sine_eigenvalue(n, j) / (1.0 + oracle::sine_eigenvalue(n, j));
    const double exact = std::exp(-rate * T);
    std::vector<double> err;
    for (double tau : {0.1, 0.05, 0.025, 0.0125}) {
        auto c = line_config(n, Potential::quadratic(k), MonotoneGraph::zero(), T, tau);
        set_values(c, oracle::sine_mode(n, j));
        const RunResult r = run(c);
        ASSERT_TRUE(r.ok());
        const auto e = oracle::sine_mode(n, j);
        err.push_back(std::abs(r.trajectory.back().u[n / 4] / e[n / 4] - exact));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double order = std::log2(err[i - 1] / err[i]);
        EXPECT_NEAR(order, 1.0, 0.1);
    }
}

TEST(Integrator, PicardContractionRatioStaysBelowTauL) {
    const int n = 127;
    for (double tl : {0.5, 0.9}) {
        auto c = line_config(n, Potential::double_well(1.0), MonotoneGraph::scaled_sign(0.05), 2.0, 0.0);
        set_values(c, bumpy(n, 0.5, 0.3));
        c.M = 3.0;
        const Grid grid = c.grid.make();
        const Field u0 = initial_field(c, grid);
        const Model m = make_model(c, u0, *c.M);
        c.tau = tl / m.L();
        const RunResult r = simulate(c, m, u0);
        ASSERT_TRUE(r.ok()) << *r.error_message;
        double worst = 0.0;
        for (const auto& st : r.stats) worst = std::max(worst, st.max_contraction_ratio(1e-9));
        EXPECT_LE(worst, tl) << "tau L = " << tl;
        EXPECT_GT(worst, 0.0);
    }
}

TEST(Integrator, PicardStallIsReportedWithItsContext) {
    auto c = line_config(31, Potential::double_well(1.0), MonotoneGraph::zero(), 1.0, 0.0);
    set_values(c, bumpy(31, 0.5, 0.3));
    c.picard_max = 2;
    c.tau = 0.1;
    const RunResult r = run(c);
    ASSERT_FALSE(r.ok());
    EXPECT_EQ(*r.error_kind, "PicardNonConvergence");
    EXPECT_NE(r.error_message->find("reduce tau"), std::string::npos);
    EXPECT_EQ(r.trajectory.size(), 1u);
}

TEST(Integrator, HalfLineMakesEvolutionIrreversible) {
    const int n = 63;
    auto c = line_config(n, Potential::double_well(1.0), MonotoneGraph::half_line(), 3.0, 0.05);
    set_values(c, bumpy(n, 0.5, 0.35));
    const RunResult r = run(c);
    ASSERT_TRUE(r.ok()) << *r.error_message;
    double moved = 0.0;
    for (std::size_t s = 1; s < r.trajectory.size(); ++s) {
        for (int k = 0; k < n; ++k) {
            EXPECT_GE(r.trajectory[s].u[k], r.trajectory[s - 1].u[k] - 1e-14);
            EXPECT_GE(r.trajectory[s].w[k], -1e-14);
        }
        moved = std::max(moved, linf_norm(r.trajectory[s].u - r.trajectory[s - 1].u));
    }
    EXPECT_GT(moved, 1e-4);
}

TEST(Integrator, IntervalGraphBoundsTheRate) {
    const int n = 63;
    auto c = line_config(n, Potential::double_well(1.0), MonotoneGraph::interval(-0.01, 0.02), 2.0, 0.05);
    set_values(c, bumpy(n, 0.5, 0.35));
    const RunResult r = run(c);
    ASSERT_TRUE(r.ok()) << *r.error_message;
    bool saturated = false;
    for (std::size_t s = 1; s < r.trajectory.size(); ++s)
        for (int k = 0; k < n; ++k) {
            const double w = r.trajectory[s].w[k];
            EXPECT_GE(w, -0.01 - 1e-14);
            EXPECT_LE(w, 0.02 + 1e-14);
            if (w == -0.01 || w == 0.02) saturated = true;
        }
    EXPECT_TRUE(saturated);
}

TEST(Integrator, SemiImplicitAgreesToFirstOrder) {
    const int n = 63;
    std::vector<double> gap;
    for (double tau : {0.04, 0.02, 0.01}) {
        double final_u[2][63];
        for (int s = 0; s < 2; ++s) {
            auto c = line_config(n, Potential::double_well(1.0), MonotoneGraph::scaled_sign(0.02), 1.0, tau);
            c.scheme = s == 0 ? Scheme::PicardImplicit : Scheme::SemiImplicit;
            c.M = 3.0;
            set_values(c, bumpy(n, 0.5, 0.3));
            const RunResult r = run(c);
            ASSERT_TRUE(r.ok()) << *r.error_message;
            for (int k = 0; k < n; ++k) final_u[s][k] = r.trajectory.back().u[k];
        }
        double d = 0.0;
        for (int k = 0; k < n; ++k) d = std::max(d, std::abs(final_u[0][k] - final_u[1][k]));
        gap.push_back(d);
    }
    EXPECT_GT(gap[0], 0.0);
    EXPECT_NEAR(gap[0] / gap[1], 2.0, 0.3);
    EXPECT_NEAR(gap[1] / gap[2], 2.0, 0.3);
}

TEST(Integrator, StepsLandExactlyOnTheBoundarySchedule) {
    auto c = line_config(15, Potential::quadratic(1.0), MonotoneGraph::zero(), 1.0, 0.3);
    c.boundary.kind = BoundarySpec::Kind::Uniform;
    c.boundary.times = {0.0, 1.0};
    c.boundary.values = {{0.0}, {2.0}};
    const RunResult r = run(c);
    ASSERT_TRUE(r.ok());
    ASSERT_EQ(r.trajectory.size(), 5u);
    EXPECT_EQ(r.trajectory.back().t, 1.0);
    for (const auto& s : r.trajectory)
        for (int k = 0; k < 15; ++k) EXPECT_DOUBLE_EQ(s.mu_flat[k], 2.0 * s.t);
}

TEST(Integrator, MLoopEndsConsistent) {
    const int n = 63;
    auto c = line_config(n, Potential::double_well(1.0), MonotoneGraph::scaled_sign(0.05), 2.0, 0.05);
    set_values(c, bumpy(n, 0.5, 0.3));
    c.boundary.kind = BoundarySpec::Kind::Uniform;
    c.boundary.times = {0.0, 2.0};
    c.boundary.values = {{0.0}, {0.6}};
    const RunResult r = run(c);
    ASSERT_TRUE(r.ok()) << *r.error_message;
    EXPECT_TRUE(r.m_consistent);
    EXPECT_LE(r.M_run, r.model.M * (1 + 1e-12));
    double measured = 0.0;
    for (const auto& s : r.trajectory) measured = std::max(measured, mu_shift_linf(s));
    EXPECT_EQ(measured, r.M_run);
}

TEST(Integrator, FixedMRunsOnceAndReportsInconsistency) {
    const int n = 31;
    auto c = line_config(n, Potential::double_well(1.0), MonotoneGraph::zero(), 0.5, 0.05);
    set_values(c, bumpy(n, 0.5, 0.4));
    c.M = 1e-3;
    const RunResult r = run(c);
    ASSERT_TRUE(r.ok()) << *r.error_message;
    EXPECT_EQ(r.M_rounds, 1);
    EXPECT_FALSE(r.m_consistent);
}

TEST(Integrator, InitialValueOutsideDomainIsRejected) {
    auto c = line_config(7, Potential::logarithmic(0.5), MonotoneGraph::zero(), 1.0, 0.1);
    c.initial.value = 1.2;
    EXPECT_THROW(run(c), DomainError);
}

TEST(Nondimensionalize, Examples) {
    ScenarioConfig c;
    c.grid.extent = {3.0, 1.0};
    c.T_end = 10.0;
    c.tau = 0.2;
    c.graph = MonotoneGraph::interval(-0.1, 0.2);
    c.boundary.times = {0.0, 4.0};
    const auto d = nondimensionalize(c, {2.0, 0.5});  // L0 = 1, T0 = 2
    EXPECT_DOUBLE_EQ(d.grid.extent[0], 3.0);
    EXPECT_DOUBLE_EQ(d.T_end, 5.0);
    EXPECT_DOUBLE_EQ(*d.tau, 0.1);
    EXPECT_DOUBLE_EQ(d.boundary.times[1], 2.0);
    const auto& iv = std::get<graph::IndicatorInterval>(d.graph.variant());
    EXPECT_DOUBLE_EQ(iv.a, -0.2);
    EXPECT_DOUBLE_EQ(iv.b, 0.4);

    const auto e = nondimensionalize(c, {4.0, 1.0});  // L0 = 2, T0 = 4
    EXPECT_DOUBLE_EQ(e.grid.extent[0], 1.5);
    EXPECT_DOUBLE_EQ(e.initial.coordinate_scale, 2.0);
    EXPECT_DOUBLE_EQ(e.T_end, 2.5);

    EXPECT_THROW(nondimensionalize(c, {0.0, 1.0}), DomainError);
}

TEST(Nondimensionalize, IdentityUnitsChangeNothing) {
    ScenarioConfig c;
    c.graph = MonotoneGraph::scaled_sign(0.3);
    const auto d = nondimensionalize(c, {1.0, 1.0});
    EXPECT_EQ(d.grid.extent, c.grid.extent);
    EXPECT_EQ(d.T_end, c.T_end);
    EXPECT_EQ(d.graph.name(), c.graph.name());
}
