#include <gtest/gtest.h>

#include <random>

#include "fbpsim/potentials.hpp"
#include "oracles.hpp"

using namespace fbpsim;

namespace {

std::vector<Potential> all_potentials() {
    return {Potential::double_well(1.0), Potential::double_well(2.5), Potential::quadratic(3.0),
            Potential::logarithmic(0.2)};
}

// sample points strictly inside the domain
std::vector<double> samples(const Potential& p) {
    const auto [a, b] = p.domain();
    const double lo = std::isfinite(a) ? a + 0.02 : -1.5, hi = std::isfinite(b) ? b - 0.02 : 2.5;
    std::vector<double> x;
    for (int i = 0; i <= 200; ++i) x.push_back(lo + (hi - lo) * i / 200.0);
    return x;
}

}  // namespace

TEST(Potential, Examples) {
    EXPECT_DOUBLE_EQ(psi_value(Potential::double_well(1.0), 0.5), 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(curvature_lower_bound(Potential::double_well(1.0)), 1.0);
    EXPECT_DOUBLE_EQ(curvature_lower_bound(Potential::quadratic(1.0)), 0.0);
    EXPECT_DOUBLE_EQ(curvature_lower_bound(Potential::logarithmic(0.3)), 0.0);
    EXPECT_NEAR(psi_value(Potential::logarithmic(1.0), 0.5), 0.0, 1e-15);
}

TEST(Potential, DerivativesMatchFiniteDifferences) {
    for (const auto& p : all_potentials()) {
        for (double x : samples(p)) {
            const double h = 1e-6;
            const double d1 = (psi_value(p, x + h) - psi_value(p, x - h)) / (2 * h);
            const double d2 = (psi_prime(p, x + h) - psi_prime(p, x - h)) / (2 * h);
            EXPECT_NEAR(psi_prime(p, x), d1, 1e-6 * (1 + std::abs(d1))) << p.name() << " x=" << x;
            EXPECT_NEAR(psi_second(p, x), d2, 1e-5 * (1 + std::abs(d2))) << p.name() << " x=" << x;
        }
    }
}

TEST(Potential, CurvatureBoundHoldsOnSamples) {
    for (const auto& p : all_potentials()) {
        const double K1 = curvature_lower_bound(p);
        double worst = std::numeric_limits<double>::infinity();
        for (double x : samples(p)) worst = std::min(worst, psi_second(p, x));
        EXPECT_GE(worst, -K1 - 1e-12) << p.name();
    }
    // the bound is attained for the double well
    EXPECT_DOUBLE_EQ(psi_second(Potential::double_well(2.5), 0.5), -2.5);
}

TEST(Potential, OutsideDomainThrows) {
    EXPECT_THROW(psi_value(Potential::logarithmic(1.0), 1.0), DomainError);
    EXPECT_THROW(psi_prime(Potential::logarithmic(1.0), -0.1), DomainError);
    EXPECT_THROW(Potential::double_well(0.0), DomainError);
}

TEST(Truncation, IsC2AtTheJunctions) {
    for (const auto& p : all_potentials()) {
        const auto [a, b] = p.domain();
        const double kl = std::isfinite(a) ? 0.1 : -0.7, kh = std::isfinite(b) ? 0.9 : 1.6;
        const auto t = truncate(p, kl, kh);
        for (double k : {kl, kh}) {
            const double e = 1e-9;
            EXPECT_NEAR(t.value(k - e), t.value(k + e), 1e-7) << p.name();
            EXPECT_NEAR(t.prime(k - e), t.prime(k + e), 1e-6 * (1 + std::abs(t.prime(k)))) << p.name();
            EXPECT_NEAR(t.second(k - e), t.second(k + e), 1e-5 * (1 + std::abs(t.second(k)))) << p.name();
        }
        // inside it is the original
        EXPECT_DOUBLE_EQ(t.value(0.5 * (kl + kh)), psi_value(p, 0.5 * (kl + kh)));
        // outside it is a quadratic: constant second derivative
        EXPECT_DOUBLE_EQ(t.second(kh + 3.0), psi_second(p, kh));
        EXPECT_DOUBLE_EQ(t.second(kl - 3.0), psi_second(p, kl));
    }
}

TEST(Truncation, DerivativeIsGloballyLipschitzWithReportedConstant) {
    std::mt19937_64 rng(17);
    for (const auto& p : all_potentials()) {
        const auto [a, b] = p.domain();
        const double kl = std::isfinite(a) ? 0.05 : -0.6, kh = std::isfinite(b) ? 0.95 : 1.7;
        const auto t = truncate(p, kl, kh);
        // grid maximum of |psi''| on [kl, kh] as an independent estimate
        double grid_max = 0.0;
        for (int i = 0; i <= 100000; ++i) grid_max = std::max(grid_max, std::abs(psi_second(p, kl + (kh - kl) * i / 1e5)));
        EXPECT_NEAR(t.lipschitz(), grid_max, 1e-6 * grid_max) << p.name();

        std::uniform_real_distribution<double> x(kl - 5.0, kh + 5.0);
        for (int s = 0; s < 5000; ++s) {
            const double u = x(rng), v = x(rng);
            if (u == v) continue;
            EXPECT_LE(std::abs(t.prime(u) - t.prime(v)), t.lipschitz() * std::abs(u - v) * (1 + 1e-12) + 1e-14)
                << p.name();
        }
    }
}

TEST(Truncation, RejectsNegativeCurvatureAtTheCutPoints) {
    EXPECT_THROW(truncate(Potential::double_well(1.0), 0.4, 2.0), CurvatureError);
    EXPECT_THROW(truncate(Potential::double_well(1.0), 1.0, 0.0), DomainError);
}

TEST(Thresholds, DoubleWellMatchesRootsOfTheCubic) {
    const auto p = Potential::double_well(1.0);
    const auto th = thresholds(p, 1.0);
    // psi'(u) = 2u(2u-1)(u-1) = +-1 has exactly one real root each
    auto hi = oracle::roots([](double u) { return 2 * u * (2 * u - 1) * (u - 1) - 1.0; }, -3, 3);
    auto lo = oracle::roots([](double u) { return 2 * u * (2 * u - 1) * (u - 1) + 1.0; }, -3, 3);
    ASSERT_EQ(hi.size(), 1u);
    ASSERT_EQ(lo.size(), 1u);
    EXPECT_NEAR(th.high, hi[0], 1e-8);
    EXPECT_NEAR(th.low, lo[0], 1e-8);
    EXPECT_GE(psi_prime(p, th.high), 1.0);
    EXPECT_LE(psi_prime(p, th.low), -1.0);
}

TEST(Thresholds, LogarithmicIsTheLogisticFunction) {
    const auto th = thresholds(Potential::logarithmic(1.0), 5.0);
    EXPECT_NEAR(th.high, 1.0 / (1.0 + std::exp(-5.0)), 1e-9);
    EXPECT_NEAR(th.low, 1.0 / (1.0 + std::exp(5.0)), 1e-9);
}

TEST(Thresholds, QuadraticIsLinear) {
    const auto th = thresholds(Potential::quadratic(1.0), 2.0);
    EXPECT_NEAR(th.high, 2.0, 1e-9);
    EXPECT_NEAR(th.low, -2.0, 1e-9);
    EXPECT_THROW(thresholds(Potential::quadratic(1.0), 0.0), DomainError);
}

TEST(Thresholds, TruncationPointsHaveNonnegativeCurvature) {
    for (const auto& p : all_potentials()) {
        for (double M : {1e-3, 0.1, 1.0, 5.0}) {
            const auto th = thresholds(p, M);
            const auto [Kl, Kh] = truncation_points(p, th.low, th.high);
            EXPECT_LT(Kl, th.low);
            EXPECT_GT(Kh, th.high);
            EXPECT_TRUE(p.in_domain(Kl) && p.in_domain(Kh));
            EXPECT_GE(psi_second(p, Kl), 0.0);
            EXPECT_GE(psi_second(p, Kh), 0.0);
        }
    }
}

TEST(Thresholds, UnreachableLevelInsideABoundedDomainIsReported) {
    // theta ln(u / (1 - u)) = 10 needs 1 - u ~ 2e-22, below double resolution near 1
    EXPECT_THROW(thresholds(Potential::logarithmic(0.2), 10.0), NotFound);
}
