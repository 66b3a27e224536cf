#pragma once

// Coarse-grain free energies psi, their quadratic-tail truncation psi_*, and
// the threshold constants that confine the concentration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "fbpsim/errors.hpp"

namespace fbpsim {

namespace potential {

/// k (u - 1)^2 u^2, non-convex on the spinodal interval.
struct DoubleWell {
    double k;
};

/// k u^2 / 2.
struct Quadratic {
    double k;
};

/// theta (u ln u + (1-u) ln(1-u)) + theta ln 2 on (0, 1); the offset makes psi >= 0.
struct Logarithmic {
    double theta;
};

}  // namespace potential

class Potential {
public:
    using Variant = std::variant<potential::DoubleWell, potential::Quadratic, potential::Logarithmic>;

    static Potential double_well(double k) { return Potential(potential::DoubleWell{positive(k, "k")}); }
    static Potential quadratic(double k) { return Potential(potential::Quadratic{positive(k, "k")}); }
    static Potential logarithmic(double theta) {
        return Potential(potential::Logarithmic{positive(theta, "theta")});
    }

    const Variant& variant() const { return v_; }

    /// Open domain (a, b); infinite ends are +-inf.
    std::pair<double, double> domain() const {
        if (std::holds_alternative<potential::Logarithmic>(v_)) return {0.0, 1.0};
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {-inf, inf};
    }
    bool in_domain(double r) const {
        auto [a, b] = domain();
        return r > a && r < b;
    }

    std::string name() const {
        return std::visit(
            [](const auto& p) -> std::string {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, potential::DoubleWell>) return "doublewell";
                else if constexpr (std::is_same_v<P, potential::Quadratic>) return "quadratic";
                else return "log";
            },
            v_);
    }

private:
    explicit Potential(Variant v) : v_(v) {}
    static double positive(double x, const char* what) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw DomainError(std::string("potential parameter ") + what + " must be positive");
        return x;
    }
    Variant v_;
};

namespace detail {

inline void require_domain(const Potential& p, double r) {
    if (!p.in_domain(r))
        throw DomainError("argument " + std::to_string(r) + " outside the domain of the " +
                          p.name() + " potential");
}

}  // namespace detail

inline double psi_value(const Potential& p, double r) {
    detail::require_domain(p, r);
    return std::visit(
        [&](const auto& v) -> double {
            using P = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<P, potential::DoubleWell>) {
                const double s = (r - 1.0) * r;
                return v.k * s * s;
            } else if constexpr (std::is_same_v<P, potential::Quadratic>) {
                return 0.5 * v.k * r * r;
            } else {
                return v.theta * (r * std::log(r) + (1.0 - r) * std::log1p(-r) + std::numbers::ln2);
            }
        },
        p.variant());
}

inline double psi_prime(const Potential& p, double r) {
    detail::require_domain(p, r);
    return std::visit(
        [&](const auto& v) -> double {
            using P = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<P, potential::DoubleWell>) {
                return v.k * 2.0 * r * (2.0 * r - 1.0) * (r - 1.0);
            } else if constexpr (std::is_same_v<P, potential::Quadratic>) {
                return v.k * r;
            } else {
                return v.theta * (std::log(r) - std::log1p(-r));
            }
        },
        p.variant());
}

inline double psi_second(const Potential& p, double r) {
    detail::require_domain(p, r);
    return std::visit(
        [&](const auto& v) -> double {
            using P = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<P, potential::DoubleWell>) {
                return v.k * (12.0 * r * r - 12.0 * r + 2.0);
            } else if constexpr (std::is_same_v<P, potential::Quadratic>) {
                return v.k;
            } else {
                return v.theta / (r * (1.0 - r));
            }
        },
        p.variant());
}

/// Smallest K1 >= 0 with psi'' >= -K1 on the whole domain.
inline double curvature_lower_bound(const Potential& p) {
    return std::visit(
        [](const auto& v) -> double {
            using P = std::decay_t<decltype(v)>;
            // 12u^2 - 12u + 2 has its minimum -1 at u = 1/2.
            if constexpr (std::is_same_v<P, potential::DoubleWell>) return v.k;
            else return 0.0;
        },
        p.variant());
}

/// max |psi''| over [lo, hi] (closed forms: psi'' is a convex function of u
/// for every variant, so the max of |psi''| is attained at an end point or,
/// for the double well, at the vertex u = 1/2).
inline double max_abs_curvature(const Potential& p, double lo, double hi) {
    double m = std::max(std::abs(psi_second(p, lo)), std::abs(psi_second(p, hi)));
    if (const auto* dw = std::get_if<potential::DoubleWell>(&p.variant())) {
        if (lo <= 0.5 && 0.5 <= hi) m = std::max(m, dw->k);
    }
    return m;
}

/// psi with C^2 quadratic extensions outside [k_low, k_high]; psi_*' is globally Lipschitz.
class TruncatedPotential {
public:
    TruncatedPotential(Potential base, double k_low, double k_high)
        : base_(base), k_low_(k_low), k_high_(k_high) {
        if (!(k_low < k_high))
            throw DomainError("truncation requires k_low < k_high");
        if (!base.in_domain(k_low) || !base.in_domain(k_high))
            throw DomainError("truncation points must lie in the potential's domain");
        lo_ = {psi_value(base, k_low), psi_prime(base, k_low), psi_second(base, k_low)};
        hi_ = {psi_value(base, k_high), psi_prime(base, k_high), psi_second(base, k_high)};
        if (lo_.d2 < 0.0 || hi_.d2 < 0.0)
            throw CurvatureError("psi'' must be nonnegative at both truncation points (got " +
                                 std::to_string(lo_.d2) + ", " + std::to_string(hi_.d2) + ")");
        lipschitz_ = max_abs_curvature(base, k_low, k_high);
    }

    const Potential& base() const { return base_; }
    double k_low() const { return k_low_; }
    double k_high() const { return k_high_; }
    /// Lipschitz constant of psi_*'.
    double lipschitz() const { return lipschitz_; }

    double value(double r) const {
        if (r > k_high_) return taylor(hi_, r - k_high_);
        if (r < k_low_) return taylor(lo_, r - k_low_);
        return psi_value(base_, r);
    }
    double prime(double r) const {
        if (r > k_high_) return hi_.d1 + hi_.d2 * (r - k_high_);
        if (r < k_low_) return lo_.d1 + lo_.d2 * (r - k_low_);
        return psi_prime(base_, r);
    }
    double second(double r) const {
        if (r > k_high_) return hi_.d2;
        if (r < k_low_) return lo_.d2;
        return psi_second(base_, r);
    }

private:
    struct Jet {
        double d0, d1, d2;
    };
    static double taylor(const Jet& j, double d) { return j.d0 + j.d1 * d + 0.5 * j.d2 * d * d; }

    Potential base_;
    double k_low_, k_high_;
    Jet lo_{}, hi_{};
    double lipschitz_ = 0.0;
};

inline TruncatedPotential truncate(const Potential& p, double k_low, double k_high) {
    return TruncatedPotential(p, k_low, k_high);
}

// Uniform evaluation so callers can take either flavour.
inline double psi_value(const TruncatedPotential& p, double r) { return p.value(r); }
inline double psi_prime(const TruncatedPotential& p, double r) { return p.prime(r); }
inline double psi_second(const TruncatedPotential& p, double r) { return p.second(r); }

struct Thresholds {
    double low;   ///< psi' <= -M on (a, low]
    double high;  ///< psi' >=  M on [high, b)
};

namespace detail {

// Points where psi' turns monotone for good: psi' is increasing on
// [right_anchor, b) and on (a, left_anchor], and psi'(anchor) has the right
// sign for any M > 0.
inline std::pair<double, double> monotone_anchors(const Potential& p) {
    return std::visit(
        [](const auto& v) -> std::pair<double, double> {
            using P = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<P, potential::DoubleWell>) {
                // inflection points of psi', roots of 12u^2 - 12u + 2
                const double d = std::sqrt(3.0) / 6.0;
                return {0.5 - d, 0.5 + d};
            } else if constexpr (std::is_same_v<P, potential::Quadratic>) {
                return {0.0, 0.0};
            } else {
                return {0.5, 0.5};
            }
        },
        p.variant());
}

// Root of psi'(r) = target on an interval where psi' is increasing.
inline double bisect_increasing(const Potential& p, double target, double lo, double hi, double tol) {
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (psi_prime(p, mid) >= target) hi = mid;
        else lo = mid;
    }
    return hi;
}

}  // namespace detail

/// Thresholds (low, high) with psi' >= M on [high, b) and psi' <= -M on (a, low];
/// `high` is the smallest and `low` the largest such point, to within `tol`.
/// The returned `high` satisfies psi'(high) >= M and `low` psi'(low) <= -M.
inline Thresholds thresholds(const Potential& p, double M, double tol = 1e-10) {
    if (!(M > 0.0) || !std::isfinite(M)) throw DomainError("thresholds need M > 0");
    const auto [a, b] = p.domain();
    const auto [left_anchor, right_anchor] = detail::monotone_anchors(p);

    // Right branch: grow the bracket until psi' >= M.
    double lo = right_anchor, hi = right_anchor;
    double step = 1.0;
    bool found = false;
    for (int it = 0; it < 200; ++it) {
        hi = std::isfinite(b) ? 0.5 * (lo + b) : right_anchor + step;
        if (!p.in_domain(hi)) break;
        if (psi_prime(p, hi) >= M) {
            found = true;
            break;
        }
        lo = hi;
        step *= 2.0;
    }
    if (!found) throw NotFound("psi' never reaches M = " + std::to_string(M) + " on the right");
    const double high = detail::bisect_increasing(p, M, lo, hi, tol);

    // Left branch, mirrored.
    double r_hi = left_anchor, r_lo = left_anchor;
    step = 1.0;
    found = false;
    for (int it = 0; it < 200; ++it) {
        r_lo = std::isfinite(a) ? 0.5 * (a + r_hi) : left_anchor - step;
        if (!p.in_domain(r_lo)) break;
        if (psi_prime(p, r_lo) <= -M) {
            found = true;
            break;
        }
        r_hi = r_lo;
        step *= 2.0;
    }
    if (!found) throw NotFound("psi' never reaches -M = " + std::to_string(-M) + " on the left");
    // psi'(r) <= -M  <=>  not (psi'(r) > -M); bisect keeping psi'(lo) <= -M.
    double x0 = r_lo, x1 = r_hi;
    for (int it = 0; it < 400 && x1 - x0 > tol; ++it) {
        const double mid = 0.5 * (x0 + x1);
        if (psi_prime(p, mid) <= -M) x0 = mid;
        else x1 = mid;
    }
    return {x0, high};
}

/// Truncation points K_low < k_low, K_high > k_high with psi'' >= 0 at both:
/// delta starts small and doubles until the curvature condition holds.
inline std::pair<double, double> truncation_points(const Potential& p, double k_low, double k_high) {
    const auto [a, b] = p.domain();
    double delta = 1e-2 * std::max(1.0, k_high - k_low);
    for (int it = 0; it < 60; ++it) {
        double lo = k_low - delta, hi = k_high + delta;
        // stay strictly inside a bounded domain
        if (std::isfinite(a)) lo = std::max(lo, 0.5 * (a + k_low));
        if (std::isfinite(b)) hi = std::min(hi, 0.5 * (b + k_high));
        if (psi_second(p, lo) >= 0.0 && psi_second(p, hi) >= 0.0) return {lo, hi};
        delta *= 2.0;
    }
    throw CurvatureError("no truncation points with nonnegative curvature found");
}

}  // namespace fbpsim
