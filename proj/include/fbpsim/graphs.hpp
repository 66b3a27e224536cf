#pragma once

// Maximal monotone graphs beta = d(zeta) on the real line with 0 in beta(0).
//
// Every variant is piecewise affine, so the resolvent (I + lambda*beta)^{-1},
// which is the proximal map of lambda*zeta, has a closed form.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>

#include "fbpsim/errors.hpp"

namespace fbpsim {

/// A value in (-inf, +inf]. Infinity is a tag, never a float in arithmetic.
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit on purpose
    static constexpr ExtendedReal infinity() {
        ExtendedReal e;
        e.infinite_ = true;
        return e;
    }

    constexpr bool is_finite() const { return !infinite_; }
    /// Only meaningful when finite.
    constexpr double value() const { return value_; }

    friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
        if (!a.is_finite() || !b.is_finite()) return infinity();
        return ExtendedReal(a.value_ + b.value_);
    }
    friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
        return a.value_ == b.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

namespace graph {

struct Zero {};

/// beta0 * sign(r): dry-friction threshold on the rate.
struct ScaledSign {
    double beta0;
};

/// Subdifferential of the indicator of [a, b], a <= 0 <= b: bounds the rate.
struct IndicatorInterval {
    double a;
    double b;
};

/// Subdifferential of the indicator of [0, +inf): irreversibility.
struct IndicatorHalfLine {};

}  // namespace graph

class MonotoneGraph {
public:
    using Variant = std::variant<graph::Zero, graph::ScaledSign, graph::IndicatorInterval,
                                 graph::IndicatorHalfLine>;

    MonotoneGraph() = default;

    static MonotoneGraph zero() { return MonotoneGraph(graph::Zero{}); }
    static MonotoneGraph scaled_sign(double beta0) {
        if (!(beta0 > 0.0) || !std::isfinite(beta0))
            throw DomainError("sign graph requires beta0 > 0, got " + std::to_string(beta0));
        return MonotoneGraph(graph::ScaledSign{beta0});
    }
    static MonotoneGraph interval(double a, double b) {
        if (!(a <= 0.0 && 0.0 <= b) || !std::isfinite(a) || !std::isfinite(b))
            throw DomainError("interval graph requires a <= 0 <= b, got [" + std::to_string(a) +
                              ", " + std::to_string(b) + "]");
        return MonotoneGraph(graph::IndicatorInterval{a, b});
    }
    static MonotoneGraph half_line() { return MonotoneGraph(graph::IndicatorHalfLine{}); }

    const Variant& variant() const { return v_; }
    bool is_zero() const { return std::holds_alternative<graph::Zero>(v_); }

    std::string name() const {
        return std::visit(
            [](const auto& g) -> std::string {
                using G = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<G, graph::Zero>) return "zero";
                else if constexpr (std::is_same_v<G, graph::ScaledSign>) return "sign";
                else if constexpr (std::is_same_v<G, graph::IndicatorInterval>) return "interval";
                else return "halfline";
            },
            v_);
    }

private:
    explicit MonotoneGraph(Variant v) : v_(v) {}
    Variant v_ = graph::Zero{};
};

/// p = (I + lambda*beta)^{-1}(r), i.e. argmin_x 1/2 (x - r)^2 + lambda*zeta(x).
inline double resolvent(const MonotoneGraph& g, double lambda, double r) {
    return std::visit(
        [&](const auto& v) -> double {
            using G = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<G, graph::Zero>) {
                return r;
            } else if constexpr (std::is_same_v<G, graph::ScaledSign>) {
                const double t = lambda * v.beta0;
                if (r > t) return r - t;
                if (r < -t) return r + t;
                return 0.0;
            } else if constexpr (std::is_same_v<G, graph::IndicatorInterval>) {
                return std::clamp(r, v.a, v.b);
            } else {
                return std::max(r, 0.0);
            }
        },
        g.variant());
}

/// Element of the Clarke generalized derivative of the resolvent in r.
/// Each piece is either the identity (1) or flat (0); kinks take 1.
inline double resolvent_slope(const MonotoneGraph& g, double lambda, double r) {
    return std::visit(
        [&](const auto& v) -> double {
            using G = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<G, graph::Zero>) {
                return 1.0;
            } else if constexpr (std::is_same_v<G, graph::ScaledSign>) {
                return std::abs(r) >= lambda * v.beta0 ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<G, graph::IndicatorInterval>) {
                return (r >= v.a && r <= v.b) ? 1.0 : 0.0;
            } else {
                return r >= 0.0 ? 1.0 : 0.0;
            }
        },
        g.variant());
}

/// Yosida approximation (r - resolvent(r)) / lambda.
inline double yosida(const MonotoneGraph& g, double lambda, double r) {
    if (const auto* s = std::get_if<graph::ScaledSign>(&g.variant()))
        return std::clamp(r / lambda, -s->beta0, s->beta0);
    return (r - resolvent(g, lambda, r)) / lambda;
}

inline ExtendedReal zeta(const MonotoneGraph& g, double r) {
    return std::visit(
        [&](const auto& v) -> ExtendedReal {
            using G = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<G, graph::Zero>) {
                return 0.0;
            } else if constexpr (std::is_same_v<G, graph::ScaledSign>) {
                return v.beta0 * std::abs(r);
            } else if constexpr (std::is_same_v<G, graph::IndicatorInterval>) {
                return (r >= v.a && r <= v.b) ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else {
                return r >= 0.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
            }
        },
        g.variant());
}

/// Legendre-Fenchel conjugate zeta*(w) = sup_v (v*w - zeta(v)).
inline ExtendedReal zeta_star(const MonotoneGraph& g, double w) {
    return std::visit(
        [&](const auto& v) -> ExtendedReal {
            using G = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<G, graph::Zero>) {
                return w == 0.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<G, graph::ScaledSign>) {
                return std::abs(w) <= v.beta0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<G, graph::IndicatorInterval>) {
                return w >= 0.0 ? v.b * w : v.a * w;
            } else {
                return w <= 0.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
            }
        },
        g.variant());
}

/// zeta* evaluated after projecting w onto dom(zeta*) when it lies within
/// `slack` of it. Rounding in xi = mu - w - g can push |xi| one ulp past a
/// threshold; anything further out is reported as infinite.
inline ExtendedReal zeta_star_tolerant(const MonotoneGraph& g, double w, double slack) {
    return std::visit(
        [&](const auto& v) -> ExtendedReal {
            using G = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<G, graph::Zero>) {
                return std::abs(w) <= slack ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<G, graph::ScaledSign>) {
                return std::abs(w) <= v.beta0 + slack ? ExtendedReal(0.0)
                                                      : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<G, graph::IndicatorInterval>) {
                return zeta_star(g, w);
            } else {
                return w <= slack ? ExtendedReal(0.0) : ExtendedReal::infinity();
            }
        },
        g.variant());
}

/// Distance-style defect of the inclusion xi in beta(w): |resolvent(w + xi) - w|.
/// Zero exactly when (w, xi) lies on the graph.
inline double membership_defect(const MonotoneGraph& g, double w, double xi) {
    return std::abs(resolvent(g, 1.0, w + xi) - w);
}

}  // namespace fbpsim
