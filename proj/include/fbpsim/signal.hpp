#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fbpsim/errors.hpp"

namespace fbpsim {

/// Piecewise-linear function through (t_i, f_i), constant beyond the ends.
class PiecewiseLinear {
public:
    PiecewiseLinear() : t_{0.0}, f_{0.0} {}
    PiecewiseLinear(std::vector<double> t, std::vector<double> f) : t_(std::move(t)), f_(std::move(f)) {
        if (t_.empty() || t_.size() != f_.size())
            throw DomainError("signal needs matching, non-empty sample lists");
        for (std::size_t i = 1; i < t_.size(); ++i)
            if (!(t_[i] > t_[i - 1])) throw DomainError("signal sample times must be strictly increasing");
        for (std::size_t i = 0; i < t_.size(); ++i)
            if (!std::isfinite(t_[i]) || !std::isfinite(f_[i])) throw DomainError("signal samples must be finite");
    }

    static PiecewiseLinear constant(double c) { return PiecewiseLinear({0.0}, {c}); }

    double operator()(double t) const {
        if (t <= t_.front()) return f_.front();
        if (t >= t_.back()) return f_.back();
        const auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin());
        const double a = t_[i - 1], b = t_[i];
        const double s = (t - a) / (b - a);
        return f_[i - 1] + s * (f_[i] - f_[i - 1]);
    }

    const std::vector<double>& times() const { return t_; }
    const std::vector<double>& values() const { return f_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : f_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Same shape on a stretched time axis: g(t) = f(t / factor).
    PiecewiseLinear time_scaled(double factor) const {
        std::vector<double> t(t_);
        for (double& x : t) x *= factor;
        return PiecewiseLinear(std::move(t), f_);
    }
    PiecewiseLinear value_scaled(double factor) const {
        std::vector<double> f(f_);
        for (double& x : f) x *= factor;
        return PiecewiseLinear(t_, std::move(f));
    }

private:
    std::vector<double> t_, f_;
};

}  // namespace fbpsim
