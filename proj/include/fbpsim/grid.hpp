#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fbpsim/errors.hpp"

namespace fbpsim {

/// Uniform mesh of the interval (0, Lx) or the rectangle (0, Lx) x (0, Ly).
/// Only interior nodes carry unknowns; node (i, j) has index i + nx * j.
class Grid {
public:
    Grid() = default;

    static Grid line(double extent, int n) { return Grid(1, {extent, 0.0}, {n, 1}); }
    static Grid rect(double extent_x, double extent_y, int nx, int ny) {
        return Grid(2, {extent_x, extent_y}, {nx, ny});
    }

    int dim() const { return dim_; }
    double extent(int axis) const { return extent_[axis]; }
    int n(int axis) const { return n_[axis]; }
    double h(int axis) const { return extent_[axis] / (n_[axis] + 1); }
    int size() const { return n_[0] * n_[1]; }
    /// Quadrature weight per node: h in 1D, hx*hy in 2D.
    double weight() const { return dim_ == 1 ? h(0) : h(0) * h(1); }
    double measure() const { return dim_ == 1 ? extent_[0] : extent_[0] * extent_[1]; }

    std::array<double, 2> coordinates(int index) const {
        const int i = index % n_[0];
        const int j = index / n_[0];
        return {(i + 1) * h(0), dim_ == 2 ? (j + 1) * h(1) : 0.0};
    }

    int center_index() const {
        const int i = (n_[0] - 1) / 2;
        const int j = dim_ == 2 ? (n_[1] - 1) / 2 : 0;
        return i + n_[0] * j;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_ == b.dim_ && a.extent_ == b.extent_ && a.n_ == b.n_;
    }

private:
    Grid(int dim, std::array<double, 2> extent, std::array<int, 2> n) : dim_(dim), extent_(extent), n_(n) {
        if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
                throw DomainError("grid extent must be positive");
            if (n[a] < 2) throw DomainError("grid needs at least 2 interior nodes per axis");
        }
    }

    int dim_ = 1;
    std::array<double, 2> extent_{1.0, 0.0};
    std::array<int, 2> n_{2, 1};
};

/// One scalar per interior node of a grid.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
    Field(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != g.size())
            throw GridMismatch("field has " + std::to_string(values_.size()) + " values, grid has " +
                               std::to_string(g.size()) + " nodes");
    }

    template <class F>
    static Field from_function(const Grid& g, F&& f) {
        Field out(g);
        for (int k = 0; k < g.size(); ++k) {
            const auto c = g.coordinates(k);
            out[k] = f(c[0], c[1]);
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    int size() const { return static_cast<int>(values_.size()); }
    double& operator[](int k) { return values_[k]; }
    double operator[](int k) const { return values_[k]; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& vector() const { return values_; }

    Field& operator+=(const Field& o) {
        check(o);
        for (int k = 0; k < size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check(o);
        for (int k = 0; k < size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    Field& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }

    friend bool operator==(const Field& a, const Field& b) {
        return a.grid_ == b.grid_ && a.values_ == b.values_;
    }

    void check(const Field& o) const {
        if (!(grid_ == o.grid_)) throw GridMismatch("fields live on different grids");
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

inline double l2_inner(const Field& f, const Field& g) {
    f.check(g);
    double s = 0.0;
    for (int k = 0; k < f.size(); ++k) s += f[k] * g[k];
    return s * f.grid().weight();
}

inline double l2_norm(const Field& f) { return std::sqrt(l2_inner(f, f)); }

inline double linf_norm(const Field& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double min_value(const Field& f) { return *std::min_element(f.values().begin(), f.values().end()); }
inline double max_value(const Field& f) { return *std::max_element(f.values().begin(), f.values().end()); }

/// Dirichlet values on the boundary nodes adjacent to the interior.
/// 1D uses west[0] (x = 0) and east[0] (x = L). In 2D west/east hold ny
/// values (indexed by j) and south/north hold nx values (indexed by i).
struct BoundaryTrace {
    std::vector<double> west, east, south, north;

    static BoundaryTrace uniform(const Grid& g, double c) {
        BoundaryTrace t;
        const int ny = g.dim() == 2 ? g.n(1) : 1;
        t.west.assign(ny, c);
        t.east.assign(ny, c);
        if (g.dim() == 2) {
            t.south.assign(g.n(0), c);
            t.north.assign(g.n(0), c);
        }
        return t;
    }

    /// Samples a function of the boundary coordinates.
    template <class F>
    static BoundaryTrace from_function(const Grid& g, F&& f) {
        BoundaryTrace t;
        if (g.dim() == 1) {
            t.west = {f(0.0, 0.0)};
            t.east = {f(g.extent(0), 0.0)};
            return t;
        }
        for (int j = 0; j < g.n(1); ++j) {
            const double y = (j + 1) * g.h(1);
            t.west.push_back(f(0.0, y));
            t.east.push_back(f(g.extent(0), y));
        }
        for (int i = 0; i < g.n(0); ++i) {
            const double x = (i + 1) * g.h(0);
            t.south.push_back(f(x, 0.0));
            t.north.push_back(f(x, g.extent(1)));
        }
        return t;
    }
};

}  // namespace fbpsim
