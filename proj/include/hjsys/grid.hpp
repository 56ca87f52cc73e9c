#pragma once

// Uniform periodic grids on the torus (1-D and 2-D) and m-component scalar
// fields sampled on them. Cells sit at coordinates j*dx in [0, period);
// 2-D cells are row-major with the x index major.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hjsys/errors.hpp"

namespace hjsys {

using Point = std::array<double, 2>;

struct TorusGrid {
    int dim = 1;
    int n = 8;           // cells per axis
    double period = 1.0;  // per axis

    TorusGrid() = default;
    TorusGrid(int dim_, int n_, double period_) : dim(dim_), n(n_), period(period_) {
        if (dim < 1 || dim > 2) throw DegenerateGrid("grid dimension must be 1 or 2");
        if (n < 8) throw DegenerateGrid("grid needs at least 8 cells per axis");
        if (!(period > 0.0)) throw DegenerateGrid("grid period must be positive");
    }

    double dx() const { return period / n; }
    long cell_count() const { return dim == 1 ? n : static_cast<long>(n) * n; }

    int wrap(long i) const {
        long r = i % n;
        return static_cast<int>(r < 0 ? r + n : r);
    }

    long index(long i, long j = 0) const {
        return dim == 1 ? wrap(i) : static_cast<long>(wrap(i)) * n + wrap(j);
    }

    std::array<int, 2> multi(long cell) const {
        if (dim == 1) return {static_cast<int>(cell), 0};
        return {static_cast<int>(cell / n), static_cast<int>(cell % n)};
    }

    Point coord(long cell) const {
        const auto ij = multi(cell);
        return {ij[0] * dx(), dim == 2 ? ij[1] * dx() : 0.0};
    }

    long neighbor(long cell, int axis, int delta) const {
        auto ij = multi(cell);
        ij[axis] += delta;
        return index(ij[0], ij[1]);
    }

    // Cell whose coordinates are nearest to x (componentwise, periodic).
    long nearest_cell(const Point& x) const {
        const auto snap = [&](double v) {
            return wrap(static_cast<long>(std::llround(v / dx())));
        };
        return dim == 1 ? snap(x[0]) : index(snap(x[0]), snap(x[1]));
    }

    bool operator==(const TorusGrid&) const = default;
};

struct VectorGridField {
    TorusGrid grid;
    double t = 0.0;
    std::vector<std::vector<double>> comp;  // comp[i][cell]

    VectorGridField() = default;
    VectorGridField(const TorusGrid& g, int m, double value = 0.0)
        : grid(g), comp(m, std::vector<double>(g.cell_count(), value)) {}

    int m() const { return static_cast<int>(comp.size()); }

    double sup(int i) const {
        double v = comp[i][0];
        for (double u : comp[i]) v = std::max(v, u);
        return v;
    }
    double inf(int i) const {
        double v = comp[i][0];
        for (double u : comp[i]) v = std::min(v, u);
        return v;
    }
    double sup_abs() const {
        double v = 0.0;
        for (const auto& c : comp)
            for (double u : c) v = std::max(v, std::abs(u));
        return v;
    }
    bool all_finite() const {
        for (const auto& c : comp)
            for (double u : c)
                if (!std::isfinite(u)) return false;
        return true;
    }
};

struct GradientPair {
    double minus = 0.0;  // backward difference
    double plus = 0.0;   // forward difference
};

inline GradientPair gradient_pair(const TorusGrid& grid, const std::vector<double>& u, long cell,
                                  int axis) {
    const double inv_dx = 1.0 / grid.dx();
    const double here = u[cell];
    return {(here - u[grid.neighbor(cell, axis, -1)]) * inv_dx,
            (u[grid.neighbor(cell, axis, +1)] - here) * inv_dx};
}

// Largest one-sided difference magnitude: the discrete Lipschitz estimate.
inline double lipschitz_estimate(const TorusGrid& grid, const std::vector<double>& u) {
    double lip = 0.0;
    for (long cell = 0; cell < grid.cell_count(); ++cell)
        for (int axis = 0; axis < grid.dim; ++axis) {
            const auto g = gradient_pair(grid, u, cell, axis);
            lip = std::max(lip, std::max(std::abs(g.minus), std::abs(g.plus)));
        }
    return lip;
}

}  // namespace hjsys
