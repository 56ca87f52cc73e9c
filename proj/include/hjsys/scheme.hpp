#pragma once

// Monotone Lax-Friedrichs flux for the coupled system, the CFL contract of
// the explicit update, and per-equation dissipation coefficients theta
// (>= the p-Lipschitz bound of H_i on the working gradient range).
//
// DiscretizedProblem presamples costs, speeds and coupling rows on the grid
// so the hot stepping loops never call back into expression closures.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hjsys/model.hpp"

namespace hjsys {

struct SchemeParams {
    std::vector<double> theta;  // per equation
    double cfl_safety = 0.9;
    double dt = 0.0;
};

inline double lf_hamiltonian(const ModelProblem& problem, int i, const Point& x,
                             const Point& p_minus, const Point& p_plus, double theta_i) {
    Point mid{0.5 * (p_minus[0] + p_plus[0]), 0.5 * (p_minus[1] + p_plus[1])};
    double dissipation = 0.5 * (p_plus[0] - p_minus[0]);
    if (problem.dim == 2) dissipation += 0.5 * (p_plus[1] - p_minus[1]);
    return evaluate_hamiltonian(problem, i, x, mid) - theta_i * dissipation;
}

// Largest diagonal coupling entry over stored cells.
inline double max_diagonal_coupling(const CouplingField& D) {
    double worst = 0.0;
    for (long cell : D.stored_cells()) worst = std::max(worst, D.at(cell).diagonal().maxCoeff());
    return worst;
}

inline double cfl_max_dt(const ModelProblem& problem, const TorusGrid& grid,
                         const std::vector<double>& thetas, double cfl_safety) {
    if (grid.dx() <= 0.0) throw DegenerateGrid("cfl_max_dt: dx <= 0");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
        throw DegenerateGrid("cfl_max_dt: safety factor must lie in (0, 1]");
    double denom = 0.0;
    const double dmax = max_diagonal_coupling(problem.coupling);
    for (double theta : thetas) denom = std::max(denom, theta * grid.dim / grid.dx() + dmax);
    if (!(denom > 0.0)) throw DegenerateGrid("cfl_max_dt: no stiffness (theta = 0 and D = 0)");
    return cfl_safety / denom;
}

// |dH_i/dp| bound on the gradient box [-p_range, p_range]^dim. Analytic for
// the built-in kinds, sampled finite differences (inflated 1.2x) for the rest.
inline double theta_bound(const ModelProblem& problem, int i, const TorusGrid& grid,
                          double p_range) {
    const HamiltonianSpec& h = problem.hamiltonians[i];
    switch (h.kind) {
        case HamiltonianKind::Eikonal: {
            double smax = 0.0;
            for (long cell = 0; cell < grid.cell_count(); ++cell)
                smax = std::max(smax, h.sigma(grid.coord(cell)));
            return smax;
        }
        case HamiltonianKind::ShiftedEikonal:
            return 1.0;
        case HamiltonianKind::Quadratic: {
            double smax = 0.0;
            for (long cell = 0; cell < grid.cell_count(); ++cell)
                smax = std::max(smax, h.sigma(grid.coord(cell)));
            return 1.2 * smax * std::max(p_range, 1.0) * (problem.dim == 2 ? std::sqrt(2.0) : 1.0);
        }
        case HamiltonianKind::Custom: {
            double bound = 0.0;
            const double span = std::max(p_range, 1.0);
            const double h_fd = 1e-4 * span;
            const int nx = 16, np = 17;
            for (int sx = 0; sx < nx; ++sx) {
                const Point x = grid.coord((grid.cell_count() * sx) / nx);
                for (int sp = 0; sp < np; ++sp)
                    for (int axis = 0; axis < problem.dim; ++axis) {
                        Point p{-span + 2.0 * span * sp / (np - 1), 0.0};
                        if (problem.dim == 2) p[1] = -span + 2.0 * span * ((sp * 7) % np) / (np - 1);
                        Point pp = p, pm = p;
                        pp[axis] += h_fd;
                        pm[axis] -= h_fd;
                        const double slope = std::abs(free_part(problem, i, x, pp) -
                                                      free_part(problem, i, x, pm)) /
                                             (2.0 * h_fd);
                        bound = std::max(bound, slope);
                    }
            }
            return 1.2 * bound;
        }
    }
    return 1.0;
}

inline std::vector<double> estimate_thetas(const ModelProblem& problem, const TorusGrid& grid,
                                           const VectorGridField& reference) {
    std::vector<double> thetas(problem.m, 0.0);
    for (int i = 0; i < problem.m; ++i) {
        const double p_range = 1.2 * lipschitz_estimate(grid, reference.comp[i]);
        thetas[i] = theta_bound(problem, i, grid, p_range);
    }
    return thetas;
}

inline SchemeParams make_scheme_params(const ModelProblem& problem, const TorusGrid& grid,
                                       const VectorGridField& reference, double cfl_safety = 0.9) {
    SchemeParams params;
    params.theta = estimate_thetas(problem, grid, reference);
    params.cfl_safety = cfl_safety;
    params.dt = cfl_max_dt(problem, grid, params.theta, cfl_safety);
    return params;
}

// ---------------------------------------------------------------------------

class DiscretizedProblem {
  public:
    DiscretizedProblem(const ModelProblem& problem, const TorusGrid& grid)
        : problem_(&problem), grid_(grid) {
        problem.validate();
        const long cells = grid.cell_count();
        cost_.assign(problem.m, std::vector<double>(cells));
        sigma_.assign(problem.m, std::vector<double>(cells, 1.0));
        coords_.resize(cells);
        for (long cell = 0; cell < cells; ++cell) {
            coords_[cell] = grid.coord(cell);
            for (int i = 0; i < problem.m; ++i) {
                cost_[i][cell] = problem.hamiltonians[i].cost(coords_[cell]);
                const auto kind = problem.hamiltonians[i].kind;
                if (kind == HamiltonianKind::Eikonal || kind == HamiltonianKind::Quadratic)
                    sigma_[i][cell] = problem.hamiltonians[i].sigma(coords_[cell]);
            }
        }
        if (!problem.coupling.is_constant()) {
            rows_.assign(static_cast<std::size_t>(problem.m) * cells, Vector());
            for (long cell = 0; cell < cells; ++cell) {
                const Matrix& D = problem.coupling.at(cell);
                for (int i = 0; i < problem.m; ++i)
                    rows_[static_cast<std::size_t>(i) * cells + cell] = D.row(i).transpose();
            }
        }
    }

    const ModelProblem& problem() const { return *problem_; }
    const TorusGrid& grid() const { return grid_; }
    const Point& coord(long cell) const { return coords_[cell]; }
    double cost(int i, long cell) const { return cost_[i][cell]; }

    // F_i at a presampled cell (avoids re-evaluating sigma closures).
    double free_part_at(int i, long cell, const Point& p) const {
        const HamiltonianSpec& h = problem_->hamiltonians[i];
        switch (h.kind) {
            case HamiltonianKind::Eikonal:
                return sigma_[i][cell] * norm2(p, problem_->dim);
            case HamiltonianKind::ShiftedEikonal: {
                Point q{p[0] + h.shift[0], p[1] + h.shift[1]};
                return norm2(q, problem_->dim);
            }
            case HamiltonianKind::Quadratic: {
                const double n = norm2(p, problem_->dim);
                return 0.5 * sigma_[i][cell] * n * n;
            }
            case HamiltonianKind::Custom:
                return h.custom(coords_[cell], p);
        }
        return 0.0;
    }

    double hamiltonian_at(int i, long cell, const Point& p) const {
        return free_part_at(i, cell, p) - cost_[i][cell];
    }

    double lf_at(int i, long cell, const Point& p_minus, const Point& p_plus,
                 double theta_i) const {
        Point mid{0.5 * (p_minus[0] + p_plus[0]), 0.5 * (p_minus[1] + p_plus[1])};
        double dissipation = 0.5 * (p_plus[0] - p_minus[0]);
        if (problem_->dim == 2) dissipation += 0.5 * (p_plus[1] - p_minus[1]);
        return hamiltonian_at(i, cell, mid) - theta_i * dissipation;
    }

    // sum_j d_ij(cell) u_j(cell)
    double coupling_term(int i, long cell, const VectorGridField& u) const {
        double acc = 0.0;
        if (problem_->coupling.is_constant()) {
            const Matrix& D = problem_->coupling.at(kConstantCell);
            for (int j = 0; j < problem_->m; ++j) acc += D(i, j) * u.comp[j][cell];
        } else {
            const Vector& row = rows_[static_cast<std::size_t>(i) * grid_.cell_count() + cell];
            for (int j = 0; j < problem_->m; ++j) acc += row(j) * u.comp[j][cell];
        }
        return acc;
    }

  private:
    const ModelProblem* problem_;
    TorusGrid grid_;
    std::vector<std::vector<double>> cost_;
    std::vector<std::vector<double>> sigma_;
    std::vector<Point> coords_;
    std::vector<Vector> rows_;
};

}  // namespace hjsys
