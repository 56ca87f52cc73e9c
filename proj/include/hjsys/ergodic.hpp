#pragma once

// The discounted system  lambda v_i + H_i(x, Dv_i) + sum_j d_ij v_j = 0,
// solved to steady state by pseudo-time marching with the monotone flux, and
// the vanishing-discount limit: trace of -lambda v^lambda at an anchor cell,
// quadratic extrapolation to lambda = 0 for the ergodic constant, corrector
// anchored to zero at x*, and the constant-coupling bounds
//   sum_i L_i min f_i <= -c_1 sum_i L_i <= min_x sum_i L_i f_i.
//
// Marching alone stalls as lambda -> 0: the update contracts the constant
// mode only at rate lambda. For zero-row-sum coupling a constant shift moves
// the residual uniformly by lambda * s, so the exact shift s = -mean(r)/lambda
// removes the constant residual component outright; the remaining modes relax
// at grid-scale rates. The shift is applied every few sweeps and vanishes at
// the fixed point.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hjsys/evolutive.hpp"

namespace hjsys {

struct DiscountedSolution {
    double lambda = 0.0;
    VectorGridField field;
    long iterations = 0;
    double final_residual = 0.0;
};

struct ErgodicOptions {
    double tol = 1e-6;  // sup-norm residual target
    long max_iters = 500000;
    bool kernel_shift = true;
    bool warm_start = true;  // reuse v^{lambda_k} as the next initial iterate
    int shift_every = 40;
    double cfl_safety = 0.9;
    bool enforce_box = true;
    bool check_cauchy = true;
    double bounds_slack = 1e-2;
};

namespace detail {

inline bool zero_row_sums(const CouplingField& D) {
    for (long cell : D.stored_cells()) {
        const Matrix& M = D.at(cell);
        if (M.rowwise().sum().lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + M.lpNorm<Eigen::Infinity>()))
            return false;
    }
    return true;
}

}  // namespace detail

inline DiscountedSolution solve_discounted(const DiscretizedProblem& dp, double lambda,
                                           const ErgodicOptions& options = {},
                                           const VectorGridField* warm_start = nullptr) {
    if (!(lambda > 0.0)) throw Error("solve_discounted: lambda must be positive");
    const ModelProblem& problem = dp.problem();
    const TorusGrid& grid = dp.grid();
    const long cells = grid.cell_count();
    const int m = problem.m;

    VectorGridField v = warm_start ? *warm_start : VectorGridField(grid, m);
    VectorGridField next = v;
    const std::vector<double> thetas =
        estimate_thetas(problem, grid, warm_start ? *warm_start : VectorGridField(grid, m));
    const double dmax = max_diagonal_coupling(problem.coupling);
    double stiffness = lambda + dmax;
    for (double theta : thetas) stiffness = std::max(stiffness, theta * grid.dim / grid.dx() + dmax + lambda);
    const double dtau = options.cfl_safety / stiffness;
    const bool degenerate = detail::zero_row_sums(problem.coupling);

    double sup_residual = 0.0;
    double mean_residual = 0.0;
    long iter = 0;
    for (; iter < options.max_iters; ++iter) {
        sup_residual = 0.0;
        mean_residual = 0.0;
        for (int i = 0; i < m; ++i) {
            const std::vector<double>& u = v.comp[i];
            std::vector<double>& out = next.comp[i];
            for (long cell = 0; cell < cells; ++cell) {
                Point pm{0.0, 0.0}, pp{0.0, 0.0};
                for (int axis = 0; axis < grid.dim; ++axis) {
                    const auto g = gradient_pair(grid, u, cell, axis);
                    pm[axis] = g.minus;
                    pp[axis] = g.plus;
                }
                const double r = lambda * u[cell] + dp.lf_at(i, cell, pm, pp, thetas[i]) +
                                 dp.coupling_term(i, cell, v);
                out[cell] = u[cell] - dtau * r;
                sup_residual = std::max(sup_residual, std::abs(r));
                mean_residual += r;
            }
        }
        mean_residual /= static_cast<double>(m) * cells;
        std::swap(v.comp, next.comp);

        if (sup_residual <= options.tol) break;
        if (options.kernel_shift && degenerate && (iter + 1) % options.shift_every == 0) {
            const double shift = -mean_residual / lambda;
            for (int i = 0; i < m; ++i)
                for (long cell = 0; cell < cells; ++cell) v.comp[i][cell] += shift;
        }
        if (!v.all_finite())
            throw NonFiniteValue("solve_discounted: iteration diverged");
    }
    if (sup_residual > options.tol)
        throw NotConverged("solve_discounted: residual " + std::to_string(sup_residual) +
                           " after " + std::to_string(iter) + " iterations");

    DiscountedSolution sol;
    sol.lambda = lambda;
    sol.field = std::move(v);
    sol.field.t = 0.0;
    sol.iterations = iter + 1;
    sol.final_residual = sup_residual;

    if (options.enforce_box) {
        // a priori box: M bounds |F_i(x,0)| + f_i; the zero subsolution gives
        // the lower bound when F_i(x,0) = 0 and f_i >= 0 hold.
        double M = 0.0;
        double f_min = 0.0;
        double F0_max = 0.0;
        for (long cell = 0; cell < cells; ++cell)
            for (int i = 0; i < m; ++i) {
                const double F0 = std::abs(dp.free_part_at(i, cell, {0.0, 0.0}));
                M = std::max(M, F0 + std::abs(dp.cost(i, cell)));
                f_min = std::min(f_min, dp.cost(i, cell));
                F0_max = std::max(F0_max, F0);
            }
        const double slack = std::max(1e-6, 10.0 * sup_residual / lambda);
        for (int i = 0; i < m; ++i) {
            if (sol.field.sup(i) > M / lambda + slack)
                throw BoundViolated("discounted solution exceeds M/lambda");
            if (F0_max <= 1e-9 && f_min >= -1e-9 && sol.field.inf(i) < -slack)
                throw BoundViolated("discounted solution is negative");
            if (sol.field.inf(i) < -M / lambda - slack)
                throw BoundViolated("discounted solution exceeds -M/lambda");
        }
    }
    return sol;
}

inline DiscountedSolution solve_discounted(const ModelProblem& problem, const TorusGrid& grid,
                                           double lambda, const ErgodicOptions& options = {},
                                           const VectorGridField* warm_start = nullptr) {
    return solve_discounted(DiscretizedProblem(problem, grid), lambda, options, warm_start);
}

inline std::vector<double> default_lambda_schedule(double lambda0 = 0.5, double factor = 0.5,
                                                   int count = 13) {
    std::vector<double> schedule;
    double lam = lambda0;
    for (int k = 0; k < count; ++k, lam *= factor) schedule.push_back(lam);
    return schedule;
}

struct ErgodicTraceEntry {
    double lambda = 0.0;
    std::vector<double> lambda_v_at_anchor;  // lambda * v_i(x*)
    double corrector_delta = 0.0;            // sup |v - v(x*) - previous corrector|
    long iterations = 0;
    double residual = 0.0;
};

struct BoundsCheck {
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
};

struct ErgodicResult {
    std::vector<ErgodicTraceEntry> trace;
    std::vector<double> c_estimate;   // per equation, extrapolated to lambda = 0
    VectorGridField corrector;        // v^{lambda_K} - v^{lambda_K}(x*)
    VectorGridField last_discounted;  // raw final v^{lambda_K}
    double last_lambda = 0.0;
    long anchor_cell = 0;
    std::optional<BoundsCheck> bounds_check;
    // checks active when F is nonempty: c = 0 and corrector = 0 on F
    bool zero_constant_applicable = false;
    double zero_constant_err = 0.0;
    double corrector_on_F_err = 0.0;
    double corrector_on_F_tol = 0.0;
    bool zero_constant_pass = false;
    bool corrector_on_F_pass = false;
};

// Quadratic (Neville) extrapolation of the last three trace points to 0.
inline double extrapolate_to_zero(const std::vector<std::pair<double, double>>& pts) {
    std::vector<double> x, y;
    for (const auto& [lam, val] : pts) {
        x.push_back(lam);
        y.push_back(val);
    }
    const std::size_t n = x.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t k = 0; k + level < n; ++k)
            y[k] = (x[k + level] * y[k] - x[k] * y[k + 1]) / (x[k + level] - x[k]);
    return y[0];
}

inline std::pair<double, double> ergodic_bounds(const ModelProblem& problem, const TorusGrid& grid,
                                                const Vector& lambda_vec) {
    if (!problem.coupling.is_constant())
        throw PreconditionFailed("ergodic_bounds: coupling must be constant");
    const Matrix& D = problem.coupling.at(kConstantCell);
    if (!is_irreducible(D).irreducible)
        throw PreconditionFailed("ergodic_bounds: coupling must be irreducible");
    if (D.rowwise().sum().lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + D.lpNorm<Eigen::Infinity>()))
        throw PreconditionFailed("ergodic_bounds: coupling must have zero row sums");

    const double total = lambda_vec.sum();
    double lower = 0.0;
    double weighted_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < problem.m; ++i) {
        double fmin = std::numeric_limits<double>::infinity();
        for (long cell = 0; cell < grid.cell_count(); ++cell)
            fmin = std::min(fmin, problem.hamiltonians[i].cost(grid.coord(cell)));
        lower += lambda_vec(i) * fmin;
    }
    for (long cell = 0; cell < grid.cell_count(); ++cell) {
        double acc = 0.0;
        const Point x = grid.coord(cell);
        for (int i = 0; i < problem.m; ++i) acc += lambda_vec(i) * problem.hamiltonians[i].cost(x);
        weighted_min = std::min(weighted_min, acc);
    }
    return {lower / total, weighted_min / total};
}

inline long default_anchor_cell(const ModelProblem& problem, const TorusGrid& grid) {
    const SetMasks masks = compute_sets(problem, grid);
    if (masks.F_empty()) return 0;
    // snap to the cell minimizing sum_i f_i (a cell of F)
    long best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (long cell = 0; cell < grid.cell_count(); ++cell) {
        double total = 0.0;
        for (int i = 0; i < problem.m; ++i) total += problem.hamiltonians[i].cost(grid.coord(cell));
        if (total < best_val) {
            best_val = total;
            best = cell;
        }
    }
    return best;
}

inline ErgodicResult vanishing_discount(const DiscretizedProblem& dp,
                                        std::vector<double> schedule = {},
                                        std::optional<long> anchor = std::nullopt,
                                        const ErgodicOptions& options = {}) {
    const ModelProblem& problem = dp.problem();
    const TorusGrid& grid = dp.grid();
    if (schedule.empty()) schedule = default_lambda_schedule();
    for (std::size_t k = 1; k < schedule.size(); ++k)
        if (!(schedule[k] < schedule[k - 1]))
            throw Error("vanishing_discount: schedule must decrease strictly");

    ErgodicResult result;
    result.anchor_cell = anchor.value_or(default_anchor_cell(problem, grid));

    VectorGridField previous_corrector(grid, problem.m);
    std::optional<VectorGridField> warm;
    for (double lam : schedule) {
        const DiscountedSolution sol =
            solve_discounted(dp, lam, options, options.warm_start && warm ? &*warm : nullptr);
        ErgodicTraceEntry entry;
        entry.lambda = lam;
        entry.iterations = sol.iterations;
        entry.residual = sol.final_residual;
        VectorGridField corrector = sol.field;
        double delta = 0.0;
        for (int i = 0; i < problem.m; ++i) {
            const double at_anchor = sol.field.comp[i][result.anchor_cell];
            entry.lambda_v_at_anchor.push_back(lam * at_anchor);
            for (long cell = 0; cell < grid.cell_count(); ++cell) {
                corrector.comp[i][cell] -= at_anchor;
                delta = std::max(delta,
                                 std::abs(corrector.comp[i][cell] - previous_corrector.comp[i][cell]));
            }
        }
        entry.corrector_delta = delta;
        result.trace.push_back(std::move(entry));
        previous_corrector = corrector;
        result.corrector = std::move(corrector);
        result.last_discounted = sol.field;
        result.last_lambda = lam;
        warm = std::move(sol.field);
    }

    // extrapolate -lambda v(x*) componentwise over the trailing trace
    const std::size_t K = result.trace.size();
    const std::size_t use = std::min<std::size_t>(3, K);
    result.c_estimate.assign(problem.m, 0.0);
    for (int i = 0; i < problem.m; ++i) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = K - use; k < K; ++k)
            pts.emplace_back(result.trace[k].lambda, -result.trace[k].lambda_v_at_anchor[i]);
        result.c_estimate[i] = extrapolate_to_zero(pts);
        if (options.check_cauchy && K >= 3) {
            const double d1 = std::abs(-result.trace[K - 1].lambda_v_at_anchor[i] +
                                       result.trace[K - 2].lambda_v_at_anchor[i]);
            const double d0 = std::abs(-result.trace[K - 2].lambda_v_at_anchor[i] +
                                       result.trace[K - 3].lambda_v_at_anchor[i]);
            const double floor = 50.0 * options.tol + 1e-12;
            if (d1 > std::max(0.9 * d0, floor) && d1 > floor)
                throw ExtrapolationUnstable("vanishing_discount: trace is not Cauchy");
        }
    }

    // constant-coupling bounds when applicable
    if (problem.coupling.is_constant()) {
        const Matrix& D = problem.coupling.at(kConstantCell);
        const bool degenerate = detail::zero_row_sums(problem.coupling);
        if (degenerate && is_irreducible(D).irreducible) {
            const auto perron = perron_left_null_vector(D);
            const auto [lower, upper] = ergodic_bounds(problem, grid, perron.lambda_vec);
            BoundsCheck check{lower, upper, false};
            const double minus_c1 = -result.c_estimate[0];
            check.pass = minus_c1 >= lower - options.bounds_slack &&
                         minus_c1 <= upper + options.bounds_slack;
            result.bounds_check = check;
        }
    }

    // with F nonempty the constant must vanish and the corrector must vanish on F
    const SetMasks masks = compute_sets(problem, grid);
    if (!masks.F_empty()) {
        result.zero_constant_applicable = true;
        for (double c : result.c_estimate)
            result.zero_constant_err = std::max(result.zero_constant_err, std::abs(c));
        result.zero_constant_pass = result.zero_constant_err <= options.bounds_slack;

        double lip = 0.0;
        for (int i = 0; i < problem.m; ++i)
            lip = std::max(lip, lipschitz_estimate(grid, result.corrector.comp[i]));
        result.corrector_on_F_tol = 2.0 * grid.dx() * lip + 1e-8;
        for (long cell = 0; cell < grid.cell_count(); ++cell)
            if (masks.F_mask[cell])
                for (int i = 0; i < problem.m; ++i)
                    result.corrector_on_F_err = std::max(
                        result.corrector_on_F_err, std::abs(result.corrector.comp[i][cell]));
        result.corrector_on_F_pass = result.corrector_on_F_err <= result.corrector_on_F_tol;
    }
    return result;
}

inline ErgodicResult vanishing_discount(const ModelProblem& problem, const TorusGrid& grid,
                                        std::vector<double> schedule = {},
                                        std::optional<long> anchor = std::nullopt,
                                        const ErgodicOptions& options = {}) {
    return vanishing_discount(DiscretizedProblem(problem, grid), std::move(schedule), anchor,
                              options);
}

// Residual of the stationary system with ergodic constant c.
inline std::vector<double> stationary_residual(const DiscretizedProblem& dp,
                                               const VectorGridField& field,
                                               const std::vector<double>& c,
                                               const std::vector<double>& thetas) {
    std::vector<double> res(dp.problem().m, 0.0);
    const TorusGrid& grid = dp.grid();
    for (int i = 0; i < dp.problem().m; ++i) {
        double worst = 0.0;
        for (long cell = 0; cell < grid.cell_count(); ++cell) {
            Point pm{0.0, 0.0}, pp{0.0, 0.0};
            for (int axis = 0; axis < grid.dim; ++axis) {
                const auto g = gradient_pair(grid, field.comp[i], cell, axis);
                pm[axis] = g.minus;
                pp[axis] = g.plus;
            }
            const double r =
                dp.lf_at(i, cell, pm, pp, thetas[i]) + dp.coupling_term(i, cell, field) - c[i];
            worst = std::max(worst, std::abs(r));
        }
        res[i] = worst;
    }
    return res;
}

}  // namespace hjsys
