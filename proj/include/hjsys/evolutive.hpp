#pragma once

// Explicit monotone time stepping for the coupled evolutive system
//   du_i/dt + H_i(x, Du_i) + sum_j d_ij(x) u_j = 0
// with trajectory diagnostics: per-equation sup/inf, discrete Lipschitz
// constants, steady-state residuals, tracked-cell time series and a trailing
// window of field snapshots for the large-time tests.

#include <cmath>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "hjsys/parallel.hpp"
#include "hjsys/scheme.hpp"

namespace hjsys {

struct EvolutionState {
    VectorGridField field;
    double t = 0.0;
    long step_count = 0;
};

struct TrajectorySample {
    double t = 0.0;
    std::vector<double> sup, inf, lipschitz, residual;
    std::vector<std::vector<double>> tracked;  // tracked[k][i]: cell k, equation i
};

struct TrajectoryLog {
    std::vector<TrajectorySample> samples;
    std::vector<long> tracked_cells;
    std::deque<std::pair<double, VectorGridField>> window;  // trailing snapshots
    double window_span = 0.0;
    VectorGridField initial;
    VectorGridField final_field;
    double final_time = 0.0;

    double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct SolveOptions {
    double sample_every = 0.25;
    std::vector<long> tracked_cells;
    double snapshot_window = 0.0;  // keep snapshots within [T - span, T]
    std::function<void(const EvolutionState&)> observer;
    double divergence_factor = 1e6;
};

inline void check_cfl(const DiscretizedProblem& dp, const SchemeParams& params) {
    const double dmax = max_diagonal_coupling(dp.problem().coupling);
    for (double theta : params.theta)
        if (params.dt * (theta * dp.grid().dim / dp.grid().dx() + dmax) > 1.0 + 1e-12)
            throw CflViolated("explicit step violates the CFL bound");
}

// One explicit Euler step of size dt (dt = 0 picks params.dt).
inline EvolutionState step(const DiscretizedProblem& dp, const EvolutionState& state,
                           const SchemeParams& params, double dt_override = 0.0) {
    const double dt = dt_override > 0.0 ? dt_override : params.dt;
    if (dt_override == 0.0) check_cfl(dp, params);

    const TorusGrid& grid = dp.grid();
    const int m = dp.problem().m;
    EvolutionState next;
    next.field = state.field;
    next.t = state.t + dt;
    next.step_count = state.step_count + 1;
    next.field.t = next.t;

    for (int i = 0; i < m; ++i) {
        const std::vector<double>& u = state.field.comp[i];
        std::vector<double>& out = next.field.comp[i];
        const double theta = params.theta[i];
        parallel_for(static_cast<std::size_t>(grid.cell_count()), [&](std::size_t c) {
            const long cell = static_cast<long>(c);
            Point pm{0.0, 0.0}, pp{0.0, 0.0};
            for (int axis = 0; axis < grid.dim; ++axis) {
                const auto g = gradient_pair(grid, u, cell, axis);
                pm[axis] = g.minus;
                pp[axis] = g.plus;
            }
            const double flux = dp.lf_at(i, cell, pm, pp, theta);
            out[cell] = u[cell] - dt * (flux + dp.coupling_term(i, cell, state.field));
        });
    }
    return next;
}

inline EvolutionState step(const ModelProblem& problem, const EvolutionState& state,
                           const SchemeParams& params) {
    return step(DiscretizedProblem(problem, state.field.grid), state, params);
}

// Steady-state residual sup_x |H^(x, Du_i) + sum_j d_ij u_j| per equation.
inline std::vector<double> residual(const DiscretizedProblem& dp, const VectorGridField& field,
                                    const std::vector<double>& thetas) {
    const TorusGrid& grid = dp.grid();
    const int m = dp.problem().m;
    std::vector<double> out(m, 0.0);
    for (int i = 0; i < m; ++i) {
        const std::vector<double>& u = field.comp[i];
        double worst = 0.0;
        for (long cell = 0; cell < grid.cell_count(); ++cell) {
            Point pm{0.0, 0.0}, pp{0.0, 0.0};
            for (int axis = 0; axis < grid.dim; ++axis) {
                const auto g = gradient_pair(grid, u, cell, axis);
                pm[axis] = g.minus;
                pp[axis] = g.plus;
            }
            const double r = dp.lf_at(i, cell, pm, pp, thetas[i]) + dp.coupling_term(i, cell, field);
            worst = std::max(worst, std::abs(r));
        }
        out[i] = worst;
    }
    return out;
}

inline TrajectorySample make_sample(const DiscretizedProblem& dp, const VectorGridField& field,
                                    double t, const std::vector<double>& thetas,
                                    const std::vector<long>& tracked) {
    TrajectorySample s;
    s.t = t;
    const int m = field.m();
    for (int i = 0; i < m; ++i) {
        s.sup.push_back(field.sup(i));
        s.inf.push_back(field.inf(i));
        s.lipschitz.push_back(lipschitz_estimate(field.grid, field.comp[i]));
    }
    s.residual = residual(dp, field, thetas);
    for (long cell : tracked) {
        std::vector<double> values(m);
        for (int i = 0; i < m; ++i) values[i] = field.comp[i][cell];
        s.tracked.push_back(std::move(values));
    }
    return s;
}

inline TrajectoryLog solve_until(const DiscretizedProblem& dp, const VectorGridField& u0, double T,
                                 const SchemeParams& params, const SolveOptions& options = {}) {
    if (!(T > 0.0)) throw Error("solve_until: horizon must be positive");
    check_cfl(dp, params);

    TrajectoryLog log;
    log.tracked_cells = options.tracked_cells;
    log.window_span = options.snapshot_window;
    log.initial = u0;

    EvolutionState state{u0, 0.0, 0};
    state.field.t = 0.0;
    const double guard = options.divergence_factor * (1.0 + u0.sup_abs());

    const auto record = [&](const EvolutionState& s) {
        if (!s.field.all_finite() || s.field.sup_abs() > guard)
            throw NonFiniteValue("solve_until: field diverged at t = " + std::to_string(s.t));
        log.samples.push_back(
            make_sample(dp, s.field, s.t, params.theta, log.tracked_cells));
        if (options.snapshot_window > 0.0) {
            log.window.emplace_back(s.t, s.field);
            while (!log.window.empty() &&
                   log.window.front().first < s.t - options.snapshot_window - 1e-9)
                log.window.pop_front();
        }
        if (options.observer) options.observer(s);
    };

    record(state);
    const double cadence = options.sample_every > 0.0 ? options.sample_every : T;
    double next_sample = cadence;
    while (state.t < T - 1e-12) {
        const double target = std::min(next_sample, T);
        const double dt = std::min(params.dt, target - state.t);
        state = step(dp, state, params, dt);
        if (state.t >= target - 1e-12) {
            record(state);
            if (target >= T - 1e-12) break;
            next_sample += cadence;
        }
    }

    log.final_field = state.field;
    log.final_time = state.t;
    return log;
}

inline TrajectoryLog solve_until(const ModelProblem& problem, const VectorGridField& u0, double T,
                                 const SchemeParams& params, const SolveOptions& options = {}) {
    return solve_until(DiscretizedProblem(problem, u0.grid), u0, T, params, options);
}

// Sample initial data expressions (or any closures) onto a grid.
inline VectorGridField sample_field(const ModelProblem& problem, const TorusGrid& grid) {
    VectorGridField f(grid, problem.m);
    if (problem.initial.empty()) return f;
    for (int i = 0; i < problem.m; ++i)
        for (long cell = 0; cell < grid.cell_count(); ++cell)
            f.comp[i][cell] = problem.initial[i](grid.coord(cell));
    return f;
}

}  // namespace hjsys
