#pragma once

// Random-switching optimal control: piecewise-deterministic trajectories with
// dynamics dX/dt = sigma_i(X) a, |a| <= 1, mode switches by a continuous-time
// Markov chain with rates gamma_ij, running costs f_i and terminal data u0.
// Policies are evaluated by Monte Carlo over exact exponential clocks; the
// value function comes from a backward semi-Lagrangian recursion; both are
// cross-validated against the induced coupled system solved by the monotone
// scheme (d_ii = sum_{j != i} gamma_ij, d_ij = -gamma_ij).

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hjsys/evolutive.hpp"
#include "hjsys/parallel.hpp"

namespace hjsys {

struct ControlProblem {
    int m = 1;
    int dim = 1;
    double period = 1.0;
    std::vector<ScalarField> sigma;     // speeds, > 0
    std::vector<ScalarField> cost;      // f_i >= 0
    Matrix gamma;                       // switching rates, gamma_ij >= 0, diagonal ignored
    std::vector<ScalarField> terminal;  // u_{0,i}
    double horizon = 1.0;

    void validate() const {
        if (m < 1 || static_cast<int>(sigma.size()) != m || static_cast<int>(cost.size()) != m ||
            static_cast<int>(terminal.size()) != m)
            throw Error("control: field counts must match m");
        if (gamma.rows() != m || gamma.cols() != m)
            throw Error("control: gamma must be m x m");
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j && gamma(i, j) < 0.0) throw Error("control: negative switching rate");
        if (!(horizon > 0.0)) throw Error("control: horizon must be positive");
    }

    double rate(int i) const {
        double total = 0.0;
        for (int j = 0; j < m; ++j)
            if (j != i) total += gamma(i, j);
        return total;
    }

    // d_ii = sum_{j != i} gamma_ij, d_ij = -gamma_ij: zero row sums by construction
    Matrix induced_coupling() const {
        Matrix D = Matrix::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j)
                if (j != i) D(i, j) = -gamma(i, j);
            D(i, i) = rate(i);
        }
        return D;
    }

    // The value functions solve the coupled system with F_i = sigma_i |p|.
    ModelProblem induced_model() const {
        validate();
        ModelProblem p;
        p.m = m;
        p.dim = dim;
        p.period = period;
        for (int i = 0; i < m; ++i)
            p.hamiltonians.push_back(HamiltonianSpec::eikonal(sigma[i], cost[i]));
        p.coupling = CouplingField::constant(induced_coupling());
        p.initial = terminal;
        p.label = "induced switching system";
        return p;
    }
};

enum class PolicyKind { Zero, TowardPoint, Feedback };

struct PolicySpec {
    PolicyKind kind = PolicyKind::Zero;
    Point target{0.0, 0.0};  // TowardPoint
    // Feedback: unit direction per mode per cell on a grid
    TorusGrid table_grid;
    std::vector<std::vector<Point>> table;  // table[mode][cell]

    static PolicySpec zero() { return {}; }
    static PolicySpec toward_point(Point target) {
        PolicySpec p;
        p.kind = PolicyKind::TowardPoint;
        p.target = target;
        return p;
    }
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long paths = 0;
    std::uint64_t master_seed = 0;
};

namespace detail {

// shortest periodic displacement from a to b
inline double periodic_delta(double a, double b, double period) {
    double d = std::fmod(b - a, period);
    if (d > 0.5 * period) d -= period;
    if (d < -0.5 * period) d += period;
    return d;
}

inline double wrap_coord(double x, double period) {
    double r = std::fmod(x, period);
    return r < 0.0 ? r + period : r;
}

inline Point policy_direction(const PolicySpec& policy, const ControlProblem& problem, int mode,
                              const Point& x) {
    switch (policy.kind) {
        case PolicyKind::Zero:
            return {0.0, 0.0};
        case PolicyKind::TowardPoint: {
            Point d{periodic_delta(x[0], policy.target[0], problem.period),
                    problem.dim == 2 ? periodic_delta(x[1], policy.target[1], problem.period) : 0.0};
            const double n = norm2(d, problem.dim);
            if (n < 1e-12) return {0.0, 0.0};
            return {d[0] / n, problem.dim == 2 ? d[1] / n : 0.0};
        }
        case PolicyKind::Feedback:
            return policy.table[mode][policy.table_grid.nearest_cell(x)];
    }
    return {0.0, 0.0};
}

// Deterministic per-path seed derived from the master seed (splitmix64).
inline std::uint64_t path_seed(std::uint64_t master, long path) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(path + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

struct SimulationOptions {
    double h_path = 1e-3;  // deterministic-motion substep
};

inline MCEstimate simulate_pdmp(const ControlProblem& problem, const PolicySpec& policy,
                                const Point& x0, int mode0, std::uint64_t seed, long n_paths,
                                const SimulationOptions& options = {}) {
    problem.validate();
    if (mode0 < 0 || mode0 >= problem.m) throw IndexOutOfRange("simulate_pdmp: bad start mode");

    std::vector<double> costs(n_paths, 0.0);
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t path) {
        std::mt19937_64 rng(detail::path_seed(seed, static_cast<long>(path)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        Point x = x0;
        int mode = mode0;
        double t = 0.0;
        double accumulated = 0.0;

        const auto advance = [&](double duration) {
            double remaining = duration;
            while (remaining > 1e-15) {
                const double h = std::min(options.h_path, remaining);
                const Point a = detail::policy_direction(policy, problem, mode, x);
                accumulated += h * problem.cost[mode](x);
                const double speed = problem.sigma[mode](x);
                x[0] = detail::wrap_coord(x[0] + h * speed * a[0], problem.period);
                if (problem.dim == 2)
                    x[1] = detail::wrap_coord(x[1] + h * speed * a[1], problem.period);
                remaining -= h;
            }
        };

        while (t < problem.horizon) {
            const double remaining = problem.horizon - t;
            const double rate = problem.rate(mode);
            double clock = remaining;  // no switch when rate = 0
            if (rate > 0.0) {
                const double draw = unit(rng);
                clock = -std::log(1.0 - draw) / rate;
            }
            const double until = std::min(clock, remaining);
            advance(until);
            t += until;
            if (clock < remaining) {
                // switch: next mode with probability gamma_ij / rate
                double pick = unit(rng) * rate;
                int next = mode;
                for (int j = 0; j < problem.m; ++j) {
                    if (j == mode) continue;
                    pick -= problem.gamma(mode, j);
                    if (pick <= 0.0) {
                        next = j;
                        break;
                    }
                }
                mode = next;
            }
        }
        accumulated += problem.terminal[mode](x);
        costs[path] = accumulated;
    }, 4096);

    MCEstimate est;
    est.paths = n_paths;
    est.master_seed = seed;
    double sum = 0.0;
    for (double c : costs) sum += c;
    est.mean = sum / n_paths;
    double var = 0.0;
    for (double c : costs) var += (c - est.mean) * (c - est.mean);
    var = n_paths > 1 ? var / (n_paths - 1) : 0.0;
    est.std_error = std::sqrt(var / n_paths);
    return est;
}

// ---------------------------------------------------------------------------
// Backward semi-Lagrangian recursion on the periodic grid. Layer k holds the
// value with horizon k*dt; the recursion is monotone whenever
// dt * max_i rate_i <= 1 and feet stay within one cell (dt * sigma <= dx).

struct DPResult {
    double dt = 0.0;
    std::vector<VectorGridField> layers;  // layers[k]: horizon k*dt

    const VectorGridField& final_layer() const { return layers.back(); }
};

namespace detail {

inline double interp_periodic(const TorusGrid& grid, const std::vector<double>& u, const Point& x) {
    const double gx = x[0] / grid.dx();
    const long jx = static_cast<long>(std::floor(gx));
    const double wx = gx - jx;
    if (grid.dim == 1) {
        return (1.0 - wx) * u[grid.wrap(jx)] + wx * u[grid.wrap(jx + 1)];
    }
    const double gy = x[1] / grid.dx();
    const long jy = static_cast<long>(std::floor(gy));
    const double wy = gy - jy;
    const double v00 = u[grid.index(jx, jy)];
    const double v10 = u[grid.index(jx + 1, jy)];
    const double v01 = u[grid.index(jx, jy + 1)];
    const double v11 = u[grid.index(jx + 1, jy + 1)];
    return (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01) + wx * ((1.0 - wy) * v10 + wy * v11);
}

inline std::vector<Point> direction_set(int dim) {
    std::vector<Point> dirs{{0.0, 0.0}};
    if (dim == 1) {
        dirs.push_back({1.0, 0.0});
        dirs.push_back({-1.0, 0.0});
    } else {
        for (int k = 0; k < 16; ++k) {
            const double angle = 2.0 * 3.14159265358979323846 * k / 16.0;
            dirs.push_back({std::cos(angle), std::sin(angle)});
        }
    }
    return dirs;
}

}  // namespace detail

inline DPResult dp_value(const ControlProblem& problem, const TorusGrid& grid, double dt) {
    problem.validate();
    double max_rate = 0.0;
    for (int i = 0; i < problem.m; ++i) max_rate = std::max(max_rate, problem.rate(i));
    if (dt * max_rate > 1.0 + 1e-12)
        throw StabilityViolated("dp_value: dt * max switching rate exceeds 1");

    // presample speeds and costs
    const long cells = grid.cell_count();
    std::vector<std::vector<double>> sigma(problem.m, std::vector<double>(cells));
    std::vector<std::vector<double>> cost(problem.m, std::vector<double>(cells));
    double sigma_max = 0.0;
    for (int i = 0; i < problem.m; ++i)
        for (long c = 0; c < cells; ++c) {
            sigma[i][c] = problem.sigma[i](grid.coord(c));
            cost[i][c] = problem.cost[i](grid.coord(c));
            sigma_max = std::max(sigma_max, sigma[i][c]);
        }
    if (dt * sigma_max > grid.dx() + 1e-12)
        throw StabilityViolated("dp_value: feet leave the neighboring cell (dt sigma > dx)");

    const auto dirs = detail::direction_set(grid.dim);
    const long n_layers = std::lround(problem.horizon / dt);
    if (std::abs(n_layers * dt - problem.horizon) > 1e-9 * std::max(1.0, problem.horizon))
        throw StabilityViolated("dp_value: dt must divide the horizon");

    DPResult result;
    result.dt = dt;
    VectorGridField layer(grid, problem.m);
    for (int i = 0; i < problem.m; ++i)
        for (long c = 0; c < cells; ++c) layer.comp[i][c] = problem.terminal[i](grid.coord(c));
    layer.t = 0.0;
    result.layers.push_back(layer);

    for (long k = 1; k <= n_layers; ++k) {
        const VectorGridField& prev = result.layers.back();
        VectorGridField next(grid, problem.m);
        next.t = k * dt;
        for (int i = 0; i < problem.m; ++i) {
            const double gamma_i = problem.rate(i);
            parallel_for(static_cast<std::size_t>(cells), [&](std::size_t c) {
                const long cell = static_cast<long>(c);
                const Point x = grid.coord(cell);
                double best = std::numeric_limits<double>::infinity();
                for (const Point& a : dirs) {
                    Point foot{detail::wrap_coord(x[0] + dt * sigma[i][cell] * a[0], grid.period),
                               grid.dim == 2
                                   ? detail::wrap_coord(x[1] + dt * sigma[i][cell] * a[1], grid.period)
                                   : 0.0};
                    best = std::min(best, detail::interp_periodic(grid, prev.comp[i], foot));
                }
                double switching = 0.0;
                for (int j = 0; j < problem.m; ++j)
                    if (j != i) switching += problem.gamma(i, j) * prev.comp[j][cell];
                next.comp[i][cell] =
                    (1.0 - dt * gamma_i) * (dt * cost[i][cell] + best) + dt * switching;
            });
        }
        result.layers.push_back(std::move(next));
    }
    return result;
}

// Greedy feedback policy from the final DP layer.
inline PolicySpec extract_feedback_policy(const ControlProblem& problem, const TorusGrid& grid,
                                          const DPResult& dp) {
    PolicySpec policy;
    policy.kind = PolicyKind::Feedback;
    policy.table_grid = grid;
    policy.table.assign(problem.m, std::vector<Point>(grid.cell_count(), {0.0, 0.0}));
    const auto dirs = detail::direction_set(grid.dim);
    const VectorGridField& value = dp.final_layer();
    for (int i = 0; i < problem.m; ++i)
        for (long cell = 0; cell < grid.cell_count(); ++cell) {
            const Point x = grid.coord(cell);
            const double speed = problem.sigma[i](x);
            double best = std::numeric_limits<double>::infinity();
            Point best_dir{0.0, 0.0};
            for (const Point& a : dirs) {
                Point foot{detail::wrap_coord(x[0] + dp.dt * speed * a[0], grid.period),
                           grid.dim == 2
                               ? detail::wrap_coord(x[1] + dp.dt * speed * a[1], grid.period)
                               : 0.0};
                const double v = detail::interp_periodic(grid, value.comp[i], foot);
                if (v < best) {
                    best = v;
                    best_dir = a;
                }
            }
            policy.table[i][cell] = best_dir;
        }
    return policy;
}

// ---------------------------------------------------------------------------
// Cross-validation: DP value vs the induced coupled system from the same
// terminal data, compared at matched horizons.

struct CrossValidation {
    std::vector<double> times;
    std::vector<double> discrepancy;  // max_i sup_x |dp - pde| at each time
    double worst = 0.0;
};

inline CrossValidation cross_validate(const ControlProblem& problem, const TorusGrid& grid,
                                      double dt, double T, int matched_times = 4) {
    ControlProblem sub = problem;
    sub.horizon = T;
    const ModelProblem model = sub.induced_model();
    const DiscretizedProblem dp_model(model, grid);

    // align dt with the matched-time cadence
    const double slice = T / matched_times;
    const long per_slice = std::max<long>(1, std::lround(std::ceil(slice / dt - 1e-12)));
    const double dt_dp = slice / per_slice;
    const DPResult dpres = dp_value(sub, grid, dt_dp);

    VectorGridField u0 = sample_field(model, grid);
    const SchemeParams params = make_scheme_params(model, grid, u0);
    SolveOptions options;
    options.sample_every = slice;
    options.snapshot_window = T + 1.0;  // keep all sampled snapshots
    const TrajectoryLog log = solve_until(dp_model, u0, T, params, options);

    CrossValidation out;
    for (int k = 1; k <= matched_times; ++k) {
        const double t = k * slice;
        const VectorGridField& dp_layer = dpres.layers[k * per_slice];
        const VectorGridField* pde = nullptr;
        for (const auto& snap : log.window)
            if (std::abs(snap.first - t) < 1e-9) pde = &snap.second;
        if (!pde) throw Error("cross_validate: missing matched snapshot");
        double gap = 0.0;
        for (int i = 0; i < problem.m; ++i)
            for (long c = 0; c < grid.cell_count(); ++c)
                gap = std::max(gap, std::abs(dp_layer.comp[i][c] - pde->comp[i][c]));
        out.times.push_back(t);
        out.discrepancy.push_back(gap);
        out.worst = std::max(out.worst, gap);
    }
    return out;
}

}  // namespace hjsys
