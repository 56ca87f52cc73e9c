#pragma once

// Large-time diagnostics on a recorded trajectory: convergence detection for
// u(.,t) + ct with a trailing-window oscillation test, the weighted and max
// functionals on the degenerate set A (nonincreasing along the flow), and the
// pointwise reduction to the linear system u' + D u = 0 on A, checked against
// exp(-(t-t0)D).

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hjsys/coupling.hpp"
#include "hjsys/ergodic.hpp"
#include "hjsys/evolutive.hpp"

namespace hjsys {

enum class Verdict { Converged, NonConvergent, Undecided };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Converged: return "CONVERGED";
        case Verdict::NonConvergent: return "NON_CONVERGENT";
        case Verdict::Undecided: return "UNDECIDED";
    }
    return "?";
}

struct ConvergenceReport {
    Verdict verdict = Verdict::Undecided;
    std::optional<VectorGridField> u_infinity;
    double oscillation = 0.0;            // trailing window, after the ct shift
    double previous_oscillation = 0.0;   // window before the trailing one
    double stationarity_residual = 0.0;  // of u_infinity, when converged
    double equality_on_A = 0.0;          // max_{i,j} sup_A |(u_inf)_i - (u_inf)_j|
    double osc_tol = 0.0;
};

struct FunctionalTrace {
    std::vector<double> times;
    std::vector<long> cells;                        // A-cells, in tracked order
    std::vector<std::vector<double>> values;        // values[k][sample]
    bool monotone = true;
    double worst_rate = 0.0;  // most positive per-unit-time increase
    double mono_tol = 0.0;
};

namespace detail {

// Map A-cells to their indices in the trajectory's tracked list.
inline std::vector<std::pair<long, std::size_t>> tracked_aubry_cells(const TrajectoryLog& traj,
                                                                     const SetMasks& masks) {
    std::vector<std::pair<long, std::size_t>> out;
    for (std::size_t k = 0; k < traj.tracked_cells.size(); ++k)
        if (masks.A_mask[traj.tracked_cells[k]]) out.emplace_back(traj.tracked_cells[k], k);
    return out;
}

inline FunctionalTrace monotone_trace(const TrajectoryLog& traj, const SetMasks& masks,
                                      double mono_tol,
                                      const std::function<double(long, const std::vector<double>&)>& functional) {
    if (masks.A_empty()) throw EmptyAubrySet("functional monitor: A is empty");
    const auto cells = tracked_aubry_cells(traj, masks);
    if (cells.empty())
        throw EmptyAubrySet("functional monitor: no A-cell is tracked in the trajectory");

    FunctionalTrace trace;
    trace.mono_tol = mono_tol;
    for (const auto& s : traj.samples) trace.times.push_back(s.t);
    for (const auto& [cell, slot] : cells) {
        trace.cells.push_back(cell);
        std::vector<double> series;
        series.reserve(traj.samples.size());
        for (const auto& s : traj.samples) series.push_back(functional(cell, s.tracked[slot]));
        trace.values.push_back(std::move(series));
    }
    for (const auto& series : trace.values)
        for (std::size_t k = 1; k < series.size(); ++k) {
            const double dt = trace.times[k] - trace.times[k - 1];
            if (dt <= 0.0) continue;
            const double rate = (series[k] - series[k - 1]) / dt;
            trace.worst_rate = std::max(trace.worst_rate, rate);
            if (rate > mono_tol) trace.monotone = false;
        }
    return trace;
}

}  // namespace detail

// sum_i Lambda_i(x) u_i(x,t) per A-cell, with Lambda from the coupling field.
inline FunctionalTrace monitor_lambda_functional(const ModelProblem& problem,
                                                 const TrajectoryLog& traj, const SetMasks& masks,
                                                 double mono_tol = 1e-3) {
    CouplingAnalysis analysis(problem.coupling);
    return detail::monotone_trace(traj, masks, mono_tol,
                                  [&](long cell, const std::vector<double>& u) {
                                      const Vector& lam = analysis.perron_at(cell).lambda_vec;
                                      double acc = 0.0;
                                      for (int i = 0; i < problem.m; ++i) acc += lam(i) * u[i];
                                      return acc;
                                  });
}

inline FunctionalTrace monitor_max_functional(const TrajectoryLog& traj, const SetMasks& masks,
                                              double mono_tol = 1e-3) {
    return detail::monotone_trace(traj, masks, mono_tol,
                                  [](long, const std::vector<double>& u) {
                                      return *std::max_element(u.begin(), u.end());
                                  });
}

// ---------------------------------------------------------------------------

struct ConvergenceOptions {
    double window_T = 5.0;
    double osc_tol = 1e-3;
    std::vector<double> c;  // ergodic constant, zero when omitted
};

inline ConvergenceReport detect_convergence(const DiscretizedProblem& dp,
                                            const TrajectoryLog& traj, const SetMasks& masks,
                                            const ConvergenceOptions& options,
                                            const std::vector<double>& thetas) {
    const double T = traj.final_time;
    const double w = options.window_T;
    if (traj.duration() < 2.0 * w - 1e-9)
        throw InsufficientHorizon("detect_convergence: trajectory shorter than two windows");
    if (traj.window.empty() || traj.window.front().first > T - 2.0 * w + 1e-9)
        throw InsufficientHorizon("detect_convergence: snapshot window does not span 2 windows");

    const int m = dp.problem().m;
    const std::vector<double> c =
        options.c.empty() ? std::vector<double>(m, 0.0) : options.c;

    // shift by ct and measure the sup over snapshot pairs within a window
    const auto shifted_gap = [&](const std::pair<double, VectorGridField>& a,
                                 const std::pair<double, VectorGridField>& b) {
        double gap = 0.0;
        for (int i = 0; i < m; ++i)
            for (long cell = 0; cell < dp.grid().cell_count(); ++cell)
                gap = std::max(gap, std::abs((a.second.comp[i][cell] + c[i] * a.first) -
                                             (b.second.comp[i][cell] + c[i] * b.first)));
        return gap;
    };
    const auto window_oscillation = [&](double lo, double hi) {
        std::vector<const std::pair<double, VectorGridField>*> snaps;
        for (const auto& snap : traj.window)
            if (snap.first >= lo - 1e-9 && snap.first <= hi + 1e-9) snaps.push_back(&snap);
        double osc = 0.0;
        for (std::size_t a = 0; a < snaps.size(); ++a)
            for (std::size_t b = a + 1; b < snaps.size(); ++b)
                osc = std::max(osc, shifted_gap(*snaps[a], *snaps[b]));
        return osc;
    };

    ConvergenceReport report;
    report.osc_tol = options.osc_tol;
    const double osc_last = window_oscillation(T - w, T);
    const double osc_prev = window_oscillation(T - 2.0 * w, T - w);
    report.oscillation = osc_last;
    report.previous_oscillation = osc_prev;

    if (osc_last <= options.osc_tol) {
        report.verdict = Verdict::Converged;
        // u_infinity: time-average of the shifted trailing window, which
        // averages out sub-tolerance limit-cycle ripple
        VectorGridField mean(dp.grid(), m);
        long count = 0;
        for (const auto& snap : traj.window) {
            if (snap.first < T - w - 1e-9) continue;
            for (int i = 0; i < m; ++i)
                for (long cell = 0; cell < dp.grid().cell_count(); ++cell)
                    mean.comp[i][cell] += snap.second.comp[i][cell] + c[i] * snap.first;
            ++count;
        }
        for (auto& compvec : mean.comp)
            for (auto& v : compvec) v /= count;
        mean.t = T;

        // the shifted limit w = u + ct solves H_i(Dw_i) + (Dw)_i = c_i
        const auto res = stationary_residual(dp, mean, c, thetas);
        report.stationarity_residual = *std::max_element(res.begin(), res.end());

        for (long cell = 0; cell < dp.grid().cell_count(); ++cell)
            if (masks.A_mask[cell])
                for (int i = 0; i < m; ++i)
                    for (int j = i + 1; j < m; ++j)
                        report.equality_on_A =
                            std::max(report.equality_on_A,
                                     std::abs(mean.comp[i][cell] - mean.comp[j][cell]));
        report.u_infinity = std::move(mean);
    } else if (osc_last > 10.0 * options.osc_tol && osc_prev > 10.0 * options.osc_tol) {
        report.verdict = Verdict::NonConvergent;
    } else {
        report.verdict = Verdict::Undecided;
    }
    return report;
}

// ---------------------------------------------------------------------------
// ODE reduction on A: after transients, u(cell, t) follows exp(-(t-t0)D) u(cell, t0).

inline double aubry_ode_check(const TrajectoryLog& traj, long cell, const Matrix& D, double t0,
                              const SetMasks& masks) {
    if (!masks.A_mask[cell])
        throw CellNotInAubrySet("aubry_ode_check: cell " + std::to_string(cell));
    std::size_t slot = traj.tracked_cells.size();
    for (std::size_t k = 0; k < traj.tracked_cells.size(); ++k)
        if (traj.tracked_cells[k] == cell) slot = k;
    if (slot == traj.tracked_cells.size())
        throw CellNotInAubrySet("aubry_ode_check: cell is not tracked");

    // anchor at the first sample >= t0
    std::size_t base = traj.samples.size();
    for (std::size_t k = 0; k < traj.samples.size(); ++k)
        if (traj.samples[k].t >= t0 - 1e-9) {
            base = k;
            break;
        }
    if (base >= traj.samples.size())
        throw InsufficientHorizon("aubry_ode_check: no samples after t0");

    const int m = static_cast<int>(D.rows());
    Vector u0(m);
    for (int i = 0; i < m; ++i) u0(i) = traj.samples[base].tracked[slot][i];
    const double anchor_time = traj.samples[base].t;

    double deviation = 0.0;
    for (std::size_t k = base; k < traj.samples.size(); ++k) {
        const Vector predicted = matrix_exponential(D, traj.samples[k].t - anchor_time) * u0;
        for (int i = 0; i < m; ++i)
            deviation =
                std::max(deviation, std::abs(predicted(i) - traj.samples[k].tracked[slot][i]));
    }
    return deviation;
}

}  // namespace hjsys
