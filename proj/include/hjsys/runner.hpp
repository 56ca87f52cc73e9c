#pragma once

// Command execution over a loaded scenario: analyze-coupling, evolve,
// ergodic, longtime and control. Every command writes report.json plus CSV
// series and field files into the output directory; the exit code is zero
// iff no hard error fired and every assertion listed in the report passed.

#include <filesystem>
#include <fstream>

#include "hjsys/scenario.hpp"

namespace hjsys::cli {

struct Assertion {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct RunArtifacts {
    json report;
    int exit_code = 0;
    std::vector<Assertion> assertions;

    // computed objects kept for downstream checks (gallery, tests)
    std::optional<ErgodicResult> ergodic;
    std::optional<ConvergenceReport> convergence;
    std::optional<FunctionalTrace> lambda_trace;
    std::optional<FunctionalTrace> max_trace;
    std::optional<double> ode_deviation;
    std::optional<MCEstimate> mc;
    std::optional<double> dp_at_start;
    std::optional<CrossValidation> cross_validation;
    std::optional<VectorGridField> final_field;
    std::optional<TrajectoryLog> trajectory;

    void assert_that(const std::string& name, bool pass, double value, double threshold) {
        assertions.push_back({name, pass, value, threshold});
    }
};

namespace detail {

inline json assertions_to_json(const std::vector<Assertion>& list) {
    json out = json::array();
    for (const auto& a : list)
        out.push_back(
            {{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"threshold", a.threshold}});
    return out;
}

inline json audit_to_json(const AssumptionAudit& audit) {
    const auto verdict = [](const AuditVerdict& v) {
        json j{{"pass", v.pass}};
        if (!v.witnesses.empty()) j["witnesses"] = v.witnesses;
        return j;
    };
    return json{{"periodicity", verdict(audit.periodicity)},
                {"convexity", verdict(audit.convexity)},
                {"coercivity", verdict(audit.coercivity)},
                {"zero_at_rest", verdict(audit.zero_at_rest)},
                {"nonnegative_costs", verdict(audit.nonnegative_costs)},
                {"coupling_monotone", verdict(audit.coupling_monotone)},
                {"irreducible", verdict(audit.irreducible)},
                {"degenerate_rows", verdict(audit.degenerate_rows)}};
}

inline void write_functionals_csv(const std::filesystem::path& path, const FunctionalTrace& lam,
                                  const FunctionalTrace& mx) {
    std::ofstream out(path);
    out << std::setprecision(17);
    out << "t,cell,lambda_value,max_value\n";
    for (std::size_t k = 0; k < lam.times.size(); ++k)
        for (std::size_t c = 0; c < lam.cells.size(); ++c)
            out << lam.times[k] << "," << lam.cells[c] << "," << lam.values[c][k] << ","
                << mx.values[c][k] << "\n";
}

inline void write_discount_trace_csv(const std::filesystem::path& path, const ErgodicResult& result) {
    std::ofstream out(path);
    out << std::setprecision(17);
    out << "lambda";
    const int m = static_cast<int>(result.c_estimate.size());
    for (int i = 0; i < m; ++i) out << ",lambda_v" << i;
    out << ",corrector_delta,iterations\n";
    for (const auto& entry : result.trace) {
        out << entry.lambda;
        for (int i = 0; i < m; ++i) out << "," << entry.lambda_v_at_anchor[i];
        out << "," << entry.corrector_delta << "," << entry.iterations << "\n";
    }
}

inline VectorGridField initial_field(const Scenario& scenario, const TorusGrid& grid) {
    if (scenario.run.u0_random)
        return random_lipschitz_field(grid, scenario.problem.m, scenario.run.seed,
                                      scenario.run.u0_scale);
    return sample_field(scenario.problem, grid);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void run_analyze_coupling(const Scenario& scenario, const TorusGrid& grid,
                                 const std::filesystem::path& out_dir, RunArtifacts& art) {
    const CouplingField& D = scenario.problem.coupling;
    json results;
    const auto mono = check_monotone_coupling(D);
    results["monotone"] = mono.holds;
    json violations = json::array();
    for (const auto& v : mono.violations)
        violations.push_back({{"cell", v.cell},
                              {"i", v.i},
                              {"j", v.j},
                              {"kind", to_string(v.kind)},
                              {"value", v.value}});
    results["violations"] = violations;

    const long cell0 = D.stored_cells().front();
    const Matrix& D0 = D.at(cell0);
    const auto witness = is_irreducible(D0);
    results["irreducible"] = witness.irreducible;
    if (!witness.irreducible) {
        results["separating_set"] = witness.separating_set;
    } else {
        json chains = json::array();
        for (int i = 0; i < D.m(); ++i)
            for (int j = 0; j < D.m(); ++j)
                if (i != j) chains.push_back({{"from", i}, {"to", j}, {"chain", witness.chain(i, j)}});
        results["chains"] = chains;
    }

    if (mono.holds) {
        const auto dec = m_decompose(D0);
        results["m_decomposition"] = {{"s", dec.s},
                                      {"rho", dec.rho},
                                      {"B", detail::matrix_to_json(dec.B)}};
    }
    const auto spectrum = nonzero_spectrum_check(D0);
    results["spectrum_ok"] = spectrum.ok;
    if (spectrum.r) results["min_nonzero_real_part"] = *spectrum.r;

    if (witness.irreducible) {
        const bool degenerate = ergodic_applicable_rows(scenario.problem);
        const auto perron =
            perron_left_null_vector(D0, degenerate ? PerronMode::Degenerate : PerronMode::General);
        json lam = json::array();
        for (int i = 0; i < D.m(); ++i) lam.push_back(perron.lambda_vec(i));
        results["perron"] = {{"lambda", lam}, {"kernel_dim", perron.kernel_dim}};
        if (degenerate && perron.kernel_dim == 1 && spectrum.ok && spectrum.r) {
            const auto limit = exp_limit_projector(D0);
            results["exp_limit"] = {{"projector", detail::matrix_to_json(limit.projector)},
                                    {"r", limit.r}};
        }
        if (!D.is_constant()) {
            CouplingAnalysis analysis(D, degenerate ? PerronMode::Degenerate : PerronMode::General);
            results["max_adjacent_lambda_jump"] = analysis.max_adjacent_lambda_jump();
        }
    }
    (void)grid;
    (void)out_dir;
    art.report["results"] = results;
}

inline void run_evolve(const Scenario& scenario, const TorusGrid& grid,
                       const std::filesystem::path& out_dir, RunArtifacts& art) {
    const DiscretizedProblem dp(scenario.problem, grid);
    const VectorGridField u0 = detail::initial_field(scenario, grid);
    const SchemeParams params = make_scheme_params(scenario.problem, grid, u0,
                                                   scenario.run.cfl_safety);
    SolveOptions options;
    options.sample_every = scenario.run.sample_every;
    const auto masks = compute_sets(scenario.problem, grid);
    options.tracked_cells = masks.A_cells();
    if (options.tracked_cells.size() > 64) options.tracked_cells.resize(64);
    if (scenario.run.snapshots) options.snapshot_window = scenario.run.horizon + 1.0;
    const auto log = solve_until(dp, u0, scenario.run.horizon, params, options);

    write_trajectory_csv(out_dir / "series" / "trajectory.csv", log);
    if (scenario.run.snapshots) {
        long k = 0;
        for (const auto& [t, field] : log.window)
            write_field_binary(out_dir / "fields" / ("snapshot_" + std::to_string(k++)), field);
    }
    write_field_csv(out_dir / "fields" / "final.csv", log.final_field);
    write_field_binary(out_dir / "fields" / "final", log.final_field);

    json results;
    results["dt"] = params.dt;
    results["steps"] = static_cast<long>(std::llround(log.final_time / params.dt));
    results["final_time"] = log.final_time;
    json sup = json::array(), inf = json::array(), res = json::array();
    for (int i = 0; i < scenario.problem.m; ++i) {
        sup.push_back(log.final_field.sup(i));
        inf.push_back(log.final_field.inf(i));
        res.push_back(log.samples.back().residual[i]);
    }
    results["final_sup"] = sup;
    results["final_inf"] = inf;
    results["final_residual"] = res;
    if (scenario.drift_rate != 0.0) results["drift_rate"] = scenario.drift_rate;
    art.report["results"] = results;
    art.assert_that("finite_run", log.final_field.all_finite(), 0.0, 0.0);
    art.final_field = log.final_field;
    art.trajectory = log;
}

inline void run_ergodic(const Scenario& scenario, const TorusGrid& grid,
                        const std::filesystem::path& out_dir, RunArtifacts& art) {
    const DiscretizedProblem dp(scenario.problem, grid);
    ErgodicOptions options;
    options.tol = scenario.run.tol;
    options.cfl_safety = scenario.run.cfl_safety;
    const auto schedule = default_lambda_schedule(scenario.run.lambda0, scenario.run.lambda_factor,
                                                  scenario.run.lambda_count);
    const auto result = vanishing_discount(dp, schedule, std::nullopt, options);

    detail::write_discount_trace_csv(out_dir / "series" / "discount_trace.csv", result);
    write_field_csv(out_dir / "fields" / "corrector.csv", result.corrector);
    write_field_binary(out_dir / "fields" / "corrector", result.corrector);

    json results;
    results["c_estimate"] = result.c_estimate;
    results["anchor_cell"] = result.anchor_cell;
    results["last_lambda"] = result.last_lambda;
    json gaps = json::array();
    for (int i = 1; i < scenario.problem.m; ++i)
        gaps.push_back(result.last_discounted.comp[0][result.anchor_cell] -
                       result.last_discounted.comp[i][result.anchor_cell]);
    results["component_gaps_at_anchor"] = gaps;
    if (result.bounds_check) {
        results["bounds"] = {{"lower", result.bounds_check->lower},
                             {"upper", result.bounds_check->upper},
                             {"pass", result.bounds_check->pass}};
        art.assert_that("ergodic_constant_within_bounds", result.bounds_check->pass,
                        -result.c_estimate[0], result.bounds_check->upper);
    }
    if (result.zero_constant_applicable) {
        art.assert_that("constant_vanishes_on_F", result.zero_constant_pass,
                        result.zero_constant_err, 1e-2);
        art.assert_that("corrector_vanishes_on_F", result.corrector_on_F_pass,
                        result.corrector_on_F_err, result.corrector_on_F_tol);
    }
    art.report["results"] = results;
    art.ergodic = result;
}

inline void run_longtime(const Scenario& scenario, const TorusGrid& grid,
                         const std::filesystem::path& out_dir, RunArtifacts& art) {
    const DiscretizedProblem dp(scenario.problem, grid);
    const auto masks = compute_sets(scenario.problem, grid);
    const VectorGridField u0 = detail::initial_field(scenario, grid);
    const SchemeParams params = make_scheme_params(scenario.problem, grid, u0,
                                                   scenario.run.cfl_safety);

    SolveOptions options;
    options.sample_every = scenario.run.sample_every;
    options.tracked_cells = masks.A_cells();
    if (options.tracked_cells.size() > 64) options.tracked_cells.resize(64);
    options.snapshot_window = 2.0 * scenario.run.window;
    const auto log = solve_until(dp, u0, scenario.run.horizon, params, options);
    write_trajectory_csv(out_dir / "series" / "trajectory.csv", log);

    std::vector<double> c = scenario.run.c;
    if (scenario.run.estimate_c) {
        ErgodicOptions eopt;
        eopt.tol = scenario.run.tol;
        const auto erg = vanishing_discount(dp, default_lambda_schedule(
                                                    scenario.run.lambda0,
                                                    scenario.run.lambda_factor,
                                                    scenario.run.lambda_count),
                                            std::nullopt, eopt);
        c = erg.c_estimate;
    }
    if (c.empty()) c.assign(scenario.problem.m, 0.0);

    ConvergenceOptions copt;
    copt.window_T = scenario.run.window;
    copt.osc_tol = scenario.run.osc_tol > 0.0 ? scenario.run.osc_tol
                                              : 1e-3 * (1.0 + u0.sup_abs());
    copt.c = c;
    const auto report = detect_convergence(dp, log, masks, copt, params.theta);

    json results;
    results["verdict"] = to_string(report.verdict);
    results["oscillation"] = report.oscillation;
    results["previous_oscillation"] = report.previous_oscillation;
    results["osc_tol"] = copt.osc_tol;
    results["c"] = c;
    if (scenario.drift_rate != 0.0) results["drift_rate"] = scenario.drift_rate;
    if (report.u_infinity) {
        results["stationarity_residual"] = report.stationarity_residual;
        results["equality_on_A"] = report.equality_on_A;
        write_field_csv(out_dir / "fields" / "u_infinity.csv", *report.u_infinity);
        write_field_binary(out_dir / "fields" / "u_infinity", *report.u_infinity);
    }

    if (!masks.A_empty()) {
        const auto lam_trace =
            monitor_lambda_functional(scenario.problem, log, masks, scenario.run.mono_tol);
        const auto max_trace = monitor_max_functional(log, masks, scenario.run.mono_tol);
        detail::write_functionals_csv(out_dir / "series" / "functionals.csv", lam_trace, max_trace);
        art.assert_that("lambda_functional_nonincreasing", lam_trace.monotone,
                        lam_trace.worst_rate, scenario.run.mono_tol);
        art.assert_that("max_functional_nonincreasing", max_trace.monotone, max_trace.worst_rate,
                        scenario.run.mono_tol);
        results["lambda_functional_worst_rate"] = lam_trace.worst_rate;
        results["max_functional_worst_rate"] = max_trace.worst_rate;

        const long cell = masks.A_cells().front();
        const double t0 =
            scenario.run.ode_t0 > 0.0 ? scenario.run.ode_t0 : 0.6 * scenario.run.horizon;
        const double deviation =
            aubry_ode_check(log, cell, scenario.problem.coupling.at(
                                           scenario.problem.coupling.is_constant() ? kConstantCell
                                                                                   : cell),
                            t0, masks);
        results["aubry_ode_deviation"] = deviation;
        results["aubry_ode_t0"] = t0;
        art.ode_deviation = deviation;
        art.lambda_trace = lam_trace;
        art.max_trace = max_trace;
    }

    art.report["results"] = results;
    art.convergence = report;
    art.final_field = log.final_field;
    art.trajectory = log;
}

inline void run_control(const Scenario& scenario, const TorusGrid& grid,
                        const std::filesystem::path& out_dir, RunArtifacts& art) {
    if (!scenario.control || !scenario.control_setup)
        throw AuditFatal("the control command needs a control scenario");
    const ControlProblem& problem = *scenario.control;
    const ControlSetup& setup = *scenario.control_setup;

    double sigma_max = 0.0;
    for (int i = 0; i < problem.m; ++i)
        for (long cell = 0; cell < grid.cell_count(); ++cell)
            sigma_max = std::max(sigma_max, problem.sigma[i](grid.coord(cell)));
    double dt = scenario.run.dp_dt;
    if (dt <= 0.0) dt = sigma_max > 0.0 ? grid.dx() / sigma_max : grid.dx();
    const long layers = std::max<long>(1, std::lround(std::ceil(problem.horizon / dt - 1e-12)));
    dt = problem.horizon / layers;

    const auto dpres = dp_value(problem, grid, dt);
    const long cell0 = grid.nearest_cell(setup.x0);
    const double dp_at = dpres.final_layer().comp[setup.mode0][cell0];

    SimulationOptions sim;
    sim.h_path = dt / 4.0;
    const auto mc = simulate_pdmp(problem, setup.policy, setup.x0, setup.mode0, scenario.run.seed,
                                  scenario.run.paths, sim);

    const auto xval = cross_validate(problem, grid, dt, problem.horizon);

    write_field_csv(out_dir / "fields" / "dp_value.csv", dpres.final_layer());
    write_field_binary(out_dir / "fields" / "dp_value", dpres.final_layer());

    json results;
    results["mc"] = {{"mean", mc.mean},
                     {"std_error", mc.std_error},
                     {"paths", mc.paths},
                     {"seed", mc.master_seed}};
    results["dp_value_at_start"] = dp_at;
    results["dp_dt"] = dt;
    results["cross_validation"] = {{"times", xval.times},
                                   {"discrepancy", xval.discrepancy},
                                   {"worst", xval.worst}};
    art.report["results"] = results;

    // a policy cost can never beat the value function
    const double slack = 3.0 * mc.std_error + 0.05;
    art.assert_that("mc_lower_bounds_dp", mc.mean >= dp_at - slack, mc.mean - dp_at, -slack);
    art.assert_that("dp_matches_pde", xval.worst <= 0.1, xval.worst, 0.1);
    art.mc = mc;
    art.dp_at_start = dp_at;
    art.cross_validation = xval;
}

// ---------------------------------------------------------------------------

inline RunArtifacts run_scenario(const Scenario& scenario,
                                 const std::filesystem::path& out_override = {}) {
    RunArtifacts art;
    const std::filesystem::path out_dir =
        out_override.empty() ? std::filesystem::path(scenario.run.out) : out_override;
    std::filesystem::create_directories(out_dir / "series");
    std::filesystem::create_directories(out_dir / "fields");

    art.report["label"] = scenario.label;
    art.report["kind"] = scenario.kind;
    art.report["command"] = scenario.run.command;
    art.report["grid"] = scenario.run.grid_n;
    art.report["seed"] = scenario.run.seed;
    art.report["audit"] = detail::audit_to_json(scenario.audit);
    art.report["warnings"] = scenario.warnings;
    set_max_threads(scenario.run.threads);

    const TorusGrid grid(scenario.problem.dim, scenario.run.grid_n, scenario.problem.period);
    try {
        if (scenario.run.command == "analyze-coupling")
            run_analyze_coupling(scenario, grid, out_dir, art);
        else if (scenario.run.command == "evolve")
            run_evolve(scenario, grid, out_dir, art);
        else if (scenario.run.command == "ergodic")
            run_ergodic(scenario, grid, out_dir, art);
        else if (scenario.run.command == "longtime")
            run_longtime(scenario, grid, out_dir, art);
        else if (scenario.run.command == "control")
            run_control(scenario, grid, out_dir, art);
        else
            throw SchemaError("unknown command '" + scenario.run.command + "'");
    } catch (const Error& e) {
        art.report["error"] = e.what();
        art.exit_code = 1;
    }

    bool all_pass = art.exit_code == 0;
    for (const auto& a : art.assertions) all_pass = all_pass && a.pass;
    art.report["assertions"] = detail::assertions_to_json(art.assertions);
    art.report["ok"] = all_pass;
    art.exit_code = all_pass ? 0 : 1;

    std::ofstream out(out_dir / "report.json");
    out << art.report.dump(2) << "\n";
    return art;
}

}  // namespace hjsys::cli
