#pragma once

// Scenario files, orchestration and reports. A scenario is a JSON document
// declaring either a coupled-system problem (kind "model") or a switching
// control problem (kind "control"), plus a run block with the command, grid,
// horizon, discount schedule, tolerances, output directory and seed.
// Loading validates the schema, fills defaults (making serialization
// canonical) and attaches the assumption audit; audit failures warn,
// structural mismatches throw.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjsys/control.hpp"
#include "hjsys/ergodic.hpp"
#include "hjsys/expr.hpp"
#include "hjsys/field_io.hpp"
#include "hjsys/longtime.hpp"

namespace hjsys::cli {

using nlohmann::json;

struct RunConfig {
    std::string command = "evolve";
    int grid_n = 128;
    double horizon = 10.0;
    double lambda0 = 0.5;
    double lambda_factor = 0.5;
    int lambda_count = 13;
    double sample_every = 0.25;
    double window = 5.0;
    double osc_tol = 0.0;   // 0: auto, 1e-3 * (1 + |u0|_inf)
    double mono_tol = 1e-3;
    double tol = 1e-6;
    double cfl_safety = 0.9;
    double dp_dt = 0.0;     // 0: auto, dx / max sigma
    double ode_t0 = 0.0;    // 0: auto, 0.6 * horizon
    long paths = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
    bool u0_random = false;
    double u0_scale = 0.3;
    bool snapshots = false;
    bool estimate_c = false;
    std::vector<double> c;  // empty: zeros
    std::string out = "out";
};

struct ControlSetup {
    PolicySpec policy;
    Point x0{0.0, 0.0};
    int mode0 = 0;
};

struct Scenario {
    std::string label;
    std::string kind = "model";  // "model" | "control"
    ModelProblem problem;        // induced problem for control scenarios
    std::optional<ControlProblem> control;
    std::optional<ControlSetup> control_setup;
    RunConfig run;
    AssumptionAudit audit;
    std::vector<std::string> warnings;
    json canonical;
    double drift_rate = 0.0;  // added back by the cost-shift preprocessor
};

// ---------------------------------------------------------------------------
// helpers

inline ScalarField field_from_expression(const std::string& text, int dim) {
    Expression e = Expression::parse(text);
    return [e, dim](const Point& x) { return e.eval(x[0], dim == 2 ? x[1] : 0.0); };
}

inline VectorGridField random_lipschitz_field(const TorusGrid& grid, int m, std::uint64_t seed,
                                              double scale = 0.3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-scale, scale);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    VectorGridField u(grid, m);
    for (int i = 0; i < m; ++i) {
        const double a1 = amp(rng), a2 = amp(rng);
        const double f1 = phase(rng), f2 = phase(rng);
        for (long c = 0; c < grid.cell_count(); ++c) {
            const double s = 6.283185307179586 * grid.coord(c)[0] / grid.period;
            u.comp[i][c] = a1 * std::sin(s + f1) + 0.5 * a2 * std::sin(2.0 * s + f2);
        }
    }
    return u;
}

namespace detail {

template <typename T>
T require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw SchemaError("missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError("field '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError("field '" + key + "' has the wrong type");
    }
}

inline Matrix matrix_from_json(const json& rows, int expect_m, const std::string& what) {
    if (!rows.is_array() || rows.empty()) throw SchemaError(what + " must be a nonempty array");
    const int m = static_cast<int>(rows.size());
    if (expect_m > 0 && m != expect_m)
        throw SchemaError(what + " has dimension " + std::to_string(m) + ", expected " +
                          std::to_string(expect_m));
    Matrix M(m, m);
    for (int i = 0; i < m; ++i) {
        const auto& row = rows.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != m)
            throw SchemaError(what + " row " + std::to_string(i) + " must have " +
                              std::to_string(m) + " entries");
        for (int j = 0; j < m; ++j) {
            if (!row.at(j).is_number()) throw SchemaError(what + " entries must be numbers");
            M(i, j) = row.at(j).get<double>();
        }
    }
    return M;
}

inline json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline RunConfig run_from_json(const json& j) {
    RunConfig run;
    run.command = get_or<std::string>(j, "command", run.command);
    run.grid_n = get_or<int>(j, "grid", run.grid_n);
    run.horizon = get_or<double>(j, "horizon", run.horizon);
    run.lambda0 = get_or<double>(j, "lambda0", run.lambda0);
    run.lambda_factor = get_or<double>(j, "lambda_factor", run.lambda_factor);
    run.lambda_count = get_or<int>(j, "lambda_count", run.lambda_count);
    run.sample_every = get_or<double>(j, "sample_every", run.sample_every);
    run.window = get_or<double>(j, "window", run.window);
    run.osc_tol = get_or<double>(j, "osc_tol", run.osc_tol);
    run.mono_tol = get_or<double>(j, "mono_tol", run.mono_tol);
    run.tol = get_or<double>(j, "tol", run.tol);
    run.cfl_safety = get_or<double>(j, "cfl_safety", run.cfl_safety);
    run.dp_dt = get_or<double>(j, "dp_dt", run.dp_dt);
    run.ode_t0 = get_or<double>(j, "ode_t0", run.ode_t0);
    run.paths = get_or<long>(j, "paths", run.paths);
    run.seed = get_or<std::uint64_t>(j, "seed", run.seed);
    run.threads = get_or<int>(j, "threads", run.threads);
    run.u0_random = get_or<bool>(j, "u0_random", run.u0_random);
    run.u0_scale = get_or<double>(j, "u0_scale", run.u0_scale);
    run.snapshots = get_or<bool>(j, "snapshots", run.snapshots);
    run.estimate_c = get_or<bool>(j, "estimate_c", run.estimate_c);
    run.c = get_or<std::vector<double>>(j, "c", run.c);
    run.out = get_or<std::string>(j, "out", run.out);
    return run;
}

inline json run_to_json(const RunConfig& run) {
    json j;
    j["command"] = run.command;
    j["grid"] = run.grid_n;
    j["horizon"] = run.horizon;
    j["lambda0"] = run.lambda0;
    j["lambda_factor"] = run.lambda_factor;
    j["lambda_count"] = run.lambda_count;
    j["sample_every"] = run.sample_every;
    j["window"] = run.window;
    j["osc_tol"] = run.osc_tol;
    j["mono_tol"] = run.mono_tol;
    j["tol"] = run.tol;
    j["cfl_safety"] = run.cfl_safety;
    j["dp_dt"] = run.dp_dt;
    j["ode_t0"] = run.ode_t0;
    j["paths"] = run.paths;
    j["seed"] = run.seed;
    j["threads"] = run.threads;
    j["u0_random"] = run.u0_random;
    j["u0_scale"] = run.u0_scale;
    j["snapshots"] = run.snapshots;
    j["estimate_c"] = run.estimate_c;
    if (!run.c.empty()) j["c"] = run.c;
    j["out"] = run.out;
    return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// scenario <-> json

inline Scenario scenario_from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("scenario must be a JSON object");
    const int version = detail::get_or<int>(doc, "schema_version", 1);
    if (version != 1) throw SchemaError("unsupported schema_version " + std::to_string(version));

    Scenario scenario;
    scenario.label = detail::get_or<std::string>(doc, "label", "unnamed");
    scenario.kind = detail::get_or<std::string>(doc, "kind", "model");
    if (scenario.kind != "model" && scenario.kind != "control")
        throw SchemaError("kind must be 'model' or 'control'");
    scenario.run = detail::run_from_json(doc.contains("run") ? doc.at("run") : json::object());

    const int m = detail::require<int>(doc, "m");
    const int dim = detail::get_or<int>(doc, "dim", 1);
    const double period = detail::get_or<double>(doc, "period", 1.0);
    if (m < 1 || m > 32) throw SchemaError("m out of range [1, 32]");
    if (dim < 1 || dim > 2) throw SchemaError("dim must be 1 or 2");
    const TorusGrid grid(dim, scenario.run.grid_n, period);

    if (scenario.kind == "control") {
        const json& c = doc.contains("control") ? doc.at("control") : json::object();
        ControlProblem control;
        control.m = m;
        control.dim = dim;
        control.period = period;
        control.horizon = scenario.run.horizon;
        const auto sigmas = detail::require<std::vector<std::string>>(c, "sigma");
        const auto costs = detail::require<std::vector<std::string>>(c, "f");
        const auto terminals = detail::require<std::vector<std::string>>(c, "u0");
        if (static_cast<int>(sigmas.size()) != m || static_cast<int>(costs.size()) != m ||
            static_cast<int>(terminals.size()) != m)
            throw SchemaError("control sigma/f/u0 must each list m expressions");
        for (int i = 0; i < m; ++i) {
            control.sigma.push_back(field_from_expression(sigmas[i], dim));
            control.cost.push_back(field_from_expression(costs[i], dim));
            control.terminal.push_back(field_from_expression(terminals[i], dim));
        }
        control.gamma = detail::matrix_from_json(detail::require<json>(c, "gamma"), m, "gamma");
        try {
            control.validate();
        } catch (const Error& e) {
            throw SchemaError(e.what());
        }

        ControlSetup setup;
        if (c.contains("policy")) {
            const json& pol = c.at("policy");
            const auto kind = detail::require<std::string>(pol, "kind");
            if (kind == "zero") {
                setup.policy = PolicySpec::zero();
            } else if (kind == "toward_point") {
                const auto target = detail::require<std::vector<double>>(pol, "target");
                if (target.empty()) throw SchemaError("toward_point needs a target");
                setup.policy = PolicySpec::toward_point(
                    {target[0], target.size() > 1 ? target[1] : 0.0});
            } else {
                throw SchemaError("unknown policy kind '" + kind + "'");
            }
        }
        const auto x0 = detail::get_or<std::vector<double>>(c, "x0", {0.0});
        setup.x0 = {x0.empty() ? 0.0 : x0[0], x0.size() > 1 ? x0[1] : 0.0};
        setup.mode0 = detail::get_or<int>(c, "mode0", 0);
        if (setup.mode0 < 0 || setup.mode0 >= m) throw SchemaError("mode0 out of range");
        scenario.control = std::move(control);
        scenario.control_setup = setup;
        scenario.problem = scenario.control->induced_model();
        scenario.problem.label = scenario.label;
    } else {
        ModelProblem problem;
        problem.m = m;
        problem.dim = dim;
        problem.period = period;
        problem.label = scenario.label;
        const json& hams = detail::require<json>(doc, "hamiltonians");
        if (!hams.is_array() || static_cast<int>(hams.size()) != m)
            throw SchemaError("hamiltonians must list m entries");
        for (const json& h : hams) {
            HamiltonianSpec spec;
            const auto kind = detail::get_or<std::string>(h, "kind", "eikonal");
            spec.cost = field_from_expression(detail::get_or<std::string>(h, "f", "0"), dim);
            if (kind == "eikonal" || kind == "quadratic") {
                spec.kind = kind == "eikonal" ? HamiltonianKind::Eikonal : HamiltonianKind::Quadratic;
                spec.sigma = field_from_expression(detail::get_or<std::string>(h, "sigma", "1"), dim);
            } else if (kind == "shifted_eikonal") {
                spec.kind = HamiltonianKind::ShiftedEikonal;
                const auto shift = detail::require<std::vector<double>>(h, "shift");
                if (shift.empty() || static_cast<int>(shift.size()) > dim)
                    throw SchemaError("shift must have one entry per axis");
                spec.shift = {shift[0], shift.size() > 1 ? shift[1] : 0.0};
            } else {
                throw SchemaError("unknown hamiltonian kind '" + kind + "'");
            }
            problem.hamiltonians.push_back(std::move(spec));
        }

        const json& coupling = detail::require<json>(doc, "coupling");
        if (coupling.contains("constant")) {
            problem.coupling = CouplingField::constant(
                detail::matrix_from_json(coupling.at("constant"), m, "coupling"));
        } else if (coupling.contains("cells")) {
            // entries given as expressions of the cell coordinates
            const json& entries = coupling.at("cells");
            if (!entries.is_array() || static_cast<int>(entries.size()) != m)
                throw SchemaError("coupling cells must be an m x m expression matrix");
            std::vector<std::vector<Expression>> exprs(m);
            for (int i = 0; i < m; ++i) {
                const auto row = entries.at(i).get<std::vector<std::string>>();
                if (static_cast<int>(row.size()) != m)
                    throw SchemaError("coupling cells row " + std::to_string(i) + " needs m entries");
                for (const auto& text : row) exprs[i].push_back(Expression::parse(text));
            }
            std::map<long, Matrix> cells;
            for (long cell = 0; cell < grid.cell_count(); ++cell) {
                const Point x = grid.coord(cell);
                Matrix D(m, m);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j)
                        D(i, j) = exprs[i][j].eval(x[0], dim == 2 ? x[1] : 0.0);
                cells[cell] = D;
            }
            problem.coupling = CouplingField::per_cell(std::move(cells));
        } else {
            throw SchemaError("coupling needs 'constant' or 'cells'");
        }

        const auto u0 = detail::get_or<std::vector<std::string>>(doc, "u0",
                                                                 std::vector<std::string>(m, "0"));
        if (static_cast<int>(u0.size()) != m) throw SchemaError("u0 must list m expressions");
        for (const auto& text : u0) problem.initial.push_back(field_from_expression(text, dim));
        problem.validate();
        scenario.problem = std::move(problem);
    }

    scenario.audit = assumption_audit(scenario.problem, grid);
    scenario.warnings = scenario.audit.warnings();

    // canonical form: round-trip the parsed content with defaults filled
    json canon;
    canon["schema_version"] = 1;
    canon["label"] = scenario.label;
    canon["kind"] = scenario.kind;
    canon["m"] = m;
    canon["dim"] = dim;
    canon["period"] = period;
    if (scenario.kind == "control") {
        json c = doc.at("control");
        if (!c.contains("policy")) c["policy"] = {{"kind", "zero"}};
        if (!c.contains("x0")) c["x0"] = {0.0};
        if (!c.contains("mode0")) c["mode0"] = 0;
        canon["control"] = c;
    } else {
        json hams = json::array();
        for (const json& h : doc.at("hamiltonians")) {
            json entry;
            entry["kind"] = detail::get_or<std::string>(h, "kind", "eikonal");
            entry["f"] = detail::get_or<std::string>(h, "f", "0");
            if (entry["kind"] == "shifted_eikonal")
                entry["shift"] = h.at("shift");
            else
                entry["sigma"] = detail::get_or<std::string>(h, "sigma", "1");
            hams.push_back(entry);
        }
        canon["hamiltonians"] = hams;
        canon["coupling"] = doc.at("coupling");
        canon["u0"] = detail::get_or<std::vector<std::string>>(doc, "u0",
                                                               std::vector<std::string>(m, "0"));
    }
    canon["run"] = detail::run_to_json(scenario.run);
    scenario.canonical = std::move(canon);
    return scenario;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

inline json scenario_to_json(const Scenario& scenario) { return scenario.canonical; }

inline bool ergodic_applicable_rows(const ModelProblem& problem) {
    for (long cell : problem.coupling.stored_cells()) {
        const Matrix& D = problem.coupling.at(cell);
        if (D.rowwise().sum().lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + D.lpNorm<Eigen::Infinity>()))
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// cost-shift preprocessor: subtract the shared minimum of the costs so the
// shifted problem has F nonempty; the linear-in-time drift is added back to
// reported solutions.

inline Scenario shift_costs_preprocessor(const Scenario& input) {
    const TorusGrid grid(input.problem.dim, input.run.grid_n, input.problem.period);
    if (!ergodic_applicable_rows(input.problem))
        throw PreconditionFailed("cost shift needs zero row sums everywhere");

    const int m = input.problem.m;
    std::vector<double> mins(m, std::numeric_limits<double>::infinity());
    for (int i = 0; i < m; ++i)
        for (long cell = 0; cell < grid.cell_count(); ++cell)
            mins[i] = std::min(mins[i], input.problem.hamiltonians[i].cost(grid.coord(cell)));

    const double fbar = mins[0];
    const double tol = 1e-8 * (1.0 + std::abs(fbar)) + 1e-12;
    for (double v : mins)
        if (std::abs(v - fbar) > tol)
            throw PreconditionFailed("cost shift needs all costs to share one minimum value");
    if (fbar < -tol) throw PreconditionFailed("cost shift needs a nonnegative shared minimum");

    // a common argmin cell must exist
    bool common = false;
    for (long cell = 0; cell < grid.cell_count() && !common; ++cell) {
        bool all = true;
        for (int i = 0; i < m; ++i)
            all = all && input.problem.hamiltonians[i].cost(grid.coord(cell)) <= mins[i] + tol;
        common = all;
    }
    if (!common) throw PreconditionFailed("cost shift needs a common argmin");

    Scenario out = input;
    out.drift_rate = fbar;
    for (int i = 0; i < m; ++i) {
        ScalarField base = input.problem.hamiltonians[i].cost;
        out.problem.hamiltonians[i].cost = [base, fbar](const Point& x) { return base(x) - fbar; };
    }
    return out;
}

}  // namespace hjsys::cli
