#pragma once

// Problem data for weakly coupled systems on the torus: per-equation
// Hamiltonians H_i(x,p) = F_i(x,p) - f_i(x), the coupling field, initial
// data, the zero sets F / D_i and their intersection A, and a sampled audit
// of the structural assumptions (periodicity, convexity, coercivity,
// F_i(x,0) = 0, f_i >= 0, coupling signs, irreducibility, row sums).

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hjsys/coupling.hpp"
#include "hjsys/grid.hpp"

namespace hjsys {

using ScalarField = std::function<double(const Point&)>;

inline ScalarField constant_field(double v) {
    return [v](const Point&) { return v; };
}

enum class HamiltonianKind { Eikonal, ShiftedEikonal, Quadratic, Custom };

inline const char* to_string(HamiltonianKind k) {
    switch (k) {
        case HamiltonianKind::Eikonal: return "eikonal";
        case HamiltonianKind::ShiftedEikonal: return "shifted_eikonal";
        case HamiltonianKind::Quadratic: return "quadratic";
        case HamiltonianKind::Custom: return "custom";
    }
    return "?";
}

struct HamiltonianSpec {
    HamiltonianKind kind = HamiltonianKind::Eikonal;
    ScalarField sigma = constant_field(1.0);  // speed, Eikonal/Quadratic
    Point shift{0.0, 0.0};                    // q_i, ShiftedEikonal
    ScalarField cost = constant_field(0.0);   // f_i
    std::function<double(const Point&, const Point&)> custom;  // F_i, Custom kind

    static HamiltonianSpec eikonal(ScalarField sigma, ScalarField cost) {
        HamiltonianSpec h;
        h.kind = HamiltonianKind::Eikonal;
        h.sigma = std::move(sigma);
        h.cost = std::move(cost);
        return h;
    }
    static HamiltonianSpec shifted_eikonal(Point shift, ScalarField cost) {
        HamiltonianSpec h;
        h.kind = HamiltonianKind::ShiftedEikonal;
        h.shift = shift;
        h.cost = std::move(cost);
        return h;
    }
    static HamiltonianSpec quadratic(ScalarField sigma, ScalarField cost) {
        HamiltonianSpec h;
        h.kind = HamiltonianKind::Quadratic;
        h.sigma = std::move(sigma);
        h.cost = std::move(cost);
        return h;
    }
};

inline double norm2(const Point& p, int dim) {
    return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

struct ModelProblem {
    int m = 1;
    int dim = 1;
    double period = 1.0;
    std::vector<HamiltonianSpec> hamiltonians;
    CouplingField coupling = CouplingField::constant(Matrix::Zero(1, 1));
    std::vector<ScalarField> initial;
    std::string label;

    void validate() const {
        if (m < 1) throw Error("model: m must be positive");
        if (static_cast<int>(hamiltonians.size()) != m)
            throw Error("model: hamiltonian count != m");
        if (coupling.m() != m) throw Error("model: coupling dimension != m");
        if (!initial.empty() && static_cast<int>(initial.size()) != m)
            throw Error("model: initial data count != m");
    }
};

// F_i(x, p), the coercive part.
inline double free_part(const ModelProblem& problem, int i, const Point& x, const Point& p) {
    const HamiltonianSpec& h = problem.hamiltonians[i];
    switch (h.kind) {
        case HamiltonianKind::Eikonal: return h.sigma(x) * norm2(p, problem.dim);
        case HamiltonianKind::ShiftedEikonal: {
            Point q{p[0] + h.shift[0], p[1] + h.shift[1]};
            return norm2(q, problem.dim);
        }
        case HamiltonianKind::Quadratic: {
            const double n = norm2(p, problem.dim);
            return 0.5 * h.sigma(x) * n * n;
        }
        case HamiltonianKind::Custom: return h.custom(x, p);
    }
    return 0.0;
}

inline double evaluate_hamiltonian(const ModelProblem& problem, int i, const Point& x,
                                   const Point& p) {
    if (i < 0 || i >= problem.m)
        throw IndexOutOfRange("evaluate_hamiltonian: equation index " + std::to_string(i));
    return free_part(problem, i, x, p) - problem.hamiltonians[i].cost(x);
}

// ---------------------------------------------------------------------------
// Zero sets. F collects cells where sum_i f_i vanishes, D_i where the i-th
// coupling row sum vanishes, A their intersection.

struct SetMasks {
    std::vector<std::uint8_t> F_mask;
    std::vector<std::vector<std::uint8_t>> D_masks;
    std::vector<std::uint8_t> A_mask;
    double eps_set = 0.0;

    bool F_empty() const { return none(F_mask); }
    bool A_empty() const { return none(A_mask); }
    std::vector<long> A_cells() const {
        std::vector<long> out;
        for (long c = 0; c < static_cast<long>(A_mask.size()); ++c)
            if (A_mask[c]) out.push_back(c);
        return out;
    }

  private:
    static bool none(const std::vector<std::uint8_t>& mask) {
        for (auto v : mask)
            if (v) return false;
        return true;
    }
};

inline double default_eps_set(const ModelProblem& problem, const TorusGrid& grid) {
    double sup_f = 0.0;
    for (long cell = 0; cell < grid.cell_count(); ++cell) {
        const Point x = grid.coord(cell);
        for (int i = 0; i < problem.m; ++i)
            sup_f = std::max(sup_f, std::abs(problem.hamiltonians[i].cost(x)));
    }
    return 1e-8 * sup_f + 1e-12;
}

inline SetMasks compute_sets(const ModelProblem& problem, const TorusGrid& grid, double eps_set) {
    SetMasks masks;
    masks.eps_set = eps_set;
    const long cells = grid.cell_count();
    masks.F_mask.assign(cells, 0);
    masks.A_mask.assign(cells, 0);
    masks.D_masks.assign(problem.m, std::vector<std::uint8_t>(cells, 0));
    for (long cell = 0; cell < cells; ++cell) {
        const Point x = grid.coord(cell);
        double total = 0.0;
        for (int i = 0; i < problem.m; ++i) total += problem.hamiltonians[i].cost(x);
        masks.F_mask[cell] = total <= eps_set;

        const Matrix& D = problem.coupling.at(cell);
        bool all_rows = true;
        for (int i = 0; i < problem.m; ++i) {
            const bool zero_row = D.row(i).sum() <= eps_set;
            masks.D_masks[i][cell] = zero_row;
            all_rows = all_rows && zero_row;
        }
        masks.A_mask[cell] = masks.F_mask[cell] && all_rows;
    }
    return masks;
}

inline SetMasks compute_sets(const ModelProblem& problem, const TorusGrid& grid) {
    return compute_sets(problem, grid, default_eps_set(problem, grid));
}

// ---------------------------------------------------------------------------
// Assumption audit.

struct AuditVerdict {
    bool pass = true;
    std::vector<std::string> witnesses;

    void fail(const std::string& w, std::size_t cap = 8) {
        pass = false;
        if (witnesses.size() < cap) witnesses.push_back(w);
    }
};

struct AssumptionAudit {
    AuditVerdict periodicity;        // data match across the period
    AuditVerdict convexity;          // midpoint inequality in p
    AuditVerdict coercivity;         // growth between |p| = 10 and 100
    AuditVerdict zero_at_rest;       // F_i(x, 0) = 0 and F_i >= 0
    AuditVerdict nonnegative_costs;  // f_i >= 0
    AuditVerdict coupling_monotone;  // sign structure of D
    AuditVerdict irreducible;        // at every stored cell
    AuditVerdict degenerate_rows;    // all row sums vanish (informational)

    bool all_structural_pass() const {
        return periodicity.pass && convexity.pass && coercivity.pass && zero_at_rest.pass &&
               nonnegative_costs.pass && coupling_monotone.pass;
    }

    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        const auto collect = [&](const char* name, const AuditVerdict& v) {
            if (v.pass) return;
            std::string line = std::string(name) + " fails";
            if (!v.witnesses.empty()) line += ": " + v.witnesses.front();
            out.push_back(line);
        };
        collect("periodicity", periodicity);
        collect("convexity", convexity);
        collect("coercivity", coercivity);
        collect("F(x,0)=0", zero_at_rest);
        collect("f>=0", nonnegative_costs);
        collect("coupling monotonicity", coupling_monotone);
        collect("irreducibility", irreducible);
        return out;
    }
};

inline AssumptionAudit assumption_audit(const ModelProblem& problem, const TorusGrid& grid,
                                        int n_prob = 256, double tol = 1e-9,
                                        std::uint64_t seed = 0x5eed) {
    AssumptionAudit audit;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, problem.period);
    std::uniform_real_distribution<double> grad(-5.0, 5.0);

    const auto point = [&]() {
        return Point{coord(rng), problem.dim == 2 ? coord(rng) : 0.0};
    };

    // periodicity: sampled data must match across one period on each axis
    for (int s = 0; s < std::min(n_prob, 64); ++s) {
        Point x = point();
        for (int axis = 0; axis < problem.dim; ++axis) {
            Point shifted = x;
            shifted[axis] += problem.period;
            for (int i = 0; i < problem.m; ++i) {
                const auto& h = problem.hamiltonians[i];
                const double df = std::abs(h.cost(x) - h.cost(shifted));
                if (df > 1e-7 * (1.0 + std::abs(h.cost(x)))) {
                    std::ostringstream w;
                    w << "f_" << i << "(" << x[0] << ") != f_" << i << "(+period), gap " << df;
                    audit.periodicity.fail(w.str());
                }
                const Point p{grad(rng), problem.dim == 2 ? grad(rng) : 0.0};
                const double dF = std::abs(free_part(problem, i, x, p) -
                                           free_part(problem, i, shifted, p));
                if (dF > 1e-7 * (1.0 + std::abs(free_part(problem, i, x, p))))
                    audit.periodicity.fail("F_" + std::to_string(i) + " not periodic");
            }
        }
    }

    // convexity in p: midpoint inequality on random triples
    for (int s = 0; s < n_prob; ++s) {
        const Point x = point();
        const Point p{grad(rng), problem.dim == 2 ? grad(rng) : 0.0};
        const Point q{grad(rng), problem.dim == 2 ? grad(rng) : 0.0};
        const Point mid{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])};
        for (int i = 0; i < problem.m; ++i) {
            const double lhs = free_part(problem, i, x, mid);
            const double rhs = 0.5 * (free_part(problem, i, x, p) + free_part(problem, i, x, q));
            if (lhs > rhs + 1e-9 + tol) {
                std::ostringstream w;
                w << "F_" << i << " midpoint inequality violated by " << lhs - rhs;
                audit.convexity.fail(w.str());
            }
        }
    }

    // coercivity: growth between |p| = 10 and |p| = 100 along sampled directions
    for (int s = 0; s < std::min(n_prob, 64); ++s) {
        const Point x = point();
        const double angle = coord(rng) / problem.period * 6.283185307179586;
        const Point dir{problem.dim == 2 ? std::cos(angle) : (angle < 3.14159265 ? 1.0 : -1.0),
                        problem.dim == 2 ? std::sin(angle) : 0.0};
        for (int i = 0; i < problem.m; ++i) {
            const Point p10{10 * dir[0], 10 * dir[1]};
            const Point p100{100 * dir[0], 100 * dir[1]};
            if (free_part(problem, i, x, p100) < free_part(problem, i, x, p10) + 1.0)
                audit.coercivity.fail("F_" + std::to_string(i) + " does not grow in |p|");
        }
    }

    // F_i(x,0) = 0, F_i >= 0, f_i >= 0 and sigma > 0 on every grid cell
    for (long cell = 0; cell < grid.cell_count(); ++cell) {
        const Point x = grid.coord(cell);
        for (int i = 0; i < problem.m; ++i) {
            const auto kind = problem.hamiltonians[i].kind;
            if ((kind == HamiltonianKind::Eikonal || kind == HamiltonianKind::Quadratic) &&
                !(problem.hamiltonians[i].sigma(x) > 0.0)) {
                std::ostringstream w;
                w << "sigma_" << i << " = " << problem.hamiltonians[i].sigma(x) << " at cell "
                  << cell;
                audit.coercivity.fail(w.str());
            }
            const double at_zero = free_part(problem, i, x, {0.0, 0.0});
            if (std::abs(at_zero) > tol + 1e-12) {
                std::ostringstream w;
                w << "F_" << i << "(x,0) = " << at_zero << " at cell " << cell;
                audit.zero_at_rest.fail(w.str());
            }
            const double f = problem.hamiltonians[i].cost(x);
            if (f < -tol) {
                std::ostringstream w;
                w << "f_" << i << " = " << f << " at cell " << cell;
                audit.nonnegative_costs.fail(w.str());
            }
        }
    }
    for (int s = 0; s < n_prob; ++s) {
        const Point x = point();
        const Point p{grad(rng), problem.dim == 2 ? grad(rng) : 0.0};
        for (int i = 0; i < problem.m; ++i)
            if (free_part(problem, i, x, p) < -tol)
                audit.zero_at_rest.fail("F_" + std::to_string(i) + " negative");
    }

    // coupling checks
    const auto mono = check_monotone_coupling(problem.coupling, tol);
    if (!mono.holds)
        for (const auto& v : mono.violations) {
            std::ostringstream w;
            w << to_string(v.kind) << " at cell " << v.cell << " entry (" << v.i << "," << v.j
              << ") value " << v.value;
            audit.coupling_monotone.fail(w.str());
        }
    for (long cell : problem.coupling.stored_cells()) {
        const Matrix& D = problem.coupling.at(cell);
        if (!is_irreducible(D).irreducible)
            audit.irreducible.fail("reducible coupling at cell " + std::to_string(cell));
        if (D.rowwise().sum().lpNorm<Eigen::Infinity>() >
            1e-9 * (1.0 + D.lpNorm<Eigen::Infinity>()))
            audit.degenerate_rows.pass = false;  // not a failure, just not degenerate
    }

    return audit;
}

}  // namespace hjsys
