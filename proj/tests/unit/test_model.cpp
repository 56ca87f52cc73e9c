#include <catch2/catch_amalgamated.hpp>

#include "hjsys/model.hpp"

using namespace hjsys;

namespace {

const double kTwoPi = 6.283185307179586;

ScalarField one_minus_cos(double period = 1.0) {
    return [period](const Point& x) { return 1.0 - std::cos(kTwoPi * x[0] / period); };
}

Matrix sym2() {
    Matrix D(2, 2);
    D << 1, -1, -1, 1;
    return D;
}

ModelProblem two_well_problem() {
    ModelProblem p;
    p.m = 2;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), one_minus_cos()),
                      HamiltonianSpec::eikonal(constant_field(1.0), one_minus_cos())};
    p.coupling = CouplingField::constant(sym2());
    return p;
}

// shifted-eikonal pair |Du + 2| with constant cost 2 (convecting system)
ModelProblem drift_problem() {
    ModelProblem p;
    p.m = 2;
    p.period = kTwoPi;
    p.hamiltonians = {HamiltonianSpec::shifted_eikonal({2.0, 0.0}, constant_field(2.0)),
                      HamiltonianSpec::shifted_eikonal({2.0, 0.0}, constant_field(2.0))};
    p.coupling = CouplingField::constant(sym2());
    return p;
}

}  // namespace

TEST_CASE("hamiltonian evaluation per kind", "[model]") {
    ModelProblem p;
    p.m = 3;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), constant_field(0.0)),
                      HamiltonianSpec::shifted_eikonal({2.0, 0.0}, constant_field(2.0)),
                      HamiltonianSpec::quadratic(constant_field(2.0), constant_field(1.0))};
    p.coupling = CouplingField::constant(Matrix::Zero(3, 3));

    CHECK(evaluate_hamiltonian(p, 0, {0.3, 0.0}, {2.0, 0.0}) == Catch::Approx(2.0));
    CHECK(evaluate_hamiltonian(p, 1, {0.3, 0.0}, {0.0, 0.0}) == Catch::Approx(0.0).margin(1e-15));
    CHECK(evaluate_hamiltonian(p, 2, {0.3, 0.0}, {1.0, 0.0}) == Catch::Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(evaluate_hamiltonian(p, 3, {0, 0}, {0, 0}), IndexOutOfRange);
    CHECK_THROWS_AS(evaluate_hamiltonian(p, -1, {0, 0}, {0, 0}), IndexOutOfRange);
}

TEST_CASE("assumption audit passes the well-behaved eikonal family", "[model]") {
    const auto p = two_well_problem();
    const TorusGrid grid(1, 64, 1.0);
    const auto audit = assumption_audit(p, grid);
    CHECK(audit.periodicity.pass);
    CHECK(audit.convexity.pass);
    CHECK(audit.coercivity.pass);
    CHECK(audit.zero_at_rest.pass);
    CHECK(audit.nonnegative_costs.pass);
    CHECK(audit.coupling_monotone.pass);
    CHECK(audit.irreducible.pass);
    CHECK(audit.degenerate_rows.pass);
    CHECK(audit.warnings().empty());
}

TEST_CASE("audit flags the shifted-eikonal drift family: F(x,0) != 0", "[model]") {
    const auto p = drift_problem();
    const TorusGrid grid(1, 64, kTwoPi);
    const auto audit = assumption_audit(p, grid);
    CHECK_FALSE(audit.zero_at_rest.pass);  // F(x,0) = |shift| = 2
    CHECK(audit.convexity.pass);
    CHECK(audit.coercivity.pass);
    CHECK(audit.nonnegative_costs.pass);
    CHECK_FALSE(audit.warnings().empty());
}

TEST_CASE("audit flags negative costs with witnesses", "[model]") {
    ModelProblem p;
    p.m = 1;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), constant_field(-1.0))};
    p.coupling = CouplingField::constant(Matrix::Zero(1, 1));
    const auto audit = assumption_audit(p, TorusGrid(1, 16, 1.0));
    CHECK_FALSE(audit.nonnegative_costs.pass);
    CHECK_FALSE(audit.nonnegative_costs.witnesses.empty());
}

TEST_CASE("audit flags aperiodic data", "[model]") {
    ModelProblem p;
    p.m = 1;
    p.hamiltonians = {
        HamiltonianSpec::eikonal(constant_field(1.0), [](const Point& x) { return x[0]; })};
    p.coupling = CouplingField::constant(Matrix::Zero(1, 1));
    const auto audit = assumption_audit(p, TorusGrid(1, 16, 1.0));
    CHECK_FALSE(audit.periodicity.pass);
}

TEST_CASE("audit flags a nonconvex custom hamiltonian", "[model]") {
    ModelProblem p;
    p.m = 1;
    HamiltonianSpec h;
    h.kind = HamiltonianKind::Custom;
    h.cost = constant_field(0.0);
    h.custom = [](const Point&, const Point& q) {
        return std::abs(q[0]) / (1.0 + std::abs(q[0]));  // bounded, concave in |p|
    };
    p.hamiltonians = {h};
    p.coupling = CouplingField::constant(Matrix::Zero(1, 1));
    const auto audit = assumption_audit(p, TorusGrid(1, 16, 1.0));
    CHECK_FALSE(audit.convexity.pass);
    CHECK_FALSE(audit.coercivity.pass);
}

TEST_CASE("zero sets on the two-well scenario", "[model]") {
    const auto p = two_well_problem();
    const TorusGrid grid(1, 64, 1.0);
    const auto masks = compute_sets(p, grid);
    // unique zero of sum f at x = 0, cross-checked by direct scan
    long count = 0;
    for (long cell = 0; cell < grid.cell_count(); ++cell) {
        double total = 0.0;
        for (int i = 0; i < p.m; ++i) total += p.hamiltonians[i].cost(grid.coord(cell));
        const bool expect = total <= masks.eps_set;
        CHECK(static_cast<bool>(masks.F_mask[cell]) == expect);
        count += masks.F_mask[cell];
    }
    CHECK(count == 1);
    CHECK(masks.F_mask[0] == 1);
    CHECK(masks.A_mask[0] == 1);
    CHECK_FALSE(masks.A_empty());
    CHECK(masks.A_cells() == std::vector<long>{0});

    // zero-row-sum coupling: every D_i mask covers the torus
    for (const auto& mask : masks.D_masks)
        for (auto v : mask) CHECK(v == 1);
}

TEST_CASE("F is empty for strictly positive costs", "[model]") {
    ModelProblem p;
    p.m = 2;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), constant_field(1.0)),
                      HamiltonianSpec::eikonal(constant_field(1.0), constant_field(3.0))};
    p.coupling = CouplingField::constant(sym2());
    const auto masks = compute_sets(p, TorusGrid(1, 32, 1.0));
    CHECK(masks.F_empty());
    CHECK(masks.A_empty());
}

TEST_CASE("set masks grow with eps_set", "[model]") {
    const auto p = two_well_problem();
    const TorusGrid grid(1, 64, 1.0);
    const auto tight = compute_sets(p, grid, 1e-10);
    const auto loose = compute_sets(p, grid, 1e-2);
    long tight_count = 0, loose_count = 0;
    for (long cell = 0; cell < grid.cell_count(); ++cell) {
        if (tight.F_mask[cell]) CHECK(loose.F_mask[cell] == 1);
        tight_count += tight.F_mask[cell];
        loose_count += loose.F_mask[cell];
    }
    CHECK(loose_count >= tight_count);
    CHECK(loose_count > 1);

    // every A-cell has each individual cost below eps
    for (long cell = 0; cell < grid.cell_count(); ++cell)
        if (loose.A_mask[cell])
            for (int i = 0; i < p.m; ++i)
                CHECK(p.hamiltonians[i].cost(grid.coord(cell)) <= loose.eps_set);
}

TEST_CASE("built-in kinds satisfy F >= F(x,0) = 0 except the shifted family", "[model]") {
    const auto good = two_well_problem();
    const auto drift = drift_problem();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int s = 0; s < 200; ++s) {
        const Point x{std::abs(u(rng)) / 6.0, 0.0};
        const Point p{u(rng), 0.0};
        for (int i = 0; i < 2; ++i) {
            CHECK(free_part(good, i, x, p) >= 0.0);
            CHECK(free_part(good, i, x, {0.0, 0.0}) == 0.0);
            CHECK(free_part(drift, i, x, p) >= 0.0);
        }
    }
    CHECK(free_part(drift, 0, {0.1, 0.0}, {0.0, 0.0}) == Catch::Approx(2.0));
}

TEST_CASE("problem validation catches structural mismatches", "[model]") {
    ModelProblem p;
    p.m = 2;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), constant_field(0.0))};
    p.coupling = CouplingField::constant(sym2());
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("audit flags non-positive speeds", "[model]") {
    ModelProblem p;
    p.m = 1;
    p.hamiltonians = {HamiltonianSpec::eikonal(
        [](const Point& x) { return std::cos(kTwoPi * x[0]); },  // negative on half the torus
        constant_field(0.0))};
    p.coupling = CouplingField::constant(Matrix::Zero(1, 1));
    const auto audit = assumption_audit(p, TorusGrid(1, 16, 1.0));
    CHECK_FALSE(audit.coercivity.pass);
}
