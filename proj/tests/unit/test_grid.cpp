#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hjsys/evolutive.hpp"
#include "hjsys/scheme.hpp"

using namespace hjsys;

namespace {

const double kTwoPi = 6.283185307179586;

ModelProblem plain_eikonal(int m = 1, double period = 1.0) {
    ModelProblem p;
    p.m = m;
    p.period = period;
    for (int i = 0; i < m; ++i)
        p.hamiltonians.push_back(HamiltonianSpec::eikonal(constant_field(1.0), constant_field(0.0)));
    p.coupling = CouplingField::constant(Matrix::Zero(m, m));
    return p;
}

}  // namespace

TEST_CASE("grid geometry: wrap, neighbors, coordinates", "[grid]") {
    const TorusGrid g(1, 16, 2.0);
    CHECK(g.dx() == Catch::Approx(0.125));
    CHECK(g.cell_count() == 16);
    CHECK(g.wrap(-1) == 15);
    CHECK(g.neighbor(0, 0, -1) == 15);
    CHECK(g.neighbor(15, 0, +1) == 0);
    CHECK(g.coord(4)[0] == Catch::Approx(0.5));
    CHECK(g.nearest_cell({1.99, 0.0}) == 0);  // wraps around

    const TorusGrid g2(2, 8, 1.0);
    CHECK(g2.cell_count() == 64);
    CHECK(g2.neighbor(g2.index(0, 0), 1, -1) == g2.index(0, 7));
    CHECK(g2.neighbor(g2.index(7, 3), 0, +1) == g2.index(0, 3));
    const Point c = g2.coord(g2.index(2, 5));
    CHECK(c[0] == Catch::Approx(0.25));
    CHECK(c[1] == Catch::Approx(0.625));

    CHECK_THROWS_AS(TorusGrid(1, 4, 1.0), DegenerateGrid);
    CHECK_THROWS_AS(TorusGrid(3, 16, 1.0), DegenerateGrid);
    CHECK_THROWS_AS(TorusGrid(1, 16, 0.0), DegenerateGrid);
}

TEST_CASE("one-sided differences with periodic wraparound", "[grid]") {
    const TorusGrid g(1, 512, 1.0);
    std::vector<double> constant(g.cell_count(), 3.7);
    const auto flat = gradient_pair(g, constant, 100, 0);
    CHECK(flat.minus == 0.0);
    CHECK(flat.plus == 0.0);

    std::vector<double> wave(g.cell_count());
    for (long c = 0; c < g.cell_count(); ++c) wave[c] = std::sin(kTwoPi * g.coord(c)[0]);
    const auto at0 = gradient_pair(g, wave, 0, 0);
    CHECK(std::abs(at0.minus - kTwoPi) <= 10.0 * g.dx());
    CHECK(std::abs(at0.plus - kTwoPi) <= 10.0 * g.dx());

    // sawtooth u(x) = x*dx: the two one-sided slopes at the seam differ by
    // exactly n*dx (periodic identification of 0 and period)
    const TorusGrid gs(1, 64, 1.0);
    std::vector<double> saw(gs.cell_count());
    for (long c = 0; c < gs.cell_count(); ++c) saw[c] = gs.coord(c)[0] * gs.dx();
    const auto seam = gradient_pair(gs, saw, 0, 0);
    CHECK(seam.plus - seam.minus == Catch::Approx(64 * gs.dx()).epsilon(0).margin(0));
}

TEST_CASE("numerical flux: consistency and the frozen dissipation example", "[grid]") {
    const auto p = plain_eikonal();
    CHECK(lf_hamiltonian(p, 0, {0.3, 0}, {0.7, 0}, {0.7, 0}, 1.0) == Catch::Approx(0.7));
    // p- = -1, p+ = 1, theta = 1: H(0) - 1 * (1 - (-1))/2 = -1
    CHECK(lf_hamiltonian(p, 0, {0.3, 0}, {-1.0, 0}, {1.0, 0}, 1.0) == Catch::Approx(-1.0));
}

TEST_CASE("flux is monotone in both one-sided slopes", "[grid]") {
    const auto p = plain_eikonal();
    const TorusGrid g(1, 64, 1.0);
    const double theta = theta_bound(p, 0, g, 5.0);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> slope(-4.0, 4.0);
    const double delta = 1e-3;
    for (int trial = 0; trial < 500; ++trial) {
        const Point pm{slope(rng), 0.0};
        const Point pp{slope(rng), 0.0};
        const double base = lf_hamiltonian(p, 0, {0.2, 0}, pm, pp, theta);
        const double up = lf_hamiltonian(p, 0, {0.2, 0}, pm, {pp[0] + delta, 0}, theta);
        const double dn = lf_hamiltonian(p, 0, {0.2, 0}, {pm[0] - delta, 0}, pp, theta);
        CHECK(up <= base + 1e-12);  // raising p+ cannot raise the flux
        CHECK(dn <= base + 1e-12);  // lowering p- cannot raise the flux
    }
}

TEST_CASE("cfl bound matches the frozen formula", "[grid]") {
    ModelProblem p = plain_eikonal(2);
    Matrix D(2, 2);
    D << 2, -2, -1, 1;
    p.coupling = CouplingField::constant(D);
    const TorusGrid g(1, 100, 1.0);  // dx = 0.01
    CHECK(cfl_max_dt(p, g, {1.0, 1.0}, 0.9) == Catch::Approx(0.9 / 102.0));

    // no coupling: scalar cfl safety * dx / theta
    const auto scalar = plain_eikonal();
    CHECK(cfl_max_dt(scalar, g, {1.0}, 0.9) == Catch::Approx(0.9 * 0.01));

    // doubling n halves dt when the coupling term is negligible
    const TorusGrid g2(1, 200, 1.0);
    CHECK(cfl_max_dt(scalar, g2, {1.0}, 0.9) == Catch::Approx(0.45 * 0.01));

    CHECK_THROWS_AS(cfl_max_dt(scalar, g, {0.0}, 0.9), DegenerateGrid);
}

TEST_CASE("one explicit step is monotone in every stencil value", "[grid]") {
    ModelProblem p = plain_eikonal(2);
    Matrix D(2, 2);
    D << 1, -1, -2, 2;
    p.coupling = CouplingField::constant(D);
    const TorusGrid g(1, 16, 1.0);
    const DiscretizedProblem dp(p, g);

    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    VectorGridField u(g, 2);
    for (auto& c : u.comp)
        for (auto& v : c) v = val(rng);

    SchemeParams params;
    params.theta = {1.0, 1.0};
    params.dt = cfl_max_dt(p, g, params.theta, 0.95);

    const EvolutionState base{u, 0.0, 0};
    const auto from = step(dp, base, params);
    const double bump = 1e-3;
    for (int j = 0; j < 2; ++j)
        for (long cell = 0; cell < g.cell_count(); ++cell) {
            EvolutionState perturbed = base;
            perturbed.field.comp[j][cell] += bump;
            const auto next = step(dp, perturbed, params);
            for (int i = 0; i < 2; ++i)
                for (long c = 0; c < g.cell_count(); ++c)
                    CHECK(next.field.comp[i][c] >= from.field.comp[i][c] - 1e-12);
        }
}

TEST_CASE("scheme commutes with grid shifts for shift-invariant data", "[grid]") {
    const auto p = plain_eikonal();
    const TorusGrid g(1, 32, 1.0);
    const DiscretizedProblem dp(p, g);
    std::mt19937 rng(321);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    VectorGridField u(g, 1);
    for (auto& v : u.comp[0]) v = val(rng);

    SchemeParams params;
    params.theta = {1.0};
    params.dt = cfl_max_dt(p, g, params.theta, 0.9);

    const int k = 7;
    VectorGridField shifted(g, 1);
    for (long c = 0; c < g.cell_count(); ++c) shifted.comp[0][g.wrap(c + k)] = u.comp[0][c];

    const auto a = step(dp, {u, 0.0, 0}, params);
    const auto b = step(dp, {shifted, 0.0, 0}, params);
    for (long c = 0; c < g.cell_count(); ++c)
        CHECK(b.field.comp[0][g.wrap(c + k)] == a.field.comp[0][c]);
}

TEST_CASE("theta estimation covers the observed gradient range", "[grid]") {
    ModelProblem p;
    p.m = 1;
    p.hamiltonians = {HamiltonianSpec::quadratic(constant_field(1.0), constant_field(0.0))};
    p.coupling = CouplingField::constant(Matrix::Zero(1, 1));
    const TorusGrid g(1, 64, 1.0);
    VectorGridField u(g, 1);
    for (long c = 0; c < g.cell_count(); ++c) u.comp[0][c] = std::sin(kTwoPi * g.coord(c)[0]);
    const auto thetas = estimate_thetas(p, g, u);
    // |dH/dp| = |p| <= 2 pi on the field's gradient range; the estimate must
    // dominate it with its safety margin
    CHECK(thetas[0] >= kTwoPi);
    CHECK(thetas[0] <= 3.0 * kTwoPi);
}

TEST_CASE("safety factor outside (0, 1] is rejected", "[grid]") {
    const auto p = plain_eikonal();
    const TorusGrid g(1, 64, 1.0);
    CHECK_THROWS_AS(cfl_max_dt(p, g, {1.0}, 0.0), DegenerateGrid);
    CHECK_THROWS_AS(cfl_max_dt(p, g, {1.0}, 1.5), DegenerateGrid);
    CHECK(cfl_max_dt(p, g, {1.0}, 1.0) == Catch::Approx(g.dx()));
}
