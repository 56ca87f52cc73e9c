#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hjsys/ergodic.hpp"
#include "hjsys/evolutive.hpp"
#include "oracles.hpp"

using namespace hjsys;

namespace {

const double kTwoPi = 6.283185307179586;

ScalarField one_minus_cos() {
    return [](const Point& x) { return 1.0 - std::cos(kTwoPi * x[0]); };
}

Matrix sym2() {
    Matrix D(2, 2);
    D << 1, -1, -1, 1;
    return D;
}

ModelProblem scalar_well(int = 0) {
    ModelProblem p;
    p.m = 1;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), one_minus_cos())};
    p.coupling = CouplingField::constant(Matrix::Zero(1, 1));
    return p;
}

// constant costs a, b with symmetric coupling: solutions grow linearly
ModelProblem constant_cost_pair(double a, double b) {
    ModelProblem p;
    p.m = 2;
    p.hamiltonians = {HamiltonianSpec::eikonal(constant_field(1.0), constant_field(a)),
                      HamiltonianSpec::eikonal(constant_field(1.0), constant_field(b))};
    p.coupling = CouplingField::constant(sym2());
    return p;
}

// drifting pair |Du_i + 2| - 2 on the 2 pi torus; exact solution sin(x - t)
ModelProblem drift_pair() {
    ModelProblem p;
    p.m = 2;
    p.period = kTwoPi;
    p.hamiltonians = {HamiltonianSpec::shifted_eikonal({2.0, 0.0}, constant_field(2.0)),
                      HamiltonianSpec::shifted_eikonal({2.0, 0.0}, constant_field(2.0))};
    p.coupling = CouplingField::constant(sym2());
    return p;
}

SchemeParams params_for(const ModelProblem& p, const TorusGrid& g, const VectorGridField& u0,
                        double safety = 0.9) {
    return make_scheme_params(p, g, u0, safety);
}

}  // namespace

TEST_CASE("constants are fixed points when costs vanish and rows sum to zero", "[evolutive]") {
    ModelProblem p = constant_cost_pair(0.0, 0.0);
    const TorusGrid g(1, 32, 1.0);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 2, 4.2);
    const auto params = params_for(p, g, u0);
    EvolutionState s{u0, 0.0, 0};
    for (int k = 0; k < 50; ++k) s = step(dp, s, params);
    for (int i = 0; i < 2; ++i)
        for (long c = 0; c < g.cell_count(); ++c) CHECK(s.field.comp[i][c] == 4.2);
}

TEST_CASE("one step of the drifting pair tracks sin(x - t)", "[evolutive]") {
    const ModelProblem p = drift_pair();
    const TorusGrid g(1, 1024, kTwoPi);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 2);
    for (int i = 0; i < 2; ++i)
        for (long c = 0; c < g.cell_count(); ++c) u0.comp[i][c] = std::sin(g.coord(c)[0]);
    const auto params = params_for(p, g, u0);
    const auto next = step(dp, {u0, 0.0, 0}, params);
    double err = 0.0;
    for (long c = 0; c < g.cell_count(); ++c)
        err = std::max(err, std::abs(next.field.comp[0][c] - std::sin(g.coord(c)[0] - params.dt)));
    CHECK(err <= 2.0 * g.dx());
}

TEST_CASE("ordered initial data stay ordered step by step", "[evolutive]") {
    ModelProblem p = constant_cost_pair(0.4, 0.7);
    const TorusGrid g(1, 64, 1.0);
    const DiscretizedProblem dp(p, g);
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::uniform_real_distribution<double> gap(0.0, 1.0);

    VectorGridField u0(g, 2), v0(g, 2);
    for (int i = 0; i < 2; ++i)
        for (long c = 0; c < g.cell_count(); ++c) {
            u0.comp[i][c] = val(rng);
            v0.comp[i][c] = u0.comp[i][c] + gap(rng);
        }
    const auto params = params_for(p, g, u0);
    EvolutionState su{u0, 0.0, 0}, sv{v0, 0.0, 0};
    for (int k = 0; k < 200; ++k) {
        su = step(dp, su, params);
        sv = step(dp, sv, params);
        for (int i = 0; i < 2; ++i)
            for (long c = 0; c < g.cell_count(); ++c)
                REQUIRE(su.field.comp[i][c] <= sv.field.comp[i][c] + 1e-12);
    }
}

TEST_CASE("sup of differences is non-expansive in time", "[evolutive]") {
    ModelProblem p = constant_cost_pair(0.4, 0.7);
    const TorusGrid g(1, 64, 1.0);
    const DiscretizedProblem dp(p, g);
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    VectorGridField u0(g, 2), v0(g, 2);
    for (int i = 0; i < 2; ++i)
        for (long c = 0; c < g.cell_count(); ++c) {
            u0.comp[i][c] = val(rng);
            v0.comp[i][c] = val(rng);
        }
    const auto params = params_for(p, g, u0);
    EvolutionState su{u0, 0.0, 0}, sv{v0, 0.0, 0};
    const auto max_gap = [&] {
        double gap = -1e300;
        for (int i = 0; i < 2; ++i)
            for (long c = 0; c < g.cell_count(); ++c)
                gap = std::max(gap, su.field.comp[i][c] - sv.field.comp[i][c]);
        return gap;
    };
    double previous = max_gap();
    for (int k = 0; k < 300; ++k) {
        su = step(dp, su, params);
        sv = step(dp, sv, params);
        const double now = max_gap();
        REQUIRE(now <= previous + 1e-12);
        previous = now;
    }
}

TEST_CASE("scalar well relaxes to the branch-integral profile", "[evolutive]") {
    const ModelProblem p = scalar_well();
    const TorusGrid g(1, 256, 1.0);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 1, 0.0);
    const auto params = params_for(p, g, u0);
    const auto log = solve_until(dp, u0, 12.0, params, {});

    const auto f = [](double x) { return 1.0 - std::cos(kTwoPi * x); };
    double err = 0.0;
    for (long c = 0; c < g.cell_count(); ++c) {
        const double x = g.coord(c)[0];
        const double quadrature = oracle::scalar_stationary_profile(f, x);
        const double closed_form =
            std::min(x - std::sin(kTwoPi * x) / kTwoPi, 1.0 - x + std::sin(kTwoPi * x) / kTwoPi);
        REQUIRE(std::abs(quadrature - closed_form) < 1e-10);
        err = std::max(err, std::abs(log.final_field.comp[0][c] - quadrature));
    }
    CHECK(err <= 5e-2);
}

TEST_CASE("constant-cost pair: u + c t stays bounded and the gap converges", "[evolutive]") {
    const double a = 1.0, b = 3.0;
    ModelProblem p = constant_cost_pair(a, b);
    const TorusGrid g(1, 32, 1.0);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 2, 0.0);
    const auto params = params_for(p, g, u0);

    // exact relaxation of the constant system: sum grows at rate a+b,
    // difference approaches (a-b)/2 at rate 2
    const auto log = solve_until(dp, u0, 10.0, params, {});
    const double c1 = -(a + b) / 2.0;
    for (const auto& s : log.samples) {
        CHECK(std::abs(s.sup[0] + c1 * s.t) <= 1.0);
        CHECK(std::abs(s.sup[1] + c1 * s.t) <= 1.5);
    }
    const double gap = log.final_field.comp[0][0] - log.final_field.comp[1][0];
    CHECK(gap == Catch::Approx((a - b) / 2.0).margin(1e-6));
}

TEST_CASE("residuals: exact stationary pair and decay along a convergent run", "[evolutive]") {
    const double a = 1.0, b = 3.0;
    ModelProblem p = constant_cost_pair(a, b);
    const TorusGrid g(1, 32, 1.0);
    const DiscretizedProblem dp(p, g);

    // constants with v1 - v2 = (a-b)/2 solve the system with constant c
    VectorGridField v(g, 2);
    for (long c = 0; c < g.cell_count(); ++c) {
        v.comp[0][c] = 0.25 - 0.5;  // k - 1/2 with k = 1/4
        v.comp[1][c] = 0.25 + 0.5;
    }
    const std::vector<double> cvec{-(a + b) / 2.0, -(a + b) / 2.0};
    const auto res = stationary_residual(dp, v, cvec, {1.0, 1.0});
    CHECK(res[0] <= 1e-12);
    CHECK(res[1] <= 1e-12);

    // wrong constant: residual jumps to ~1
    const auto bad = stationary_residual(dp, v, {cvec[0] + 1.0, cvec[1] + 1.0}, {1.0, 1.0});
    CHECK(bad[0] >= 1.0 - 1e-9);

    // random field has positive residual
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    VectorGridField noise(g, 2);
    for (auto& comp : noise.comp)
        for (auto& x : comp) x = val(rng);
    CHECK(residual(dp, noise, {1.0, 1.0})[0] > 0.0);

    // residual decreases along the convergent scalar run
    const ModelProblem ps = scalar_well();
    const TorusGrid gs(1, 128, 1.0);
    const DiscretizedProblem dps(ps, gs);
    VectorGridField u0(gs, 1, 0.0);
    const auto params = params_for(ps, gs, u0);
    const auto log = solve_until(dps, u0, 8.0, params, {});
    const double early = log.samples[1].residual[0];  // t = 0.25, mid-transient
    const double late = log.samples.back().residual[0];
    CHECK(early > 0.5);
    CHECK(late <= 0.01);
    CHECK(late <= early);
}

TEST_CASE("uniform bound via a stationary solution", "[evolutive]") {
    const ModelProblem p = scalar_well();
    const TorusGrid g(1, 128, 1.0);
    const DiscretizedProblem dp(p, g);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    VectorGridField u0(g, 1);
    const double a1 = amp(rng), a2 = amp(rng);
    for (long c = 0; c < g.cell_count(); ++c) {
        const double x = g.coord(c)[0];
        u0.comp[0][c] = a1 * std::sin(kTwoPi * x) + a2 * std::cos(2 * kTwoPi * x);
    }
    const auto params = params_for(p, g, u0);
    const auto log = solve_until(dp, u0, 20.0, params, {});
    // the run itself supplies the stationary profile for the bound
    const double v_sup = log.final_field.sup_abs();
    const double bound = u0.sup_abs() + 2.0 * v_sup + 1e-6;
    for (const auto& s : log.samples) {
        CHECK(std::abs(s.sup[0]) <= bound);
        CHECK(std::abs(s.inf[0]) <= bound);
    }
    // discrete Lipschitz constants stay uniformly bounded
    double lip0 = log.samples.front().lipschitz[0];
    for (const auto& s : log.samples) CHECK(s.lipschitz[0] <= std::max(2.0 * lip0, 4.0));
}

TEST_CASE("divergence guard fires instead of overflowing", "[evolutive]") {
    // costs violating f >= 0 drive the field up linearly; a tiny divergence
    // factor makes the guard observable quickly
    ModelProblem p = constant_cost_pair(-50.0, -50.0);
    const TorusGrid g(1, 16, 1.0);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 2, 0.0);
    auto params = params_for(p, g, u0);
    SolveOptions options;
    options.divergence_factor = 1.0;
    options.sample_every = 0.05;
    CHECK_THROWS_AS(solve_until(dp, u0, 50.0, params, options), NonFiniteValue);
}

TEST_CASE("cfl violations are rejected", "[evolutive]") {
    const ModelProblem p = scalar_well();
    const TorusGrid g(1, 64, 1.0);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 1, 0.0);
    SchemeParams params;
    params.theta = {1.0};
    params.dt = 10.0 * g.dx();  // far beyond the bound
    CHECK_THROWS_AS(step(dp, {u0, 0.0, 0}, params), CflViolated);
}

TEST_CASE("tracked cells and snapshot window are recorded", "[evolutive]") {
    const ModelProblem p = scalar_well();
    const TorusGrid g(1, 64, 1.0);
    const DiscretizedProblem dp(p, g);
    VectorGridField u0(g, 1, 0.0);
    const auto params = params_for(p, g, u0);
    SolveOptions options;
    options.sample_every = 0.5;
    options.tracked_cells = {0, 32};
    options.snapshot_window = 2.0;
    int observed = 0;
    options.observer = [&](const EvolutionState&) { ++observed; };
    const auto log = solve_until(dp, u0, 6.0, params, options);

    REQUIRE(log.samples.size() == 13);  // t = 0, 0.5, ..., 6
    CHECK(log.samples.back().t == Catch::Approx(6.0));
    CHECK(observed == 13);
    REQUIRE(log.samples[3].tracked.size() == 2);
    CHECK(log.samples[3].t == Catch::Approx(1.5));
    // the well bottom stays near zero (exact up to O(dx) scheme dissipation)
    CHECK(log.samples[3].tracked[0][0] >= 0.0);
    CHECK(log.samples[3].tracked[0][0] <= 5.0 * g.dx());
    CHECK_FALSE(log.window.empty());
    CHECK(log.window.front().first >= 6.0 - 2.0 - 1e-9);
    CHECK(log.window.back().first == Catch::Approx(6.0));
}

TEST_CASE("two-dimensional runs: constants fixed, order preserved, residual decays",
          "[evolutive]") {
    ModelProblem p;
    p.m = 2;
    p.dim = 2;
    const auto f = [](const Point& x) {
        return 2.0 - std::cos(kTwoPi * x[0]) - std::cos(kTwoPi * x[1]);
    };
    const auto aniso = [](const Point& x) { return 1.0 + 0.5 * std::sin(kTwoPi * x[1]); };
    p.hamiltonians = {HamiltonianSpec::eikonal(aniso, f),
                      HamiltonianSpec::eikonal(constant_field(1.0), f)};
    p.coupling = CouplingField::constant(sym2());
    const TorusGrid g(2, 24, 1.0);
    const DiscretizedProblem dp(p, g);

    // constants are exact fixed points of the costless system
    ModelProblem flat = p;
    flat.hamiltonians[0].cost = constant_field(0.0);
    flat.hamiltonians[1].cost = constant_field(0.0);
    const DiscretizedProblem dpf(flat, g);
    VectorGridField k(g, 2, -1.3);
    auto params = make_scheme_params(flat, g, k);
    auto state = step(dpf, {k, 0.0, 0}, params);
    for (int i = 0; i < 2; ++i)
        for (long c = 0; c < g.cell_count(); ++c) CHECK(state.field.comp[i][c] == -1.3);

    // ordered data stay ordered and the residual decays along the run
    std::mt19937 rng(55);
    std::uniform_real_distribution<double> val(-0.3, 0.3);
    std::uniform_real_distribution<double> gap(0.0, 0.4);
    VectorGridField u0(g, 2), v0(g, 2);
    for (int i = 0; i < 2; ++i)
        for (long c = 0; c < g.cell_count(); ++c) {
            u0.comp[i][c] = val(rng);
            v0.comp[i][c] = u0.comp[i][c] + gap(rng);
        }
    params = make_scheme_params(p, g, u0);
    EvolutionState su{u0, 0.0, 0}, sv{v0, 0.0, 0};
    for (int s = 0; s < 100; ++s) {
        su = step(dp, su, params);
        sv = step(dp, sv, params);
        for (int i = 0; i < 2; ++i)
            for (long c = 0; c < g.cell_count(); ++c)
                REQUIRE(su.field.comp[i][c] <= sv.field.comp[i][c] + 1e-12);
    }
    const auto log = solve_until(dp, u0, 8.0, params, {});
    CHECK(log.samples.back().residual[0] < log.samples[1].residual[0]);
    CHECK(log.final_field.all_finite());

    // the coupling equalizes the components at the well bottom; the bottom
    // value itself drifts O(dx) at this coarse resolution
    const long bottom = g.index(0, 0);
    double lip = 0.0;
    for (int i = 0; i < 2; ++i) lip = std::max(lip, lipschitz_estimate(g, log.final_field.comp[i]));
    CHECK(std::abs(log.final_field.comp[0][bottom] - log.final_field.comp[1][bottom]) <=
          2.0 * g.dx() * lip + 1e-9);
}
