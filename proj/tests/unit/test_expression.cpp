#include <catch2/catch_amalgamated.hpp>

#include "hjsys/expr.hpp"

using hjsys::parse_expression;

TEST_CASE("expression parsing and evaluation", "[expression]") {
    CHECK(parse_expression("1 - cos(2*pi*x)").eval(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(parse_expression("1 - cos(2*pi*x)").eval(0.5) == Catch::Approx(2.0));
    CHECK(parse_expression("min(x, 1-x)").eval(0.25) == Catch::Approx(0.25));
    CHECK(parse_expression("max(x, 1-x, 0.9)").eval(0.5) == Catch::Approx(0.9));
    CHECK(parse_expression("abs(-3*x)").eval(2.0) == Catch::Approx(6.0));
    CHECK(parse_expression("2 + 3 * 4").eval(0.0) == Catch::Approx(14.0));
    CHECK(parse_expression("(2 + 3) * 4").eval(0.0) == Catch::Approx(20.0));
    CHECK(parse_expression("-x*x").eval(3.0) == Catch::Approx(-9.0));
    CHECK(parse_expression("1 - 2 - 3").eval(0.0) == Catch::Approx(-4.0));
    CHECK(parse_expression("x / 2 + y / 4").eval(1.0, 2.0) == Catch::Approx(1.0));
    CHECK(parse_expression("sin(pi/2)").eval(0.0) == Catch::Approx(1.0));
    CHECK(parse_expression("1.5e2").eval(0.0) == Catch::Approx(150.0));
}

TEST_CASE("division is guarded", "[expression]") {
    CHECK(parse_expression("1 / x").eval(0.0) == 0.0);
    CHECK(parse_expression("1 / x").eval(0.5) == Catch::Approx(2.0));
}

TEST_CASE("syntax errors carry a position", "[expression]") {
    try {
        parse_expression("abs(");
        FAIL("expected SyntaxError");
    } catch (const hjsys::SyntaxError& e) {
        CHECK(e.position == 4);
    }

    CHECK_THROWS_AS(parse_expression("2 +"), hjsys::SyntaxError);
    CHECK_THROWS_AS(parse_expression("foo(x)"), hjsys::SyntaxError);
    CHECK_THROWS_AS(parse_expression("(1 + 2"), hjsys::SyntaxError);
    CHECK_THROWS_AS(parse_expression("1 2"), hjsys::SyntaxError);
    CHECK_THROWS_AS(parse_expression("min(x)"), hjsys::SyntaxError);
    CHECK_THROWS_AS(parse_expression("sin(x, y)"), hjsys::SyntaxError);
    CHECK_THROWS_AS(parse_expression(""), hjsys::SyntaxError);
}
