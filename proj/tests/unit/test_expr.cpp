#include "doctest.h"

#include "gsde/expr.hpp"

using gsde::Vec;
using gsde::expr::Expression;
using gsde::expr::ParseError;

namespace {

Vec point(std::initializer_list<double> v) {
    Vec x(static_cast<int>(v.size()));
    int i = 0;
    for (double c : v) x[i++] = c;
    return x;
}

std::size_t error_offset(const std::string& text, int dim) {
    try {
        (void)Expression::parse(text, dim);
    } catch (const ParseError& e) {
        return e.offset();
    }
    FAIL("expected a parse error for '" << text << "'");
    return 0;
}

} // namespace

TEST_CASE("precedence and associativity") {
    CHECK(Expression::parse("1 + 2 * 3", 1).value(point({0})) == 7);
    CHECK(Expression::parse("2^3^2", 1).value(point({0})) == doctest::Approx(512));
    CHECK(Expression::parse("-2^2", 1).value(point({0})) == -4);
    CHECK(Expression::parse("8 / 4 / 2", 1).value(point({0})) == 1);
    CHECK(Expression::parse("x1 - x2 - x3", 3).value(point({5, 2, 1})) == 2);
}

TEST_CASE("functions and constants") {
    const Vec x = point({0.5, 2});
    CHECK(Expression::parse("sin(x1)^2 + cos(x1)^2", 2).value(x) == doctest::Approx(1.0));
    CHECK(Expression::parse("exp(log(x2))", 2).value(x) == doctest::Approx(2.0));
    CHECK(Expression::parse("sqrt(x2) * sqrt(x2)", 2).value(x) == doctest::Approx(2.0));
    CHECK(Expression::parse("abs(x1 - x2)", 2).value(x) == doctest::Approx(1.5));
    CHECK(Expression::parse("pow(x2, 3)", 2).value(x) == doctest::Approx(8.0));
    CHECK(Expression::parse("tanh(0)", 2).value(x) == 0.0);
}

TEST_CASE("dual numbers give exact derivatives") {
    const auto e = Expression::parse("exp(x1)", 1);
    const auto d = e.eval_dual(point({0}), 2);
    CHECK(d.value == doctest::Approx(1.0));
    CHECK(d.first[0] == doctest::Approx(1.0));
    CHECK(d.second(0, 0) == doctest::Approx(1.0));

    const auto p = Expression::parse("x1*x2", 2).eval_dual(point({3, 5}), 2);
    CHECK(p.value == 15);
    CHECK(p.first[0] == 5);
    CHECK(p.first[1] == 3);
    CHECK(p.second(0, 1) == 1);
    CHECK(p.second(0, 0) == 0);

    const auto l = Expression::parse("log(x3)", 3).eval_dual(point({0, 0, 2}), 1);
    CHECK(l.value == doctest::Approx(std::log(2.0)));
    CHECK(l.first[2] == doctest::Approx(0.5));
}

TEST_CASE("symbolic derivative agrees with the dual evaluation") {
    const auto e = Expression::parse("sin(x1 * x2) / (1 + x3^2) + x2^2.5", 3);
    const Vec x = point({0.3, 1.2, -0.4});
    const auto d = e.eval_dual(x, 2);
    for (int k = 1; k <= 3; ++k) {
        CHECK(e.derivative(k).value(x) == doctest::Approx(d.first[k - 1]).epsilon(1e-12));
        const auto dk = e.derivative(k).eval_dual(x, 1);
        for (int j = 0; j < 3; ++j) CHECK(dk.first[j] == doctest::Approx(d.second(k - 1, j)).epsilon(1e-10));
    }
}

TEST_CASE("printing round-trips") {
    for (const char* text : {"x1 + x2 * x3", "-(x1 - 2)^3", "2^3^2", "(2^3)^2", "x1 / (x2 / x3)", "sin(-x1) - -x2",
                             "1e-3 * exp(x1)"}) {
        const auto e = Expression::parse(text, 3);
        const auto back = Expression::parse(e.str(), 3);
        CHECK(gsde::expr::equal(e.tree(), back.tree()));
    }
}

TEST_CASE("composition substitutes inner expressions") {
    const auto outer = Expression::parse("x1^2 + x2", 2);
    const std::vector<Expression> inner = {Expression::parse("x1 + x2", 2), Expression::parse("3 * x1", 2)};
    const auto c = outer.compose(inner);
    CHECK(c.value(point({1, 2})) == doctest::Approx(12.0));
}

TEST_CASE("parse errors carry offsets") {
    CHECK(error_offset("x1 + (x2", 3) == 8);
    CHECK(error_offset("", 3) == 0);
    CHECK(error_offset("x1 +", 3) == 4);
    CHECK(error_offset("x4", 3) == 0);
    CHECK(error_offset("x1 * foo(x2)", 3) == 5);
    CHECK(error_offset("sin x1", 3) == 4);
    CHECK(error_offset("x1 x2", 3) == 3);
    CHECK_THROWS_AS((void)Expression::parse("sin(x1, x2)", 3), ParseError);
}

TEST_CASE("domain errors report the offending node") {
    const auto e = Expression::parse("1 + log(x1)", 1);
    CHECK_THROWS_AS((void)e.value(point({-1})), gsde::expr::DomainError);
    try {
        (void)e.value(point({-1}));
    } catch (const gsde::expr::DomainError& err) {
        CHECK(err.offset() == 4);
    }
    CHECK_THROWS_AS((void)Expression::parse("1 / x1", 1).value(point({0})), gsde::expr::DomainError);
}
