#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "arcd/expr.hpp"

using namespace arcd::expr;
using arcd::ArError;
using arcd::ErrorCode;

namespace {

/** Uniformly random expression tree over coordinates 0..max_coord. */
ExprPtr random_tree(std::mt19937_64& rng, int depth, int max_coord) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    std::uniform_real_distribution<double> lit(-3.0, 3.0);
    std::uniform_int_distribution<int> coord_pick(0, max_coord);
    switch (pick(rng)) {
    case 0: return literal(lit(rng));
    case 1: return coord(coord_pick(rng));
    case 2: return neg(random_tree(rng, depth - 1, max_coord));
    case 3: return sin(random_tree(rng, depth - 1, max_coord));
    case 4: return cos(random_tree(rng, depth - 1, max_coord));
    case 5:
        return add(random_tree(rng, depth - 1, max_coord),
                   random_tree(rng, depth - 1, max_coord));
    case 6:
        return sub(random_tree(rng, depth - 1, max_coord),
                   random_tree(rng, depth - 1, max_coord));
    case 7:
        return mul(random_tree(rng, depth - 1, max_coord),
                   random_tree(rng, depth - 1, max_coord));
    case 8: {
        // Keep denominators bounded away from zero on [-1, 1]^d.
        ExprPtr den = add(literal(2.5), sin(random_tree(rng, depth - 1, max_coord)));
        return div(random_tree(rng, depth - 1, max_coord), den);
    }
    default: {
        std::uniform_int_distribution<int> ex(2, 4);
        return pow_int(random_tree(rng, depth - 1, max_coord), ex(rng));
    }
    }
}

std::vector<double> random_point(std::mt19937_64& rng, int dims) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> p(dims);
    for (double& v : p) v = u(rng);
    return p;
}

/** Richardson-extrapolated central difference of e along coordinate i. */
double fd_derivative(const ExprPtr& e, int i, std::vector<double> p) {
    const double h = 1e-4;
    auto at = [&](double step) {
        std::vector<double> q = p;
        q[i] += step;
        double hi = evaluate(e, q);
        q[i] = p[i] - step;
        return (hi - evaluate(e, q)) / (2.0 * step);
    };
    double d1 = at(h), d2 = at(h / 2.0);
    return (4.0 * d2 - d1) / 3.0;
}

} // namespace

TEST_CASE("printing and reparsing rebuilds the identical tree") {
    std::mt19937_64 rng(20240811);
    for (int trial = 0; trial < 200; ++trial) {
        ExprPtr e = random_tree(rng, 5, 2);
        ExprPtr back = parse(to_string(e));
        CAPTURE(to_string(e));
        REQUIRE(identical(e, back));
    }
}

TEST_CASE("parse handles the documented grammar") {
    std::vector<double> p{0.3, -0.7, 0.2};
    CHECK(evaluate(parse("x"), p) == doctest::Approx(0.3));
    CHECK(evaluate(parse("z1"), p) == doctest::Approx(-0.7));
    CHECK(evaluate(parse("-z2/2"), p) == doctest::Approx(-0.1));
    CHECK(evaluate(parse("x^2 + z1*z2"), p) == doctest::Approx(0.09 - 0.14));
    CHECK(evaluate(parse("1 - 2 - 3"), p) == doctest::Approx(-4.0));
    CHECK(evaluate(parse("8 / 4 / 2"), p) == doctest::Approx(1.0));
    CHECK(evaluate(parse("exp(log(2.5))"), p) == doctest::Approx(2.5));
    CHECK(evaluate(parse("sin(x)^2 + cos(x)^2"), p) == doctest::Approx(1.0));
    CHECK(evaluate(parse("sqrt(x^2)"), p) == doctest::Approx(0.3));
    CHECK(evaluate(parse("2^3"), p) == doctest::Approx(8.0));
    CHECK(evaluate(parse("-x^2"), p) == doctest::Approx(-0.09));
    CHECK(evaluate(parse("(x + z1)^2"), p) == doctest::Approx(0.16));
    CHECK(evaluate(parse("1e-3 + 1E2"), p) == doctest::Approx(100.001));
}

TEST_CASE("parse rejects malformed input with a position") {
    for (const char* bad : {"", "x +", "((x)", "z", "zx", "sin x", "x ^ z1", "x**2",
                            "foo(x)", "1..2", "x $ 2"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS((void)parse(bad), ArError);
        try {
            (void)parse(bad);
        } catch (const ArError& e) {
            CHECK(e.code() == ErrorCode::ParseError);
        }
    }
}

TEST_CASE("constant folding keeps zero denominators unfolded") {
    // 1/0 must survive construction and fail at evaluation time.
    ExprPtr e = div(literal(1.0), literal(0.0));
    CHECK(e->kind == Kind::Div);
    std::vector<double> p{0.0};
    CHECK_THROWS_AS((void)evaluate(e, p), ArError);
    try {
        (void)evaluate(e, p);
    } catch (const ArError& err) {
        CHECK(err.code() == ErrorCode::DivisionByZero);
    }

    // 0/e likewise survives: the denominator may vanish with the numerator.
    ExprPtr z = div(literal(0.0), coord(0));
    CHECK(z->kind == Kind::Div);
    CHECK_THROWS_AS((void)evaluate(z, p), ArError);
}

TEST_CASE("constant folding simplifies identities") {
    ExprPtr x = coord(0);
    CHECK(identical(add(x, literal(0.0)), x));
    CHECK(identical(mul(x, literal(1.0)), x));
    CHECK(mul(x, literal(0.0))->kind == Kind::Literal);
    CHECK(identical(pow_int(x, 1), x));
    CHECK(pow_int(x, 0)->kind == Kind::Literal);
    CHECK(pow_int(x, 0)->value == 1.0);
    CHECK(identical(neg(neg(x)), x));
    CHECK(neg(literal(2.0))->value == -2.0);
    CHECK(add(literal(1.5), literal(2.0))->value == 3.5);
    // log(-1) must not fold into NaN; it stays symbolic and throws on eval.
    ExprPtr bad = log(literal(-1.0));
    CHECK(bad->kind == Kind::Log);
}

TEST_CASE("evaluate reports domain violations with the subexpression") {
    std::vector<double> p{-2.0};
    try {
        (void)evaluate(log(coord(0)), p);
        FAIL("expected DomainError");
    } catch (const ArError& e) {
        CHECK(e.code() == ErrorCode::DomainError);
        CHECK(std::string(e.what()).find("log(x)") != std::string::npos);
    }
    CHECK_THROWS_AS((void)evaluate(sqrt(coord(0)), p), ArError);
    // Negative power of an exact zero base.
    std::vector<double> origin{0.0};
    CHECK_THROWS_AS((void)evaluate(pow_int(coord(0), -2), origin), ArError);
}

TEST_CASE("diff matches a finite-difference probe on random trees") {
    std::mt19937_64 rng(987654321);
    int checked = 0;
    while (checked < 100) {
        ExprPtr e = random_tree(rng, 4, 2);
        std::vector<double> p = random_point(rng, 3);
        for (int i = 0; i < 3; ++i) {
            ExprPtr d = diff(e, i);
            double sym, num;
            try {
                sym = evaluate(d, p);
                num = fd_derivative(e, i, p);
            } catch (const ArError&) {
                continue; // point fell outside a log/sqrt domain
            }
            if (!std::isfinite(sym) || !std::isfinite(num) || std::abs(num) > 1e3) continue;
            CAPTURE(to_string(e));
            CHECK(sym == doctest::Approx(num).epsilon(1e-7).scale(1.0));
            ++checked;
        }
    }
}

TEST_CASE("diff is linear") {
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 100; ++trial) {
        ExprPtr f = random_tree(rng, 4, 1);
        ExprPtr g = random_tree(rng, 4, 1);
        ExprPtr lhs = diff(add(f, g), 0);
        ExprPtr rhs = add(diff(f, 0), diff(g, 0));
        std::vector<double> p = random_point(rng, 2);
        double a, b;
        try {
            a = evaluate(lhs, p);
            b = evaluate(rhs, p);
        } catch (const ArError&) {
            continue;
        }
        CHECK(a == doctest::Approx(b).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("mixed partial derivatives commute") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 50; ++trial) {
        ExprPtr e = random_tree(rng, 4, 1);
        ExprPtr dxy = diff(diff(e, 0), 1);
        ExprPtr dyx = diff(diff(e, 1), 0);
        std::vector<double> p = random_point(rng, 2);
        double a, b;
        try {
            a = evaluate(dxy, p);
            b = evaluate(dyx, p);
        } catch (const ArError&) {
            continue;
        }
        CHECK(a == doctest::Approx(b).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("diff on known expressions") {
    std::vector<double> p{0.4, 0.9};
    CHECK(evaluate(diff(parse("x^3"), 0), p) == doctest::Approx(3 * 0.16));
    CHECK(evaluate(diff(parse("sin(x*z1)"), 0), p) ==
          doctest::Approx(0.9 * std::cos(0.36)));
    CHECK(evaluate(diff(parse("sqrt(x)"), 0), p) == doctest::Approx(0.5 / std::sqrt(0.4)));
    CHECK(evaluate(diff(parse("log(z1)"), 1), p) == doctest::Approx(1.0 / 0.9));
    CHECK(evaluate(diff(parse("x/z1"), 1), p) == doctest::Approx(-0.4 / 0.81));
    CHECK(evaluate(diff(parse("exp(2*x)"), 0), p) == doctest::Approx(2 * std::exp(0.8)));
    // d/dz2 of something in x and z1 is exactly zero.
    CHECK(is_constant(diff(parse("x^2 + sin(z1)"), 2)));
    CHECK(evaluate(diff(parse("x^2 + sin(z1)"), 2), p) == 0.0);
}

TEST_CASE("coordinate bookkeeping helpers") {
    CHECK(max_coord_index(parse("3.5")) == -1);
    CHECK(max_coord_index(parse("x")) == 0);
    CHECK(max_coord_index(parse("x + z2*z1")) == 2);
    CHECK(is_constant(parse("1 + 2")));
    CHECK(!is_constant(parse("x")));
}

TEST_CASE("vanishing order along a coordinate") {
    std::vector<double> origin{0.0, 0.0};
    CHECK(vanishing_order(parse("x"), 0, origin, 10).value() == 1);
    CHECK(vanishing_order(parse("x^3"), 0, origin, 10).value() == 3);
    CHECK(vanishing_order(parse("x^3 + x*z1"), 0, origin, 10).value() == 3);
    CHECK(vanishing_order(parse("exp(x) - 1"), 0, origin, 10).value() == 1);
    CHECK(vanishing_order(parse("2"), 0, origin, 10).value() == 0);
    CHECK(!vanishing_order(parse("0"), 0, origin, 10).has_value());
    // With z1 != 0 the x*z1 term dominates.
    std::vector<double> off{0.0, 0.5};
    CHECK(vanishing_order(parse("x^3 + x*z1"), 0, off, 10).value() == 1);
}

TEST_CASE("to_string round-trips numeric literals exactly") {
    for (double v : {1.0 / 3.0, 1e-17, 123456.789012345678, -0.1, 2.0}) {
        ExprPtr e = literal(v);
        ExprPtr back = parse(to_string(e));
        CHECK(back->value == v);
    }
}
