#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "heisvisc/expr.hpp"
#include "heisvisc/fields.hpp"
#include "oracles.hpp"

using namespace heisvisc;

namespace {

double eval1(const std::string& src, std::vector<double> vars = {0.0, 0.0, 0.0}) {
    return expr::evaluate(expr::parse(src, field_variables(1)), vars);
}

}  // namespace

TEST_CASE("expression precedence") {
    CHECK(eval1("1 + 2 * 3") == 7.0);
    CHECK(eval1("-2^2") == -4.0);
    CHECK(eval1("2^3^2") == 512.0);
    CHECK(eval1("2^-1") == 0.5);
    CHECK(eval1("8 / 4 / 2") == 1.0);
    CHECK(eval1("10 - 4 - 3") == 3.0);
    CHECK(eval1("(1 + 2) * 3") == 9.0);
    CHECK(eval1("x + 2*y - t", {1, 2, 3}) == 2.0);
    CHECK(eval1("x1*y1 + t", {2, 3, 1}) == 7.0);
    CHECK(eval1("min(1, 2) + max(3, -1)") == 4.0);
    CHECK(eval1("cos(0) + sin(0) + exp(0) + log(1) + sqrt(4)") == 4.0);
    CHECK(eval1("pi") == doctest::Approx(3.14159265358979));
    CHECK(eval1("1e-3 * 2.5E2") == doctest::Approx(0.25));
}

TEST_CASE("expression errors") {
    const auto vars = field_variables(1);
    CHECK_THROWS_AS(expr::parse("1 +", vars), ParseError);
    CHECK_THROWS_AS(expr::parse("(x", vars), ParseError);
    CHECK_THROWS_AS(expr::parse("z + 1", vars), ParseError);
    CHECK_THROWS_AS(expr::parse("foo(1)", vars), ParseError);
    CHECK_THROWS_AS(expr::parse("min(1)", vars), ParseError);
    CHECK_THROWS_AS(expr::parse("1 2", vars), ParseError);
    try {
        expr::parse("x + $", vars);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 4);
    }
    CHECK_THROWS_AS(eval1("log(0)"), EvalError);
    CHECK_THROWS_AS(eval1("sqrt(-1)"), EvalError);
    CHECK_THROWS_AS(eval1("(-8)^(1/3)"), EvalError);
    CHECK_THROWS_AS(eval1("1/0"), EvalError);
    CHECK(eval1("(-2)^3") == -8.0);
}

TEST_CASE("symbolic derivatives agree with finite differences") {
    const auto vars = field_variables(1);
    const std::vector<std::string> srcs = {
        "x^3*y - 2*t^2 + exp(x*t)", "sin(x)*cos(y) + log(2 + t^2)", "sqrt(1 + x^2 + y^4) / (2 + t)",
        "(1 + x^2)^(-1/2) * t", "((x^2+y^2)^2 + (t+2)^2)^(-1/2)", "exp(-(x^2+y^2))^2 * cos(t)"};
    CounterRng rng(3, 1);
    for (const auto& s : srcs) {
        const expr::Expr e = expr::parse(s, vars);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> p = {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
            for (int v = 0; v < 3; ++v) {
                const double h = 1e-6;
                auto q = p, r = p;
                q[v] += h;
                r[v] -= h;
                const double fd = (expr::evaluate(e, q) - expr::evaluate(e, r)) / (2 * h);
                CHECK(expr::evaluate(expr::differentiate(e, v), p) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            }
        }
        // printing round-trips
        const expr::Expr back = expr::parse(expr::to_string(e, vars), vars);
        const std::vector<double> p = {0.3, -0.2, 0.1};
        CHECK(expr::evaluate(back, p) == expr::evaluate(e, p));
    }
}

TEST_CASE("min and max carry one-sided derivatives away from kinks") {
    const auto vars = field_variables(1);
    const expr::Expr e = expr::parse("max(x, y)", vars);
    CHECK(expr::has_kinks(e));
    const expr::Expr d = expr::differentiate(e, 0);
    CHECK(expr::evaluate(d, std::vector<double>{1, 0, 0}) == 1.0);
    CHECK(expr::evaluate(d, std::vector<double>{0, 1, 0}) == 0.0);
    CHECK_THROWS_AS(expr::evaluate(d, std::vector<double>{1, 1, 0}), EvalError);
}

TEST_CASE("analytic field jets") {
    const AnalyticField f = AnalyticField::parse("x1^2*y1 + 3*t*x1 - y1^3", 1);
    const Point p = Point::from_coords(std::vector<double>{1, 2, 3});
    const Jet2 j = f.jet(p);
    CHECK(j.value == doctest::Approx(2 + 9 - 8));
    CHECK(j.egrad[0] == doctest::Approx(2 * 1 * 2 + 9));
    CHECK(j.egrad[1] == doctest::Approx(1 - 12));
    CHECK(j.egrad[2] == doctest::Approx(3));
    CHECK(j.ehess(0, 0) == doctest::Approx(4));
    CHECK(j.ehess(0, 1) == doctest::Approx(2));
    CHECK(j.ehess(1, 0) == doctest::Approx(2));
    CHECK(j.ehess(1, 1) == doctest::Approx(-12));
    CHECK(j.ehess(0, 2) == doctest::Approx(3));
    CHECK(j.ehess(2, 2) == doctest::Approx(0));
    CHECK_THROWS_AS(AnalyticField::parse("x1 + x2", 1), ParseError);
    CHECK_THROWS_AS(AnalyticField::parse("x1 + s", 1), ParseError);
    const AnalyticField g = AnalyticField::parse("x1 + s^2", 1, true);
    CHECK(g.ds(p, 3.0) == doctest::Approx(6.0));
    CHECK(g.depends_on_s());
    CHECK(AnalyticField::constant(2.0, 2).value(Point(2)) == 2.0);
}

TEST_CASE("grid lattice layout") {
    const Domain d(1, {-1, -1, 0}, {1, 1, 2});
    GridField g(d, {3, 5, 9});
    CHECK(g.size() == 135u);
    CHECK(g.stride(2) == 1u);
    CHECK(g.stride(1) == 9u);
    CHECK(g.stride(0) == 45u);
    CHECK(g.spacing(0) == 1.0);
    CHECK(g.spacing(2) == 0.25);
    const std::vector<int> idx = {1, 2, 4};
    const std::size_t f = g.flat_of(idx);
    CHECK(f == 45u + 18u + 4u);
    const auto back = g.index_of(f);
    CHECK(back[0] == 1);
    CHECK(back[2] == 4);
    const Point p = g.point(f);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == 1.0);
    CHECK_FALSE(g.is_boundary(f));
    CHECK(g.is_boundary(0));
    CHECK(g.is_inner(f, 1));
    CHECK_FALSE(g.is_inner(f, 2));
    CHECK_THROWS_AS(GridField(d, {2, 5, 5}), PreconditionError);
    CHECK_THROWS_AS(GridField(d, {5, 5}), DimensionError);
}

TEST_CASE("finite-difference jets") {
    const Domain d = Domain::cube(1, 1.0);
    const AnalyticField q = AnalyticField::parse("1 + x - 2*y + t*y + x^2 - 3*x*t + 0.5*t^2", 1);
    const GridField g = sample(q, d, {5, 5, 5});
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.is_inner(i, 1)) {
            CHECK_THROWS_AS(jet2_fd(g, i), PreconditionError);
            continue;
        }
        const Jet2 a = jet2_fd(g, i), b = q.jet(g.point(i));
        CHECK((a.egrad - b.egrad).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((a.ehess - b.ehess).cwiseAbs().maxCoeff() <= 1e-11);
    }
    // second order on a smooth non-polynomial field
    const AnalyticField s = AnalyticField::parse("sin(x)*exp(y) + cos(t*x)", 1);
    double err[2];
    int r = 0;
    for (int res : {11, 21}) {
        const GridField h = sample(s, d, {res, res, res});
        const std::vector<int> c = {res / 2 + 1, res / 2, res / 2 - 1};
        const std::size_t node = h.flat_of(c);
        err[r++] = (jet2_fd(h, node).ehess - s.jet(h.point(node)).ehess).cwiseAbs().maxCoeff();
    }
    CHECK(err[1] < err[0] / 3.0);
}

TEST_CASE("kinked samples are refused by finite differences") {
    const Domain d = Domain::cube(1, 1.0);
    const GridField g = sample(AnalyticField::parse("max(x, 0)", 1), d, {5, 5, 5});
    const std::vector<int> at = {2, 2, 2};
    CHECK(g.kink(g.flat_of(at)));
    CHECK_THROWS_AS(jet2_fd(g, g.flat_of(at)), EvalError);
}

TEST_CASE("sampling failures name the node") {
    const Domain d = Domain::cube(1, 1.0);
    CHECK_THROWS_AS(sample(AnalyticField::parse("log(x)", 1), d, {3, 3, 3}), EvalError);
}

TEST_CASE("exponential substitution") {
    const Domain d = Domain::cube(1, 1.0);
    const AnalyticField w = AnalyticField::parse("x + t", 1);
    const GridField g = sample(w, d, {3, 3, 3});
    const GridField e = exp_transform(g, -2.0);
    const AnalyticField ea = exp_transform(w, -2.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(e[i] == doctest::Approx(-std::exp(-2.0 * g[i])));
        CHECK(ea.value(g.point(i)) == doctest::Approx(e[i]));
    }
    CHECK_THROWS_AS(exp_transform(g, 0.0), PreconditionError);
}

TEST_CASE("gamma interior") {
    const Domain d = Domain::cube(1, 1.0);
    const GridField g(d, {9, 9, 9});
    CHECK_THROWS_AS(gamma_interior(g, 0.0), PreconditionError);
    const auto all = gamma_interior(g, 1e-9);
    const auto some = gamma_interior(g, 0.5);
    CHECK(all.size() == 343u);
    CHECK(some.size() < all.size());
    CHECK(!some.empty());
}
