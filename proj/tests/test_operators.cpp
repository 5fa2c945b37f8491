#include <doctest.h>

#include <cmath>
#include <vector>

#include "heisvisc/linalg.hpp"
#include "heisvisc/operators.hpp"
#include "oracles.hpp"

using namespace heisvisc;

namespace {

HVec random_p(CounterRng& rng, int n) {
    HVec p(2 * n);
    for (int k = 0; k < 2 * n; ++k) p[k] = rng.uniform(-2, 2);
    return p;
}

OperatorSpec field_spec(int n) {
    OperatorSpec s;
    s.alpha = Coefficient::parse("1 + 0.2*s + 0.1*x1*t", n);
    s.beta = Coefficient::parse("0.5 + 0.1*y1^2 + 0.05*s^2", n);
    s.gamma = Coefficient::parse("exp(0.1*s)*(1 + 0.1*x1)", n);
    return s;
}

}  // namespace

TEST_CASE("J and L on basis vectors") {
    HVec p(2);
    p << 1, 0;
    const HVec jp = apply_J(p);
    CHECK(jp[0] == 0.0);
    CHECK(jp[1] == -1.0);
    // alpha e1e1 - gamma e2e2 - beta I
    const SymMat L = eval_L(OperatorSpec::quadratic(3.0, 0.5, 2.0), Point(1), 0.0, p);
    CHECK(L(0, 0) == doctest::Approx(2.5));
    CHECK(L(1, 1) == doctest::Approx(-2.5));
    CHECK(L(0, 1) == 0.0);
    CHECK(eval_L(OperatorSpec::zero(), Point(1), 0.0, p).max_abs() == 0.0);
}

TEST_CASE("dL/dp matches finite differences") {
    CounterRng rng(21, 1);
    for (int k = 0; k < 60; ++k) {
        const int n = 1 + k % 2;
        const OperatorSpec spec = k % 3 == 0 ? OperatorSpec::cr_invariant() : field_spec(n);
        const Point xi = oracle::random_point(rng, n, -1, 1);
        const double s = rng.uniform(-1, 1);
        const HVec p = random_p(rng, n);
        const auto d = eval_dL_dp(spec, xi, s, p);
        REQUIRE(static_cast<int>(d.size()) == 2 * n);
        for (int q = 0; q < 2 * n; ++q) {
            const double h = 1e-6;
            HVec a = p, b = p;
            a[q] += h;
            b[q] -= h;
            const Mat fd = (eval_L(spec, xi, s, a).mat() - eval_L(spec, xi, s, b).mat()) / (2 * h);
            CHECK((fd - d[q].mat()).cwiseAbs().maxCoeff() <= 1e-6 * (1 + fd.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("dL/dxi matches finite differences") {
    CounterRng rng(21, 2);
    for (int k = 0; k < 40; ++k) {
        const int n = 1 + k % 2;
        const OperatorSpec spec = field_spec(n);
        const Point xi = oracle::random_point(rng, n, -1, 1);
        const double s = rng.uniform(-1, 1);
        const HVec p = random_p(rng, n);
        const auto d = eval_dL_dxi(spec, xi, s, p);
        REQUIRE(static_cast<int>(d.size()) == 2 * n + 1);
        for (int a = 0; a < 2 * n + 1; ++a) {
            const double h = 1e-6;
            Point u = xi, v = xi;
            u[a] += h;
            v[a] -= h;
            const Mat fd = (eval_L(spec, u, s, p).mat() - eval_L(spec, v, s, p).mat()) / (2 * h);
            CHECK((fd - d[a].mat()).cwiseAbs().maxCoeff() <= 1e-6 * (1 + fd.cwiseAbs().maxCoeff()));
        }
    }
    const auto z = eval_dL_dxi(OperatorSpec::cr_invariant(), Point(1), 0.0, HVec::Ones(2));
    for (const auto& m : z) CHECK(m.max_abs() == 0.0);
}

TEST_CASE("F and A[psi]") {
    CounterRng rng(21, 3);
    for (int k = 0; k < 50; ++k) {
        const int n = 1 + k % 2;
        const expr::Expr e = oracle::random_polynomial(rng, n, 3, 6, 1.0);
        const AnalyticField f(e, n);
        const Point xi = oracle::random_point(rng, n, -1, 1);
        const Jet2 j = f.jet(xi);
        // the symmetric Hessian from the frame oracle plus L at the horizontal gradient
        const Eigen::MatrixXd H = oracle::frame_hessian(e, n, xi);
        HVec p(2 * n);
        std::vector<double> c(xi.coords().begin(), xi.coords().end());
        for (int q = 0; q < 2 * n; ++q) p[q] = expr::evaluate(oracle::apply_V(e, n, q), c);
        const Mat want = 0.5 * (H + H.transpose()) + eval_L(OperatorSpec::cr_invariant(), xi, j.value, p).mat();
        CHECK((eval_A_psi(j, xi).mat() - want).cwiseAbs().maxCoeff() <= 1e-10 * (1 + want.cwiseAbs().maxCoeff()));
        CHECK((eval_F(OperatorSpec::cr_invariant(), j, xi).mat() - want).cwiseAbs().maxCoeff() <= 1e-10 * (1 + want.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("A^u is conformal to A[psi]") {
    CounterRng rng(21, 4);
    for (int k = 0; k < 40; ++k) {
        const int n = 1 + k % 2;
        const double Q = 2.0 * n + 2.0;
        const expr::Expr psi = oracle::random_polynomial(rng, n, 3, 5, 0.5);
        const AnalyticField fp(psi, n);
        const AnalyticField fu(expr::exp(expr::mul(expr::constant(-(Q - 2) / 2), psi)), n);
        const Point xi = oracle::random_point(rng, n, -0.5, 0.5);
        const Jet2 jp = fp.jet(xi);
        const Mat want = std::exp(2 * jp.value) * eval_A_psi(jp, xi).mat();
        CHECK((eval_A_u(fu.jet(xi), xi).mat() - want).cwiseAbs().maxCoeff() <=
              1e-9 * (1 + want.cwiseAbs().maxCoeff()));
    }
    Jet2 neg = Jet2::zero(1);
    neg.value = -1.0;
    CHECK_THROWS_AS(eval_A_u(neg, Point(1)), PreconditionError);
}

TEST_CASE("coefficients") {
    const Coefficient c = Coefficient::parse("2.5", 1);
    CHECK(c.is_constant());
    CHECK(c.constant_value() == 2.5);
    const Coefficient f = Coefficient::parse("s*x1 + t", 1);
    CHECK_FALSE(f.is_constant());
    const Point p = Point::from_coords(std::vector<double>{2, 0, 1});
    CHECK(f.value(p, 3.0) == doctest::Approx(7.0));
    CHECK(f.ds(p, 3.0) == doctest::Approx(2.0));
    CHECK(f.dxi(p, 3.0)[0] == doctest::Approx(3.0));
    CHECK(f.dxi(p, 3.0)[2] == doctest::Approx(1.0));
    CHECK(Coefficient::parse("1 + 1", 1).is_constant());
    CHECK_THROWS_AS(Coefficient::parse("x1 +", 1), ParseError);
}

TEST_CASE("structural conditions on the quadratic example") {
    SamplePlan plan;
    plan.samples = 2000;
    const StructuralReport r = check_structural(OperatorSpec::cr_invariant(), {}, Domain::cube(1, 1.0), plan);
    CHECK(r.passed);
    CHECK(r.beta_branch == "beta>beta0,gamma>=0");
    for (const char* name : {"Lcond0_xi", "Lcond0_p", "Lcond1_lower", "Lcond1_upper", "LMonotone", "Lcond2"})
        CHECK_MESSAGE(r.find(name)->violations == 0, name);
    CHECK(check_structural(OperatorSpec::cr_invariant(), {}, Domain::cube(2, 1.0), plan).passed);
}

TEST_CASE("decreasing alpha yields a genuine witness") {
    OperatorSpec bad = OperatorSpec::cr_invariant();
    bad.alpha = Coefficient::parse("-s", 1);
    SamplePlan plan;
    plan.samples = 2000;
    const StructuralReport r = check_structural(bad, {}, Domain::cube(1, 1.0), plan);
    CHECK_FALSE(r.passed);
    const ConditionResult* c = r.find("Lcond1_lower");
    REQUIRE(c != nullptr);
    CHECK(c->violations > 0);
    const auto& w = c->witness;
    const Point xi = Point::from_coords(w.xi);
    HVec p(2);
    p << w.p[0], w.p[1];
    // L(s2) - L(s) must fail to be positive semidefinite at the witness
    const SymMat diff = eval_L(bad, xi, w.s2, p) - eval_L(bad, xi, w.s, p);
    CHECK(w.s < w.s2);
    CHECK(oracle::eigs(diff.mat()).front() < 0.0);
}

TEST_CASE("beta structure branches") {
    SamplePlan plan;
    plan.samples = 200;
    OperatorSpec neg = OperatorSpec::quadratic(1.0, -1.0, 0.0);
    CHECK(check_structural(neg, {}, Domain::cube(1, 1.0), plan).beta_branch == "beta<-beta0,gamma<=0");
    OperatorSpec flat = OperatorSpec::quadratic(1.0, 0.05, 0.0);
    CHECK(check_structural(flat, {}, Domain::cube(1, 1.0), plan).beta_branch == "constant alpha,beta; gamma=0");
    OperatorSpec mixed = OperatorSpec::quadratic(1.0, 0.5, -1.0);
    const StructuralReport r = check_structural(mixed, {}, Domain::cube(1, 1.0), plan);
    CHECK(r.beta_branch == "none");
    CHECK_FALSE(r.passed);
}

TEST_CASE("structural checker is reproducible") {
    SamplePlan plan;
    plan.samples = 500;
    const auto a = check_structural(field_spec(1), {}, Domain::cube(1, 1.0), plan);
    const auto b = check_structural(field_spec(1), {}, Domain::cube(1, 1.0), plan);
    for (std::size_t i = 0; i < a.conditions.size(); ++i) {
        CHECK(a.conditions[i].margin == b.conditions[i].margin);
        CHECK(a.conditions[i].witness.xi == b.conditions[i].witness.xi);
    }
    plan.samples = 0;
    CHECK_THROWS_AS(check_structural(field_spec(1), {}, Domain::cube(1, 1.0), plan), PreconditionError);
}
