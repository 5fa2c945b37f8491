#include "heisvisc/suites.hpp"

#include <algorithm>
#include <cmath>

#include "heisvisc/comparison.hpp"
#include "heisvisc/envelopes.hpp"
#include "heisvisc/linalg.hpp"
#include "heisvisc/operators.hpp"
#include "heisvisc/rng.hpp"
#include "heisvisc/viscosity.hpp"

namespace heisvisc {

using io::json;

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"core",       "calculus", "cones",   "envelopes",
                                                   "structural", "lemma35",  "keylemma", "all"};
    return names;
}

namespace {

struct Suite {
    json checks = json::array();
    bool passed = true;

    void add(const std::string& name, bool ok, json detail = json::object()) {
        json e;
        e["name"] = name;
        e["passed"] = ok;
        e["detail"] = std::move(detail);
        checks.push_back(std::move(e));
        passed = passed && ok;
    }
};

Point random_point(CounterRng& rng, int n, double lo, double hi) {
    Point p(n);
    for (int a = 0; a < p.dim(); ++a) p[a] = rng.uniform(lo, hi);
    return p;
}

// Random polynomial of total degree <= deg in the 2n+1 coordinates.
expr::Expr random_polynomial(CounterRng& rng, int n, int deg, int terms, double coef) {
    using namespace expr;
    const int d = 2 * n + 1;
    Expr e = constant(rng.uniform(-coef, coef));
    for (int k = 0; k < terms; ++k) {
        Expr m = constant(rng.uniform(-coef, coef));
        const int dk = 1 + static_cast<int>(rng.below(deg));
        for (int f = 0; f < dk; ++f) m = mul(m, variable(static_cast<int>(rng.below(d))));
        e = add(e, m);
    }
    return e;
}

double rel(double err, double scale) { return err / std::max(1.0, scale); }

// ---------------------------------------------------------------- core

void suite_core(Suite& s, std::uint64_t seed) {
    const int N = 10000;
    for (int n : {1, 2}) {
        double assoc = 0, inv = 0, ident = 0, left = 0, homog = 0;
        CounterRng rng(seed, 100 + n);
        for (int i = 0; i < N; ++i) {
            const Point a = random_point(rng, n, -2, 2), b = random_point(rng, n, -2, 2),
                        c = random_point(rng, n, -2, 2);
            const Point l = group_mul(group_mul(a, b), c), r = group_mul(a, group_mul(b, c));
            for (int k = 0; k < a.dim(); ++k) {
                assoc = std::max(assoc, rel(std::abs(l[k] - r[k]), std::abs(l[k])));
                inv = std::max(inv, std::abs(group_mul(a, group_inv(a))[k]));
                ident = std::max(ident, std::abs(group_mul(a, Point(n))[k] - a[k]));
            }
            left = std::max(left, rel(std::abs(dist(group_mul(c, a), group_mul(c, b)) - dist(a, b)), dist(a, b)));
            const double lam = rng.uniform(0.1, 5.0);
            homog = std::max(homog, rel(std::abs(gauge(dilate(lam, a)) - lam * gauge(a)), lam * gauge(a)));
        }
        const std::string tag = "n=" + std::to_string(n);
        s.add("associativity " + tag, assoc <= 1e-12, {{"max_error", assoc}, {"samples", N}});
        s.add("inverse " + tag, inv <= 1e-12, {{"max_error", inv}, {"samples", N}});
        s.add("identity " + tag, ident == 0.0, {{"max_error", ident}, {"samples", N}});
        s.add("left invariance " + tag, left <= 1e-12, {{"max_error", left}, {"samples", N}});
        s.add("gauge homogeneity " + tag, homog <= 1e-12, {{"max_error", homog}, {"samples", N}});
    }
}

// ---------------------------------------------------------------- calculus

void suite_calculus(Suite& s, std::uint64_t seed) {
    CounterRng rng(seed, 200);
    // antisymmetric part of the Heisenberg Hessian
    double comm = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(i % 2);
        const AnalyticField f(random_polynomial(rng, n, 3, 8, 1.0), n);
        const Point p = random_point(rng, n, -1, 1);
        const Jet2 j = f.jet(p);
        const Mat H = heis_hessian(j, p);
        const Mat R = H - H.transpose() - kCommutatorConstant * j.egrad[2 * n] * symplectic_J(n);
        comm = std::max(comm, rel(R.cwiseAbs().maxCoeff(), H.cwiseAbs().maxCoeff()));
    }
    s.add("commutator structure", comm <= 1e-10, {{"c", kCommutatorConstant}, {"max_residual", comm}});

    // sub-Laplacian harmonicity of gauge^{2-Q}, n = 1
    {
        const AnalyticField u = AnalyticField::parse("((x1^2+y1^2)^2+t^2)^(-1/2)", 1);
        double worst = 0.0;
        int done = 0;
        while (done < 1000) {
            const Point p = random_point(rng, 1, -2, 2);
            if (gauge(p) < 0.5) continue;
            ++done;
            const Jet2 j = u.jet(p);
            worst = std::max(worst, std::abs(heis_hessian_sym(j, p).trace()));
        }
        s.add("gauge harmonicity", worst <= 1e-6, {{"max_trace", worst}, {"points", done}});
    }

    // A^u = e^{2 psi} A[psi] for u = e^{-(Q-2) psi / 2}
    {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int n = 1 + static_cast<int>(i % 2);
            const double Q = 2.0 * n + 2.0;
            const expr::Expr psi = random_polynomial(rng, n, 3, 6, 0.5);
            const AnalyticField fpsi(psi, n);
            const AnalyticField fu(expr::exp(expr::mul(expr::constant(-(Q - 2.0) / 2.0), psi)), n);
            const Point p = random_point(rng, n, -0.5, 0.5);
            const Jet2 jp = fpsi.jet(p);
            const SymMat rhs = eval_A_psi(jp, p) * std::exp(2.0 * jp.value);
            const SymMat lhs = eval_A_u(fu.jet(p), p);
            worst = std::max(worst, rel((lhs - rhs).max_abs(), rhs.max_abs()));
        }
        s.add("conformal relation", worst <= 1e-8, {{"max_residual", worst}});
    }

    // F[psi + mu |xi|^2] - F[psi] = 2 mu (I + 4 Jz (x) Jz) when L = 0
    {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int n = 1 + static_cast<int>(i % 2);
            const expr::Expr psi = random_polynomial(rng, n, 3, 6, 1.0);
            const double mu = rng.uniform(-2, 2);
            expr::Expr sq = expr::constant(0.0);
            for (int k = 0; k < 2 * n + 1; ++k) sq = expr::add(sq, expr::mul(expr::variable(k), expr::variable(k)));
            const AnalyticField a(psi, n), b(expr::add(psi, expr::mul(expr::constant(mu), sq)), n);
            const Point p = random_point(rng, n, -1, 1);
            const OperatorSpec z = OperatorSpec::zero();
            const SymMat diff = eval_F(z, b.jet(p), p) - eval_F(z, a.jet(p), p);
            HVec zz(2 * n);
            for (int k = 0; k < 2 * n; ++k) zz[k] = p[k];
            const HVec jz = apply_J(zz);
            const Mat want = 2.0 * mu * (Mat::Identity(2 * n, 2 * n) + 4.0 * jz * jz.transpose());
            worst = std::max(worst, rel((diff.mat() - want).cwiseAbs().maxCoeff(), want.cwiseAbs().maxCoeff()));
        }
        s.add("quadratic shift identity", worst <= 1e-10, {{"max_residual", worst}});
    }

    // FD jets are exact on quadratics
    {
        const Domain d = Domain::cube(1, 1.0);
        const AnalyticField q = AnalyticField::parse("1 + x1 - 2*y1 + 0.5*t + x1^2 - 3*x1*y1 + 2*t*y1 + 0.25*t^2", 1);
        const GridField g = sample(q, d, {7, 7, 7});
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.is_boundary(i)) continue;
            const Jet2 a = jet2_fd(g, i), b = q.jet(g.point(i));
            worst = std::max(worst, (a.ehess - b.ehess).cwiseAbs().maxCoeff());
            worst = std::max(worst, (a.egrad - b.egrad).cwiseAbs().maxCoeff());
        }
        s.add("fd exact on quadratics", worst <= 1e-10, {{"max_error", worst}});
    }
}

// ---------------------------------------------------------------- cones

void suite_cones(Suite& s, const SuiteOptions& opt) {
    std::vector<std::pair<ConeSpec, int>> cones;
    if (opt.cone) {
        cones.emplace_back(*opt.cone, 1);
    } else {
        cones = {{ConeSpec::trace(), 1},      {ConeSpec::posdef(), 1},     {ConeSpec::sigma_k(1), 1},
                 {ConeSpec::sigma_k(2), 1},   {ConeSpec::sigma_k(2), 2},   {ConeSpec::sigma_k(3), 2}};
    }
    std::uint64_t stream = 0;
    for (const auto& [cone, n] : cones) {
        AxiomPlan plan;
        plan.seed = opt.seed + 1000 * (++stream);
        plan.n = n;
        plan.samples = 10000;
        const AxiomReport r = check_axioms(cone, plan);
        s.add("axioms " + cone.name() + " n=" + std::to_string(n), r.passed, io::to_json(r));
    }
}

// ---------------------------------------------------------------- envelopes

json envelope_fixture(Suite& s, const std::string& label, const GridField& v) {
    json out;
    for (double eps : {0.5, 0.25}) {
        for (EnvelopeMode mode : {EnvelopeMode::Upper, EnvelopeMode::Lower}) {
            const EnvelopeResult r = envelope(v, eps, mode);
            const std::string tag = label + " " + to_string(mode) + " eps=" + io::fmt(eps);
            const CheckReport opt = check_optimality(r, v);
            const CheckReport wb = check_witness_bound(r, v);
            const CheckReport sc = check_semiconvexity(r, v);
            s.add("optimality " + tag, opt.passed, io::to_json(opt));
            s.add("witness bound " + tag, wb.passed, io::to_json(wb));
            s.add("semiconvexity " + tag, sc.passed, io::to_json(sc));
        }
    }
    for (EnvelopeMode mode : {EnvelopeMode::Upper, EnvelopeMode::Lower}) {
        const CheckReport mc = check_monotone_convergence(v, {1.0, 0.5, 0.25, 0.125}, mode);
        s.add("monotone convergence " + label + " " + to_string(mode), mc.passed, io::to_json(mc));
    }
    return out;
}

void suite_envelopes(Suite& s, std::uint64_t seed) {
    (void)seed;
    const Domain d = Domain::cube(1, 1.0);
    const std::vector<int> res = {9, 9, 9};
    GridField c(d, res, 0.75);
    envelope_fixture(s, "constant", c);
    GridField spike(d, res, 0.0);
    const std::array<int, 3> at = {4, 5, 3};
    spike[spike.flat_of({at.data(), 3})] = 1.0;
    envelope_fixture(s, "spike", spike);

    // stability along xi_j -> xi, eps_j -> 0
    const AnalyticField f = AnalyticField::parse("x1^2 - y1 + 0.5*t", 1);
    const GridField g = sample(f, d, res);
    const std::array<int, 3> ci = {4, 4, 4};
    const std::size_t node = g.flat_of({ci.data(), 3});
    const Point xi = g.point(node);
    std::vector<Point> seq;
    std::vector<double> eps;
    for (int j = 1; j <= 24; ++j) {
        Point p = xi;
        for (int a = 0; a < 3; ++a) p[a] += 0.05 * std::pow(0.7, j) * (a + 1);
        seq.push_back(p);
        eps.push_back(0.5 * std::pow(0.6, j));
    }
    for (EnvelopeMode mode : {EnvelopeMode::Upper, EnvelopeMode::Lower}) {
        const CheckReport st = check_stability(g, node, seq, eps, mode);
        s.add(std::string("stability ") + to_string(mode), st.passed, io::to_json(st));
    }
}

// ---------------------------------------------------------------- structural

void suite_structural(Suite& s, std::uint64_t seed) {
    const Domain box = Domain::cube(1, 1.0);
    StructuralBounds bd;
    SamplePlan plan;
    plan.seed = seed;
    plan.samples = 10000;
    const StructuralReport ok = check_structural(OperatorSpec::cr_invariant(), bd, box, plan);
    long viol = 0;
    for (const auto& c : ok.conditions)
        if (c.name != "Lcond2Cat") viol += c.violations;
    s.add("quadratic example passes", ok.passed && viol == 0, io::to_json(ok));

    OperatorSpec neg = OperatorSpec::cr_invariant();
    neg.beta = -1.0;
    neg.gamma = 0.0;
    const StructuralReport nb = check_structural(neg, bd, box, plan);
    s.add("negative beta branch", nb.beta_branch == "beta<-beta0,gamma<=0" && nb.find("betaStruct")->passed,
          io::to_json(nb));

    OperatorSpec bad = OperatorSpec::cr_invariant();
    bad.alpha = Coefficient::parse("-s", 1);
    const StructuralReport br = check_structural(bad, bd, box, plan);
    const ConditionResult* l1 = br.find("Lcond1_lower");
    s.add("decreasing alpha detected", !br.passed && l1->violations > 0 && l1->witness.s < l1->witness.s2,
          io::to_json(br));
}

// ---------------------------------------------------------------- lemma 3.5 / 3.6

void suite_lemma35(Suite& s, std::uint64_t seed) {
    (void)seed;
    const Domain d(1, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5});
    const std::vector<Point> nodes = interior_points(d, {9, 9, 9});
    const OperatorSpec spec = OperatorSpec::cr_invariant();
    PerturbParams p;
    p.alpha = 0.5;
    p.beta = 2.0;
    p.delta = 0.5;
    p.M = 2.0;
    p.tau = 0.0;
    p.mu0 = 0.05;
    p.mu = 0.01;
    for (const char* src : {"x1", "0.3*x1^2 - 0.2*x1*y1 + 0.1*t", "0.5*y1 + 0.2*t^2 - 0.1*x1*t"}) {
        const AnalyticField psi = AnalyticField::parse(src, 1);
        PerturbParams q = p;
        const double sup = sup_exp_neg(psi, d, {9, 9, 9}, q.beta);
        q.mu0 = std::min(q.mu0, 0.5 / (q.beta * sup));
        q.mu = 0.2 * q.mu0;
        const Lemma35Report up = lemma35_margin(psi, q, spec, nodes, false);
        const Lemma35Report down = lemma35_margin(psi, q, spec, nodes, true);
        s.add(std::string("margin ") + src, up.largest_K0 > 0.0, io::to_json(up));
        s.add(std::string("mirrored margin ") + src, down.largest_K0 > 0.0, io::to_json(down));
    }
}

// ---------------------------------------------------------------- key lemma

void suite_keylemma(Suite& s, std::uint64_t seed) {
    (void)seed;
    const Domain d(1, {-0.5, -0.5, -1.0}, {0.5, 0.5, 1.0});
    const GridField w = sample(AnalyticField::parse("-(x1^2 + y1^2 + t^2)/20", 1), d, {13, 13, 13});
    for (double eps : {0.5, 0.25}) {
        const KeyLemmaReport r =
            key_lemma_certificate(w, eps, OperatorSpec::zero(), ConeSpec::trace(), 1.0, 10.0);
        const bool ok = r.testable >= 100 && std::isfinite(r.minimal_a) && r.fraction_at_minimal >= 0.99 &&
                        r.failures_confined_to_collar;
        s.add("key lemma eps=" + io::fmt(eps), ok, io::to_json(r));
    }
}

}  // namespace

json run_suite(const std::string& name, const SuiteOptions& opt, bool* passed) {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw PreconditionError("unknown suite '" + name + "'");
    json out;
    out["seed"] = opt.seed;
    json suites = json::object();
    bool all = true;
    auto run = [&](const std::string& n, auto&& fn) {
        if (name != n && name != "all") return;
        Suite s;
        fn(s);
        json e;
        e["passed"] = s.passed;
        e["checks"] = s.checks;
        suites[n] = e;
        all = all && s.passed;
    };
    run("core", [&](Suite& s) { suite_core(s, opt.seed); });
    run("calculus", [&](Suite& s) { suite_calculus(s, opt.seed); });
    run("cones", [&](Suite& s) { suite_cones(s, opt); });
    run("envelopes", [&](Suite& s) { suite_envelopes(s, opt.seed); });
    run("structural", [&](Suite& s) { suite_structural(s, opt.seed); });
    run("lemma35", [&](Suite& s) { suite_lemma35(s, opt.seed); });
    run("keylemma", [&](Suite& s) { suite_keylemma(s, opt.seed); });
    out["suite"] = name;
    out["passed"] = all;
    out["suites"] = suites;
    if (passed) *passed = all;
    return out;
}

}  // namespace heisvisc
