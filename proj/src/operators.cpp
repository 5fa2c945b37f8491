#include "heisvisc/operators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "heisvisc/linalg.hpp"
#include "heisvisc/parallel.hpp"
#include "heisvisc/rng.hpp"

namespace heisvisc {

Coefficient::Coefficient(AnalyticField f) {
    if (!f.has_s()) throw PreconditionError("coefficient fields must be declared over (xi, s)");
    double c = 0.0;
    if (expr::is_const(f.expression(), &c)) {
        constant_ = c;
    } else {
        field_ = std::move(f);
    }
}

Coefficient Coefficient::parse(const std::string& src, int n) {
    double c = 0.0;
    const char* b = src.data();
    const char* e = src.data() + src.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    auto [ptr, ec] = std::from_chars(b, e, c);
    if (ec == std::errc() && ptr == e) return Coefficient(c);
    return Coefficient(AnalyticField::parse(src, n, true));
}

double Coefficient::value(const Point& xi, double s) const {
    return field_ ? field_->value(xi, s) : constant_;
}

double Coefficient::ds(const Point& xi, double s) const {
    return field_ ? field_->ds(xi, s) : 0.0;
}

Vec Coefficient::dxi(const Point& xi, double s) const {
    if (field_) return field_->dxi(xi, s);
    return Vec::Zero(xi.dim());
}

std::string Coefficient::to_string() const {
    if (field_) return field_->to_string();
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, constant_);
    (void)ec;
    return std::string(buf, p);
}

HVec apply_J(const HVec& p) {
    const int n = static_cast<int>(p.size()) / 2;
    HVec q(2 * n);
    for (int i = 0; i < n; ++i) {
        q[i] = p[n + i];
        q[n + i] = -p[i];
    }
    return q;
}

namespace {

void check_point(const Point& xi, const HVec& p) {
    if (p.size() != 2 * xi.n()) throw DimensionError("horizontal vector length does not match 2n");
}

Mat outer(const HVec& a, const HVec& b) { return a * b.transpose(); }

SymMat combine(double a, double g, double b, const HVec& p) {
    const int d = static_cast<int>(p.size());
    const HVec jp = apply_J(p);
    Mat m = a * outer(p, p) - g * outer(jp, jp) - b * p.squaredNorm() * Mat::Identity(d, d);
    return SymMat(m);
}

}  // namespace

SymMat eval_L(const OperatorSpec& spec, const Point& xi, double s, const HVec& p) {
    check_point(xi, p);
    return combine(spec.alpha.value(xi, s), spec.gamma.value(xi, s), spec.beta.value(xi, s), p);
}

std::vector<SymMat> eval_dL_dp(const OperatorSpec& spec, const Point& xi, double s, const HVec& p) {
    check_point(xi, p);
    const int d = static_cast<int>(p.size());
    const double a = spec.alpha.value(xi, s);
    const double b = spec.beta.value(xi, s);
    const double g = spec.gamma.value(xi, s);
    const HVec jp = apply_J(p);
    std::vector<SymMat> out;
    out.reserve(d);
    for (int k = 0; k < d; ++k) {
        HVec e = HVec::Zero(d);
        e[k] = 1.0;
        const HVec je = apply_J(e);
        Mat m = a * (outer(e, p) + outer(p, e)) - g * (outer(je, jp) + outer(jp, je)) -
                2.0 * b * p[k] * Mat::Identity(d, d);
        out.emplace_back(m);
    }
    return out;
}

std::vector<SymMat> eval_dL_dxi(const OperatorSpec& spec, const Point& xi, double s, const HVec& p) {
    check_point(xi, p);
    const Vec da = spec.alpha.dxi(xi, s);
    const Vec db = spec.beta.dxi(xi, s);
    const Vec dg = spec.gamma.dxi(xi, s);
    std::vector<SymMat> out;
    out.reserve(xi.dim());
    for (int k = 0; k < xi.dim(); ++k) out.push_back(combine(da[k], dg[k], db[k], p));
    return out;
}

SymMat eval_F(const OperatorSpec& spec, const Jet2& j, const Point& xi) {
    if (j.n() != xi.n()) throw DimensionError("jet and point dimensions differ");
    return heis_hessian_sym(j, xi) + eval_L(spec, xi, j.value, horizontal_gradient(j, xi));
}

SymMat eval_A_psi(const Jet2& j, const Point& xi) { return eval_F(OperatorSpec::cr_invariant(), j, xi); }

SymMat eval_A_u(const Jet2& u, const Point& xi) {
    if (u.n() != xi.n()) throw DimensionError("jet and point dimensions differ");
    if (!(u.value > 0.0)) throw PreconditionError("A^u needs u > 0");
    const double Q = 2.0 * xi.n() + 2.0;
    const double q2 = Q - 2.0;
    const double c_hess = -2.0 / q2 * std::pow(u.value, -(Q + 2.0) / q2);
    const double w = std::pow(u.value, -2.0 * Q / q2) / (q2 * q2);
    const HVec p = horizontal_gradient(u, xi);
    const HVec jp = apply_J(p);
    const int d = static_cast<int>(p.size());
    SymMat lower(2.0 * Q * w * outer(p, p) - 4.0 * w * outer(jp, jp) -
                 2.0 * w * p.squaredNorm() * Mat::Identity(d, d));
    return heis_hessian_sym(u, xi) * c_hess + lower;
}

const ConditionResult* StructuralReport::find(const std::string& name) const {
    for (const auto& c : conditions)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

// Frobenius norm of a matrix-valued gradient (the collection of partials).
double tensor_norm(const std::vector<SymMat>& parts) {
    double s = 0.0;
    for (const auto& m : parts) s += m.mat().squaredNorm();
    return std::sqrt(s);
}

struct Sample {
    Point xi;
    double s = 0.0;
    double s2 = 0.0;
    HVec p;
    double theta = 0.0;
};

Sample draw(const Domain& box, const StructuralBounds& bd, const SamplePlan& plan, std::size_t i) {
    CounterRng rng(plan.seed, i);
    Sample out;
    out.xi = Point(box.n);
    for (int a = 0; a < box.dim(); ++a) out.xi[a] = rng.uniform(box.lo[a], box.hi[a]);
    const double s1 = rng.uniform(-bd.R, bd.R);
    const double s2 = rng.uniform(-bd.R, bd.R);
    out.s = std::min(s1, s2);
    out.s2 = std::max(s1, s2);
    HVec dir(2 * box.n);
    do {
        for (int k = 0; k < dir.size(); ++k) dir[k] = rng.normal();
    } while (dir.norm() < 1e-12);
    // log-uniform radius: both small and large |p| matter
    const double r = plan.p_min * std::pow(plan.p_max / plan.p_min, rng.uniform());
    out.p = dir / dir.norm() * r;
    out.theta = rng.uniform(0.0, bd.theta_bar);
    return out;
}

StructuralWitness to_witness(const Sample& s, double theta) {
    StructuralWitness w;
    w.xi.assign(s.xi.coords().begin(), s.xi.coords().end());
    w.s = s.s;
    w.s2 = s.s2;
    w.p.assign(s.p.data(), s.p.data() + s.p.size());
    w.theta = theta;
    return w;
}

enum Cond { kL0xi, kL0p, kL1lo, kL1hi, kMono, kL2, kL2Cat, kCount };

const char* const kNames[kCount] = {"Lcond0_xi", "Lcond0_p", "Lcond1_lower", "Lcond1_upper",
                                    "LMonotone", "Lcond2",   "Lcond2Cat"};

struct PerSample {
    std::array<double, kCount> margin{};
    std::array<double, kCount> theta{};
    double beta_min = 0.0, beta_max = 0.0, gamma_min = 0.0, gamma_max = 0.0;
    double lip = 0.0;
};

PerSample evaluate_sample(const OperatorSpec& spec, const StructuralBounds& bd, const Sample& smp) {
    PerSample r;
    const int d = static_cast<int>(smp.p.size());
    const Mat I = Mat::Identity(d, d);
    const double pn = smp.p.norm();
    const double pm = std::pow(pn, bd.m);
    const Mat pp = outer(smp.p, smp.p);

    const SymMat L = eval_L(spec, smp.xi, smp.s, smp.p);
    const SymMat L2 = eval_L(spec, smp.xi, smp.s2, smp.p);
    const auto dp = eval_dL_dp(spec, smp.xi, smp.s, smp.p);
    const auto dx = eval_dL_dxi(spec, smp.xi, smp.s, smp.p);
    const double gp = tensor_norm(dp);
    const double gx = tensor_norm(dx);

    r.margin[kL0xi] = (bd.C * pm - gx) / (1.0 + bd.C * pm + gx);
    r.margin[kL0p] = (bd.C * pn - gp) / (1.0 + bd.C * pn + gp);

    const double ds = smp.s2 - smp.s;
    const SymMat diff = L2 - L;
    const double dscale = 1.0 + diff.max_abs() + bd.C * ds * pm;
    r.margin[kL1lo] = lambda_min(diff) / dscale;
    r.margin[kL1hi] = lambda_min(SymMat(bd.C * ds * pm * I) - diff) / dscale;

    // L(s') - L(s) >= 0 along an infinitesimal s step as well
    const double a_s = spec.alpha.ds(smp.xi, smp.s);
    const double b_s = spec.beta.ds(smp.xi, smp.s);
    const double g_s = spec.gamma.ds(smp.xi, smp.s);
    const SymMat dLds = combine(a_s, g_s, b_s, smp.p);
    r.margin[kMono] = std::min(r.margin[kL1lo], lambda_min(dLds) / (1.0 + dLds.max_abs()));

    Mat pgrad = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k) pgrad += smp.p[k] * dp[k].mat();
    const Mat base = pgrad - L.mat();
    const double scale2 = 1.0 + base.cwiseAbs().maxCoeff() + bd.C * pp.cwiseAbs().maxCoeff() +
                          pm / bd.C + bd.theta_bar * (1.0 + bd.Lambda * gp);
    // Both differences are affine in theta, so the extremes sit at the ends of [0, theta_bar].
    r.margin[kL2] = std::numeric_limits<double>::infinity();
    r.margin[kL2Cat] = std::numeric_limits<double>::infinity();
    for (double th : {0.0, smp.theta, bd.theta_bar}) {
        const Mat lhs = base + (th * bd.Lambda * gp - th) * I;
        const double m2 = lambda_min(SymMat(bd.C * pp - pm / bd.C * I - lhs)) / scale2;
        if (m2 < r.margin[kL2]) {
            r.margin[kL2] = m2;
            r.theta[kL2] = th;
        }
        const Mat lhs_c = base - (th * bd.Lambda * gp - th) * I;
        const double m2c = lambda_min(SymMat(lhs_c + bd.C * pp - pm / bd.C * I)) / scale2;
        if (m2c < r.margin[kL2Cat]) {
            r.margin[kL2Cat] = m2c;
            r.theta[kL2Cat] = th;
        }
    }

    const double b1 = spec.beta.value(smp.xi, smp.s), b2 = spec.beta.value(smp.xi, smp.s2);
    const double g1 = spec.gamma.value(smp.xi, smp.s), g2 = spec.gamma.value(smp.xi, smp.s2);
    r.beta_min = std::min(b1, b2);
    r.beta_max = std::max(b1, b2);
    r.gamma_min = std::min(g1, g2);
    r.gamma_max = std::max(g1, g2);

    // coefficient Lipschitz quotient in (xi, s)
    for (const Coefficient* c : {&spec.alpha, &spec.beta, &spec.gamma}) {
        const double q = std::hypot(c->dxi(smp.xi, smp.s).norm(), c->ds(smp.xi, smp.s));
        r.lip = std::max(r.lip, q);
    }
    return r;
}

}  // namespace

StructuralReport check_structural(const OperatorSpec& spec, const StructuralBounds& bounds,
                                  const Domain& box, const SamplePlan& plan) {
    if (!(bounds.theta_bar > 0.0 && bounds.C > 0.0 && bounds.beta0 > 0.0 && bounds.R > 0.0))
        throw PreconditionError("structural bounds need theta_bar, C, beta0, R > 0");
    if (plan.samples < 1) throw PreconditionError("structural check needs at least one sample");
    if (!(plan.p_min > 0.0 && plan.p_max >= plan.p_min))
        throw PreconditionError("p annulus must satisfy 0 < p_min <= p_max");

    const std::size_t N = static_cast<std::size_t>(plan.samples);
    std::vector<Sample> samples(N);
    std::vector<PerSample> results(N);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            samples[i] = draw(box, bounds, plan, i);
            results[i] = evaluate_sample(spec, bounds, samples[i]);
        }
    });

    StructuralReport rep;
    for (int c = 0; c < kCount; ++c) {
        ConditionResult cr;
        cr.name = kNames[c];
        cr.margin = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double m = results[i].margin[c];
            if (m < -plan.tol) ++cr.violations;
            if (m < cr.margin) {
                cr.margin = m;
                arg = i;
            }
        }
        cr.passed = cr.violations == 0;
        cr.witness = to_witness(samples[arg], results[arg].theta[c]);
        rep.conditions.push_back(std::move(cr));
    }

    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    double gmin = bmin, gmax = -bmin;
    for (const auto& r : results) {
        bmin = std::min(bmin, r.beta_min);
        bmax = std::max(bmax, r.beta_max);
        gmin = std::min(gmin, r.gamma_min);
        gmax = std::max(gmax, r.gamma_max);
        rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, r.lip);
    }
    ConditionResult bs;
    bs.name = "betaStruct";
    bs.witness = to_witness(samples[0], 0.0);
    if (bmin > bounds.beta0 && gmin >= 0.0) {
        rep.beta_branch = "beta>beta0,gamma>=0";
        bs.margin = std::min(bmin - bounds.beta0, gmin);
    } else if (bmax < -bounds.beta0 && gmax <= 0.0) {
        rep.beta_branch = "beta<-beta0,gamma<=0";
        bs.margin = std::min(-bounds.beta0 - bmax, -gmax);
    } else if (spec.alpha.is_constant() && spec.beta.is_constant() && spec.gamma.is_constant() &&
               spec.gamma.constant_value() == 0.0) {
        rep.beta_branch = "constant alpha,beta; gamma=0";
        bs.margin = 0.0;
    } else {
        rep.beta_branch = "none";
        bs.margin = -1.0;
        bs.violations = 1;
        bs.passed = false;
        bs.note = "beta in [" + std::to_string(bmin) + ", " + std::to_string(bmax) + "], gamma in [" +
                  std::to_string(gmin) + ", " + std::to_string(gmax) + "]";
    }
    rep.conditions.push_back(bs);

    auto ok = [&](const char* name) { return rep.find(name)->passed; };
    // The two forms of the second condition are alternatives; one suffices.
    rep.passed = ok("Lcond0_xi") && ok("Lcond0_p") && ok("Lcond1_lower") && ok("Lcond1_upper") &&
                 ok("LMonotone") && ok("betaStruct") && (ok("Lcond2") || ok("Lcond2Cat"));
    return rep;
}

}  // namespace heisvisc
