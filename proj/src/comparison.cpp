#include "heisvisc/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "heisvisc/linalg.hpp"
#include "heisvisc/parallel.hpp"

namespace heisvisc {

void PerturbParams::validate() const {
    if (!(mu0 > 0.0)) throw PreconditionError("mu0 must be positive");
    if (!(mu >= 0.0 && mu < mu0)) throw PreconditionError("mu must lie in [0, mu0)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
    if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
    if (!(K0 >= 0.0)) throw PreconditionError("K0 must be non-negative");
    if (!(M > 0.0)) throw PreconditionError("M must be positive");
    if (!std::isfinite(tau)) throw PreconditionError("tau must be finite");
}

void PerturbParams::validate(double sup_exp) const {
    validate();
    if (mu0 * beta * sup_exp > 0.5)
        throw PreconditionError("mu0 beta sup e^{-beta psi} = " + std::to_string(mu0 * beta * sup_exp) +
                                " exceeds 1/2");
}

double sup_exp_neg(const AnalyticField& psi, const Domain& d, const std::vector<int>& res, double beta) {
    const GridField g = sample(psi, d, res);
    double s = 0.0;
    for (double v : g.values()) s = std::max(s, std::exp(-beta * v));
    return s;
}

namespace {

expr::Expr correction(const AnalyticField& psi, const PerturbParams& p) {
    using namespace expr;
    const int n = psi.n();
    Expr z2 = constant(0.0);
    for (int k = 0; k < 2 * n; ++k) z2 = add(z2, mul(variable(k), variable(k)));
    Expr c = add(exp(mul(constant(p.alpha), z2)), exp(mul(constant(-p.beta), psi.expression())));
    return mul(constant(p.mu), sub(c, constant(p.tau)));
}

double correction_value(const Point& xi, double psi, const PerturbParams& p) {
    double z2 = 0.0;
    for (int k = 0; k < 2 * xi.n(); ++k) z2 += xi[k] * xi[k];
    return p.mu * (std::exp(p.alpha * z2) + std::exp(-p.beta * psi) - p.tau);
}

GridField perturb_grid(const GridField& psi, const PerturbParams& p, double sign) {
    p.validate();
    GridField out = psi;
    for (std::size_t i = 0; i < psi.size(); ++i)
        out[i] = psi[i] + sign * correction_value(psi.point(i), psi[i], p);
    return out;
}

}  // namespace

AnalyticField perturb_up(const AnalyticField& psi, const PerturbParams& p) {
    p.validate();
    return AnalyticField(expr::add(psi.expression(), correction(psi, p)), psi.n());
}

AnalyticField perturb_down(const AnalyticField& psi, const PerturbParams& p) {
    p.validate();
    return AnalyticField(expr::sub(psi.expression(), correction(psi, p)), psi.n());
}

GridField perturb_up(const GridField& psi, const PerturbParams& p) { return perturb_grid(psi, p, 1.0); }
GridField perturb_down(const GridField& psi, const PerturbParams& p) { return perturb_grid(psi, p, -1.0); }

std::vector<Point> interior_points(const Domain& d, const std::vector<int>& res) {
    GridField g(d, res);
    std::vector<Point> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!g.is_boundary(i)) out.push_back(g.point(i));
    return out;
}

Lemma35Report lemma35_margin(const AnalyticField& psi, const PerturbParams& p, const OperatorSpec& spec,
                             const std::vector<Point>& nodes, bool mirrored, double tol, double K0_cap) {
    Lemma35Report rep;
    rep.mirrored = mirrored;
    rep.tol = tol;
    const AnalyticField pert = mirrored ? perturb_down(psi, p) : perturb_up(psi, p);

    std::vector<Point> kept;
    double sup_exp = 0.0;
    for (const Point& xi : nodes) {
        const double v = psi.value(xi);
        double z2 = 0.0;
        for (int k = 0; k < 2 * xi.n(); ++k) z2 += xi[k] * xi[k];
        const double in_set = std::exp(p.alpha * z2) + std::exp(-p.beta * v) - p.tau;
        if (std::abs(v) <= p.M && in_set >= -p.delta) {
            kept.push_back(xi);
            sup_exp = std::max(sup_exp, std::exp(-p.beta * v));
        } else {
            ++rep.excluded;
        }
    }
    if (kept.empty()) throw PreconditionError("no node lies in Omega^{M,delta}");
    p.validate(sup_exp);
    rep.nodes = static_cast<long>(kept.size());

    const int d = 2 * psi.n();
    std::vector<SymMat> D(kept.size()), P(kept.size());
    parallel_for(kept.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const Point& xi = kept[i];
            const Jet2 j = psi.jet(xi);
            const SymMat F = eval_F(spec, j, xi);
            const SymMat Ft = eval_F(spec, pert.jet(xi), xi);
            const double f1 = p.mu * p.beta * std::exp(-p.beta * j.value);
            D[i] = mirrored ? F * (1.0 + f1) - Ft : Ft - F * (1.0 - f1);
            const HVec g = horizontal_gradient(j, xi);
            P[i] = SymMat((1.0 + std::pow(g.norm(), spec.m)) * Mat::Identity(d, d) + g * g.transpose()) * p.mu;
        }
    });

    auto margin_at = [&](double K0, std::size_t* worst) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const double l = lambda_min(D[i] - P[i] * K0);
            if (l < m) {
                m = l;
                if (worst) *worst = i;
            }
        }
        return m;
    };
    std::size_t worst = 0;
    rep.margin = margin_at(p.K0, &worst);
    rep.passed = rep.margin >= -tol;
    // report the worst node's index in the offered list
    {
        std::size_t seen = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (seen < kept.size() && nodes[i] == kept[seen]) {
                if (seen == worst) {
                    rep.worst_node = i;
                    break;
                }
                ++seen;
            }
        }
    }

    if (margin_at(0.0, nullptr) < -tol) {
        rep.largest_K0 = -1.0;
        return rep;
    }
    if (p.mu == 0.0) {
        rep.largest_K0 = K0_cap;
        rep.capped = true;
        return rep;
    }
    double lo = 0.0, hi = 1.0;
    while (margin_at(hi, nullptr) >= -tol) {
        lo = hi;
        hi *= 2.0;
        if (hi > K0_cap) {
            rep.largest_K0 = K0_cap;
            rep.capped = true;
            return rep;
        }
    }
    for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (margin_at(mid, nullptr) >= -tol ? lo : hi) = mid;
    }
    rep.largest_K0 = lo;
    return rep;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

TouchingReport touching_harness(const GridField& w, const GridField& v, const OperatorSpec& spec,
                                const ConeSpec& cone) {
    if (!w.same_lattice(v)) throw DimensionError("w and v live on different lattices");
    TouchingReport rep;
    double sup_diff = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sup_diff = std::max(sup_diff, std::abs(w[i] - v[i]));
    rep.touch_tol = 1e-9 * (1.0 + sup_diff);
    rep.min_gap = std::numeric_limits<double>::infinity();
    rep.boundary_gap = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> touch(w.size(), 0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gap = w[i] - v[i];
        rep.min_gap = std::min(rep.min_gap, gap);
        const bool bnd = w.is_boundary(i);
        if (bnd) rep.boundary_gap = std::min(rep.boundary_gap, gap);
        if (gap <= rep.touch_tol) {
            touch[i] = 1;
            ++rep.touching_count;
            if (!bnd) ++rep.interior_touching_count;
        }
    }
    rep.precondition_ok = rep.min_gap >= -rep.touch_tol;

    UnionFind uf(w.size());
    const int d = w.dim();
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!touch[i]) continue;
        const auto idx = w.index_of(i);
        for (int a = 0; a < d; ++a)
            if (idx[a] + 1 < w.res()[a] && touch[i + w.stride(a)]) uf.unite(i, i + w.stride(a));
    }
    std::vector<long> comp_of(w.size(), -1);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!touch[i]) continue;
        const std::size_t r = uf.find(i);
        if (comp_of[r] < 0) {
            comp_of[r] = static_cast<long>(rep.components.size());
            rep.components.push_back({0, false, i});
        }
        TouchComponent& c = rep.components[comp_of[r]];
        ++c.size;
        if (w.is_boundary(i)) c.touches_boundary = true;
    }
    for (const auto& c : rep.components)
        if (!c.touches_boundary) rep.all_components_touch_boundary = false;

    const bool strict_boundary = rep.boundary_gap > rep.touch_tol;
    const bool consistent = rep.precondition_ok && (!strict_boundary || rep.interior_touching_count == 0);
    rep.verdict = !rep.precondition_ok ? "PRECONDITION_FAILED" : consistent ? "CONSISTENT" : "INCONSISTENT";
    rep.w_class = classify_grid(w, spec, cone, Side::Super);
    rep.v_class = classify_grid(v, spec, cone, Side::Sub);
    return rep;
}

}  // namespace heisvisc
