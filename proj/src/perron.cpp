#include "heisvisc/perron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heisvisc/parallel.hpp"

namespace heisvisc {

GridField usc_envelope(const GridField& g) { return g; }
GridField lsc_envelope(const GridField& g) { return g; }

namespace {

GridField combine(const GridField& a, const GridField& b, bool take_max) {
    if (!a.same_lattice(b)) throw DimensionError("fields live on different lattices");
    GridField out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = take_max ? std::max(a[i], b[i]) : std::min(a[i], b[i]);
    return out;
}

}  // namespace

GridField max_fields(const GridField& a, const GridField& b) { return combine(a, b, true); }
GridField min_fields(const GridField& a, const GridField& b) { return combine(a, b, false); }

GridField bump(const Domain& d, const std::vector<int>& res, double B) {
    GridField g(d, res);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.index_of(i);
        double v = B;
        for (int a = 0; a < g.dim(); ++a) {
            // exact +-1 at both ends of every axis
            const double q = (2.0 * idx[a] - (res[a] - 1)) / (res[a] - 1);
            v *= 1.0 - q * q;
        }
        g[i] = v;
    }
    return g;
}

void Problem::validate() const {
    if (!sub.same_lattice(super)) throw PreconditionError("sub and super live on different lattices");
    if (!(sub.domain() == domain) || sub.res() != res)
        throw PreconditionError("sub/super lattice differs from the problem lattice");
    if (boundary.n() != domain.n) throw PreconditionError("boundary data lives on a different H^n");
    if (!spec.constant_coefficients()) throw PreconditionError("the solver needs constant coefficients");
    for (std::size_t i = 0; i < sub.size(); ++i) {
        if (sub[i] > super[i]) throw PreconditionError("sub exceeds super at node " + std::to_string(i));
        if (sub.is_boundary(i)) {
            const double g = boundary.value(sub.point(i));
            const double tol = 1e-10 * (1.0 + std::abs(g));
            if (std::abs(sub[i] - g) > tol || std::abs(super[i] - g) > tol)
                throw PreconditionError("sub/super disagree with the boundary data at node " + std::to_string(i));
        }
    }
    const double b = spec.beta.constant_value();
    const double c = spec.gamma.constant_value();
    const bool beta_ok = (b > 0.0 && c >= 0.0) || (b < 0.0 && c <= 0.0) || c == 0.0;
    if (!beta_ok) throw PreconditionError("coefficients violate the beta structure");
}

Problem barrier_problem(const Domain& d, const std::vector<int>& res, const OperatorSpec& spec,
                        const ConeSpec& cone, const AnalyticField& boundary, double B) {
    if (!(B >= 0.0)) throw PreconditionError("barrier height must be non-negative");
    Problem p;
    p.domain = d;
    p.res = res;
    p.spec = spec;
    p.cone = cone;
    p.boundary = boundary;
    const GridField g = sample(boundary, d, res);
    const GridField b = bump(d, res, B);
    p.sub = g;
    p.super = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        p.sub[i] = g[i] - b[i];
        p.super[i] = g[i] + b[i];
    }
    return p;
}

double auto_dt(const Problem& p) {
    GridField g(p.domain, p.res);
    double h = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim(); ++a) h = std::min(h, g.spacing(a));
    const int n = p.domain.n;
    const double scale = std::abs(p.spec.alpha.constant_value()) + 2.0 * n * std::abs(p.spec.beta.constant_value()) +
                         std::abs(p.spec.gamma.constant_value());
    return h * h / (8.0 * n * (1.0 + scale));
}

namespace {

// Central-difference evaluation of F_h with constant coefficients; N = n.
template <int N>
struct Stencil {
    static constexpr int D = 2 * N + 1;
    static constexpr int M = 2 * N;
    double alpha, beta, gamma;
    double inv2h[D], invh2[D], inv4hh[D][D];
    std::size_t st[D];

    Stencil(const GridField& g, const OperatorSpec& spec)
        : alpha(spec.alpha.constant_value()), beta(spec.beta.constant_value()),
          gamma(spec.gamma.constant_value()) {
        for (int a = 0; a < D; ++a) {
            const double h = g.spacing(a);
            inv2h[a] = 1.0 / (2.0 * h);
            invh2[a] = 1.0 / (h * h);
            st[a] = g.stride(a);
        }
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) inv4hh[a][b] = 1.0 / (4.0 * g.spacing(a) * g.spacing(b));
    }

    // F (row-major M x M) at inner node i; A holds (2y, -2x) at that node.
    void eval(const double* u, std::size_t i, const double* A, double* f) const {
        double gr[D], H[D][D];
        const double u0 = u[i];
        for (int a = 0; a < D; ++a) {
            const double up = u[i + st[a]], um = u[i - st[a]];
            gr[a] = (up - um) * inv2h[a];
            H[a][a] = (up - 2.0 * u0 + um) * invh2[a];
            for (int b = a + 1; b < D; ++b) {
                const double m = (u[i + st[a] + st[b]] - u[i + st[a] - st[b]] - u[i - st[a] + st[b]] +
                                  u[i - st[a] - st[b]]) *
                                 inv4hh[a][b];
                H[a][b] = m;
                H[b][a] = m;
            }
        }
        constexpr int t = M;
        double p[M], jp[M];
        double p2 = 0.0;
        for (int k = 0; k < M; ++k) {
            p[k] = gr[k] + A[k] * gr[t];
            p2 += p[k] * p[k];
        }
        for (int j = 0; j < N; ++j) {
            jp[j] = p[N + j];
            jp[N + j] = -p[j];
        }
        for (int a = 0; a < M; ++a)
            for (int b = a; b < M; ++b) {
                double v = H[a][b] + A[a] * H[t][b] + A[b] * H[a][t] + A[a] * A[b] * H[t][t];
                v += alpha * p[a] * p[b] - gamma * jp[a] * jp[b];
                if (a == b) v -= beta * p2;
                f[a * M + b] = v;
                f[b * M + a] = v;
            }
    }
};

struct Rho {
    double rho;
    double band;
};

Rho cone_value(const ConeSpec& cone, const double* f, int m2) {
    double fro = 0.0, tr = 0.0;
    for (int k = 0; k < m2 * m2; ++k) fro += f[k] * f[k];
    for (int k = 0; k < m2; ++k) tr += f[k * m2 + k];
    const double band = cone.tol * (1.0 + std::sqrt(fro));
    if (cone.family == ConeFamily::Trace) return {tr, band};
    Mat m(m2, m2);
    for (int a = 0; a < m2; ++a)
        for (int b = 0; b < m2; ++b) m(a, b) = f[a * m2 + b];
    return {defining_value(cone, SymMat(m)), band};
}

template <int N>
SymMat discrete_F_n(const GridField& g, std::size_t node, const OperatorSpec& spec) {
    const Stencil<N> s(g, spec);
    constexpr int M = 2 * N;
    const Point xi = g.point(node);
    double A[M], f[M * M];
    for (int j = 0; j < N; ++j) {
        A[j] = 2.0 * xi.y(j);
        A[N + j] = -2.0 * xi.x(j);
    }
    s.eval(g.values().data(), node, A, f);
    Mat m(M, M);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) m(a, b) = f[a * M + b];
    return SymMat(m);
}

template <int N>
SolveResult solve_n(const Problem& p, const SolveOptions& opt) {
    constexpr int M = 2 * N;
    const GridField& v = p.sub;
    const GridField& w = p.super;
    const bool ascend = opt.start == Start::Ascend;
    const double base_dt = opt.dt > 0.0 ? opt.dt : auto_dt(p);

    std::vector<std::size_t> inner;
    std::vector<double> coef;  // (2y, -2x) per inner node
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!v.is_boundary(i)) {
            inner.push_back(i);
            const Point xi = v.point(i);
            for (int j = 0; j < N; ++j) coef.push_back(2.0 * xi.y(j));
            for (int j = 0; j < N; ++j) coef.push_back(-2.0 * xi.x(j));
        }
    double spread = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) spread = std::max(spread, w[i] - v[i]);
    const double mono_tol = 1e-13 * (1.0 + spread + v.max_abs());

    const Stencil<N> sten(v, p.spec);
    const double* lo = v.values().data();
    const double* hi = w.values().data();

    SolveResult r;
    for (int attempt = 0;; ++attempt) {
        r.dt = base_dt / std::ldexp(1.0, attempt);
        r.halvings = attempt;
        r.residual_history.clear();
        r.converged = false;
        r.monotone = true;
        r.monotone_violations = 0;
        GridField cur = ascend ? v : w;
        GridField next = cur;
        std::vector<double> res_node(inner.size(), 0.0);
        std::vector<std::uint8_t> bad(inner.size(), 0);
        bool restart = false;
        long k = 0;
        for (;; ++k) {
            const double* u = cur.values().data();
            double* out = next.values().data();
            parallel_for(inner.size(), [&](std::size_t b, std::size_t e) {
                // local copies keep the hot loop free of aliasing reloads
                const Stencil<N> s = sten;
                const double dt = r.dt;
                const ConeSpec& cone = p.cone;
                const std::size_t* in = inner.data();
                const double* cf = coef.data();
                double* rn = res_node.data();
                std::uint8_t* bd = bad.data();
                double f[M * M];
                for (std::size_t q = b; q < e; ++q) {
                    const std::size_t i = in[q];
                    s.eval(u, i, cf + q * M, f);
                    const Rho rh = cone_value(cone, f, M);
                    double nv = u[i] + dt * rh.rho;
                    bool active = false;
                    if (nv < lo[i]) {
                        nv = lo[i];
                        active = true;
                    } else if (nv > hi[i]) {
                        nv = hi[i];
                        active = true;
                    }
                    out[i] = nv;
                    rn[q] = active ? 0.0 : std::max(0.0, std::abs(rh.rho) - rh.band);
                    bd[q] = ascend ? nv < u[i] - mono_tol : nv > u[i] + mono_tol;
                }
            });
            double res = 0.0;
            long viol = 0;
            for (std::size_t q = 0; q < inner.size(); ++q) {
                res = std::max(res, res_node[q]);
                viol += bad[q];
            }
            r.residual_history.push_back(res);
            if (res < opt.tol) {
                r.converged = true;
                break;
            }
            if (k >= opt.max_iter) break;
            if (viol > 0) {
                if (attempt < opt.max_halvings) {
                    restart = true;
                    break;
                }
                r.monotone = false;
                r.monotone_violations += viol;
            }
            std::swap(cur, next);
        }
        if (restart) continue;
        r.iterations = k;
        r.final_residual = r.residual_history.back();
        r.u = std::move(cur);
        break;
    }
    return r;
}

template <template <int> class Fn, class... Args>
auto dispatch_n(int n, Args&&... args) {
    switch (n) {
        case 1: return Fn<1>::run(std::forward<Args>(args)...);
        case 2: return Fn<2>::run(std::forward<Args>(args)...);
        case 3: return Fn<3>::run(std::forward<Args>(args)...);
        default: return Fn<4>::run(std::forward<Args>(args)...);
    }
}

template <int N>
struct DiscreteF {
    static SymMat run(const GridField& g, std::size_t node, const OperatorSpec& spec) {
        return discrete_F_n<N>(g, node, spec);
    }
};

template <int N>
struct Solve {
    static SolveResult run(const Problem& p, const SolveOptions& opt) { return solve_n<N>(p, opt); }
};

static_assert(kMaxN == 4, "dispatch_n covers n = 1..4");

}  // namespace

SymMat discrete_F(const GridField& g, std::size_t node, const OperatorSpec& spec) {
    if (!spec.constant_coefficients()) throw PreconditionError("discrete_F needs constant coefficients");
    if (!g.is_inner(node, 1)) throw PreconditionError("discrete_F needs an inner node");
    return dispatch_n<DiscreteF>(g.n(), g, node, spec);
}

SolveResult solve(const Problem& p, const SolveOptions& opt) {
    p.validate();
    if (!(opt.tol > 0.0)) throw PreconditionError("solver tolerance must be positive");
    if (opt.max_iter < 0) throw PreconditionError("max_iter must be non-negative");
    return dispatch_n<Solve>(p.domain.n, p, opt);
}

UniquenessReport uniqueness_gap(const Problem& p, const SolveOptions& opt, double uniq_tol) {
    UniquenessReport rep;
    SolveOptions up = opt, down = opt;
    up.start = Start::Ascend;
    down.start = Start::Descend;
    rep.up = solve(p, up);
    rep.down = solve(p, down);
    double spread = 0.0;
    for (std::size_t i = 0; i < p.sub.size(); ++i) spread = std::max(spread, p.super[i] - p.sub[i]);
    rep.tol = uniq_tol > 0.0 ? uniq_tol : 1e-6 * spread;
    for (std::size_t i = 0; i < p.sub.size(); ++i) rep.gap = std::max(rep.gap, std::abs(rep.up.u[i] - rep.down.u[i]));
    rep.passed = rep.up.converged && rep.down.converged && rep.gap <= rep.tol;
    return rep;
}

}  // namespace heisvisc
