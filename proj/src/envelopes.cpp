#include "heisvisc/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heisvisc/linalg.hpp"
#include "heisvisc/parallel.hpp"

namespace heisvisc {

const char* to_string(EnvelopeMode m) { return m == EnvelopeMode::Upper ? "upper" : "lower"; }

namespace {

struct Extremes {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
};

Extremes extremes(const GridField& v) {
    Extremes e;
    for (double x : v.values()) {
        e.lo = std::min(e.lo, x);
        e.hi = std::max(e.hi, x);
    }
    return e;
}

// Visits, in increasing flat order, every node eta that can satisfy
// K(xi, eta) <= bound (plus a safety margin of one lattice cell per axis).
template <class Fn>
void for_window(const GridField& g, const Point& xi, double bound, Fn&& fn) {
    const int n = g.n();
    const int d = g.dim();
    const double b = bound * (1.0 + 1e-9) + std::numeric_limits<double>::denorm_min();
    const double rz = std::sqrt(std::sqrt(b));
    const double rt = std::sqrt(b);
    std::array<int, kMaxDim> lo{}, hi{}, idx{};
    for (int a = 0; a < 2 * n; ++a) {
        const double h = g.spacing(a);
        const double l = g.domain().lo[a];
        lo[a] = std::max(0, static_cast<int>(std::floor((xi[a] - rz - l) / h)) - 1);
        hi[a] = std::min(g.res()[a] - 1, static_cast<int>(std::ceil((xi[a] + rz - l) / h)) + 1);
        if (lo[a] > hi[a]) return;
        idx[a] = lo[a];
    }
    const int ta = 2 * n;
    const double ht = g.spacing(ta);
    const double tl = g.domain().lo[ta];
    const int tres = g.res()[ta];
    while (true) {
        double z2 = 0.0, twist = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xe = g.coord(i, idx[i]);
            const double ye = g.coord(n + i, idx[n + i]);
            const double dx = xi.x(i) - xe, dy = xi.y(i) - ye;
            z2 += dx * dx + dy * dy;
            twist += xe * xi.y(i) - ye * xi.x(i);
        }
        if (z2 * z2 <= b) {
            const double c = xi.t() + 2.0 * twist;
            const int t0 = std::max(0, static_cast<int>(std::floor((c - rt - tl) / ht)) - 1);
            const int t1 = std::min(tres - 1, static_cast<int>(std::ceil((c + rt - tl) / ht)) + 1);
            if (t0 <= t1) {
                idx[ta] = t0;
                const std::size_t base = g.flat_of({idx.data(), static_cast<std::size_t>(d)});
                for (int k = t0; k <= t1; ++k) fn(base + static_cast<std::size_t>(k - t0));
            }
        }
        // odometer over the horizontal axes, last horizontal axis fastest
        int a = 2 * n - 1;
        while (a >= 0 && idx[a] == hi[a]) {
            idx[a] = lo[a];
            --a;
        }
        if (a < 0) break;
        ++idx[a];
    }
}

double node_envelope(const GridField& v, const Point& xi, double ref, const Extremes& ex, double eps,
                     EnvelopeMode mode, std::size_t* arg, std::size_t fallback) {
    const bool up = mode == EnvelopeMode::Upper;
    const double bound = eps * (up ? ex.hi - ref : ref - ex.lo);
    double best = up ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    std::size_t best_i = fallback;
    for_window(v, xi, bound, [&](std::size_t j) {
        const double k = dist4(xi, v.point(j));
        const double val = up ? v[j] - k / eps : v[j] + k / eps;
        if (up ? val > best : val < best) {
            best = val;
            best_i = j;
        }
    });
    if (arg) *arg = best_i;
    return best;
}

}  // namespace

EnvelopeResult envelope(const GridField& v, double eps, EnvelopeMode mode) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw PreconditionError("envelope needs eps > 0");
    for (double x : v.values())
        if (!std::isfinite(x)) throw PreconditionError("envelope input must be finite");
    EnvelopeResult r;
    r.out = GridField(v.domain(), v.res());
    r.witness.assign(v.size(), 0);
    r.eps = eps;
    r.mode = mode;
    const Extremes ex = extremes(v);
    parallel_for(v.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            std::size_t w = i;
            r.out[i] = node_envelope(v, v.point(i), v[i], ex, eps, mode, &w, i);
            r.witness[i] = w;
        }
    });
    return r;
}

EnvelopeResult upper_envelope(const GridField& v, double eps) { return envelope(v, eps, EnvelopeMode::Upper); }
EnvelopeResult lower_envelope(const GridField& w, double eps) { return envelope(w, eps, EnvelopeMode::Lower); }

double envelope_at(const GridField& v, const Point& xi, double eps, EnvelopeMode mode, std::size_t* witness) {
    if (!(eps > 0.0)) throw PreconditionError("envelope needs eps > 0");
    if (xi.n() != v.n()) throw DimensionError("point and grid live on different H^n");
    const bool up = mode == EnvelopeMode::Upper;
    double best = up ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double k = dist4(xi, v.point(j));
        const double val = up ? v[j] - k / eps : v[j] + k / eps;
        if (up ? val > best : val < best) {
            best = val;
            best_i = j;
        }
    }
    if (witness) *witness = best_i;
    return best;
}

Mat kernel_hessian(const Point& xi, const Point& eta) {
    const int n = xi.n();
    const int d = xi.dim();
    Vec az(2 * n);
    for (int k = 0; k < 2 * n; ++k) az[k] = xi[k] - eta[k];
    Vec g(d);
    for (int i = 0; i < n; ++i) {
        g[i] = -2.0 * eta.y(i);
        g[n + i] = 2.0 * eta.x(i);
    }
    g[2 * n] = 1.0;
    Mat h = 2.0 * g * g.transpose();
    const double a2 = az.squaredNorm();
    h.topLeftCorner(2 * n, 2 * n) += 4.0 * a2 * Mat::Identity(2 * n, 2 * n) + 8.0 * az * az.transpose();
    return h;
}

CheckReport check_optimality(const EnvelopeResult& r, const GridField& v) {
    CheckReport rep;
    rep.name = "optimality";
    if (!r.out.same_lattice(v)) throw DimensionError("envelope and source grid differ");
    const bool up = r.mode == EnvelopeMode::Upper;
    rep.worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        ++rep.checked;
        const std::size_t w = r.witness[i];
        const double k = dist4(v.point(i), v.point(w));
        const double expect = up ? v[w] - k / r.eps : v[w] + k / r.eps;
        const double gap = up ? r.out[i] - v[i] : v[i] - r.out[i];
        const bool bad = expect != r.out[i] || gap < 0.0;
        if (bad && rep.violations++ == 0) rep.witness_node = i;
        rep.worst = std::min(rep.worst, gap);
    }
    rep.passed = rep.violations == 0;
    return rep;
}

CheckReport check_monotone_convergence(const GridField& v, const std::vector<double>& eps_list,
                                       EnvelopeMode mode) {
    CheckReport rep;
    rep.name = "monotone_convergence";
    if (eps_list.size() < 2) throw PreconditionError("monotone convergence needs at least two eps values");
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1])) {
            rep.passed = false;
            rep.violations = 1;
            rep.note = "eps list is not strictly decreasing at position " + std::to_string(k);
            return rep;
        }
    const bool up = mode == EnvelopeMode::Upper;
    GridField prev;
    double prev_dev = std::numeric_limits<double>::infinity();
    rep.worst = 0.0;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        EnvelopeResult r = envelope(v, eps_list[k], mode);
        double dev = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dev = std::max(dev, std::abs(r.out[i] - v[i]));
        rep.series.push_back(dev);
        if (dev > prev_dev) {
            if (rep.violations++ == 0) rep.note = "deviation grew at eps = " + std::to_string(eps_list[k]);
        }
        if (k > 0) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                ++rep.checked;
                // smaller eps: upper envelope can only drop, lower can only rise
                const double slack = up ? prev[i] - r.out[i] : r.out[i] - prev[i];
                if (slack < 0.0 && rep.violations++ == 0) rep.witness_node = i;
                rep.worst = std::min(rep.worst, slack);
            }
        }
        prev = std::move(r.out);
        prev_dev = dev;
    }
    rep.passed = rep.violations == 0;
    return rep;
}

double semiconvexity_constant(const EnvelopeResult& r, const GridField& v) {
    const Extremes ex = extremes(v);
    const bool up = r.mode == EnvelopeMode::Upper;
    std::vector<double> best(v.size(), 0.0);
    parallel_for(v.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const Point xi = v.point(i);
            const double bound = r.eps * (up ? ex.hi - v[i] : v[i] - ex.lo);
            double c = 0.0;
            for_window(v, xi, bound, [&](std::size_t j) {
                const Point eta = v.point(j);
                // cheap upper bound first: ||H|| <= 12 |a_z|^2 + 2 |g|^2
                double a2 = 0.0, g2 = 1.0;
                for (int k = 0; k < 2 * xi.n(); ++k) {
                    a2 += (xi[k] - eta[k]) * (xi[k] - eta[k]);
                    g2 += 4.0 * eta[k] * eta[k];
                }
                if (12.0 * a2 + 2.0 * g2 <= c) return;
                c = std::max(c, lambda_max(SymMat(kernel_hessian(xi, eta))));
            });
            best[i] = c;
        }
    });
    double c = 0.0;
    for (double x : best) c = std::max(c, x);
    return 1.1 * c;
}

CheckReport check_semiconvexity(const EnvelopeResult& r, const GridField& v) {
    CheckReport rep;
    rep.name = "semiconvexity";
    const double C = semiconvexity_constant(r, v);
    rep.series.push_back(C);
    const double tol = 1e-8 * (1.0 + v.max_abs());
    const bool up = r.mode == EnvelopeMode::Upper;
    const double limit = C / r.eps;
    rep.worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.out.size(); ++i) {
        if (!r.out.is_inner(i, 1)) continue;
        ++rep.checked;
        const Jet2 j = jet2_fd(r.out, i);
        const SymMat h(j.ehess);
        const double slack = up ? lambda_min(h) + limit + tol : limit + tol - lambda_max(h);
        if (slack < 0.0 && rep.violations++ == 0) rep.witness_node = i;
        if (slack < rep.worst) {
            rep.worst = slack;
            if (rep.violations == 0) rep.witness_node = i;
        }
    }
    if (rep.checked == 0) rep.worst = 0.0;
    rep.passed = rep.violations == 0;
    return rep;
}

CheckReport check_witness_bound(const EnvelopeResult& r, const GridField& v) {
    CheckReport rep;
    rep.name = "witness_bound";
    if (!r.out.same_lattice(v)) throw DimensionError("envelope and source grid differ");
    const Extremes ex = extremes(v);
    const bool up = r.mode == EnvelopeMode::Upper;
    rep.worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        ++rep.checked;
        const double k = dist4(v.point(i), v.point(r.witness[i]));
        const double rhs = r.eps * (up ? ex.hi - v[i] : v[i] - ex.lo);
        const double slack = rhs - k + 1e-12 * r.eps * (1.0 + std::abs(ex.hi) + std::abs(ex.lo));
        if (slack < 0.0 && rep.violations++ == 0) rep.witness_node = i;
        rep.worst = std::min(rep.worst, slack);
    }
    rep.passed = rep.violations == 0;
    return rep;
}

CheckReport check_stability(const GridField& v, std::size_t node, const std::vector<Point>& xi_seq,
                            const std::vector<double>& eps_seq, EnvelopeMode mode) {
    CheckReport rep;
    rep.name = "stability";
    if (xi_seq.size() != eps_seq.size() || xi_seq.empty())
        throw PreconditionError("stability check needs matching non-empty sequences");
    if (node >= v.size()) throw PreconditionError("node index out of range");
    const bool up = mode == EnvelopeMode::Upper;
    for (std::size_t j = 0; j < xi_seq.size(); ++j) rep.series.push_back(envelope_at(v, xi_seq[j], eps_seq[j], mode));
    const std::size_t tail = std::max<std::size_t>(1, xi_seq.size() / 4);
    const double tol = 1e-9 * (1.0 + v.max_abs());
    rep.worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = xi_seq.size() - tail; j < xi_seq.size(); ++j) {
        ++rep.checked;
        const double slack = up ? v[node] + tol - rep.series[j] : rep.series[j] - (v[node] - tol);
        if (slack < 0.0 && rep.violations++ == 0) rep.witness_node = j;
        rep.worst = std::min(rep.worst, slack);
    }
    rep.passed = rep.violations == 0;
    return rep;
}

}  // namespace heisvisc
