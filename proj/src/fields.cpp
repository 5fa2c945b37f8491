#include "heisvisc/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "heisvisc/parallel.hpp"

namespace heisvisc {

expr::VarTable field_variables(int n, bool with_s) {
    expr::VarTable v;
    for (int i = 0; i < n; ++i) {
        v.add("x" + std::to_string(i + 1), i);
        v.add("y" + std::to_string(i + 1), n + i);
    }
    if (n == 1) {
        v.add("x", 0);
        v.add("y", 1);
    }
    v.add("t", 2 * n);
    if (with_s) v.add("s", 2 * n + 1);
    return v;
}

// ---------------------------------------------------------------- AnalyticField

AnalyticField::AnalyticField(expr::Expr e, int n, bool with_s)
    : expr_(std::move(e)), n_(n), with_s_(with_s) {
    if (n < 1 || n > kMaxN) throw PreconditionError("unsupported n for a field");
    const int nv = 2 * n + 1 + (with_s ? 1 : 0);
    const int ns = 2 * n + 1;
    if (expr::max_variable(expr_) >= nv)
        throw PreconditionError("expression references a variable outside H^" +
                                std::to_string(n));
    auto d = std::make_shared<Derivatives>();
    d->first.reserve(nv);
    for (int v = 0; v < nv; ++v) d->first.push_back(expr::differentiate(expr_, v));
    d->second.resize(ns);
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j <= i; ++j) d->second[i].push_back(expr::differentiate(d->first[i], j));
    d_ = std::move(d);
}

AnalyticField AnalyticField::parse(std::string_view src, int n, bool with_s) {
    return AnalyticField(expr::parse(src, field_variables(n, with_s)), n, with_s);
}

AnalyticField AnalyticField::constant(double c, int n, bool with_s) {
    return AnalyticField(expr::constant(c), n, with_s);
}

std::string AnalyticField::to_string() const {
    return expr::to_string(expr_, field_variables(n_, with_s_));
}

std::array<double, kMaxDim + 1> AnalyticField::pack(const Point& at, double s) const {
    if (at.n() != n_) throw DimensionError("field and point live on different H^n");
    std::array<double, kMaxDim + 1> v{};
    for (int i = 0; i < at.dim(); ++i) v[i] = at[i];
    v[at.dim()] = s;
    return v;
}

double AnalyticField::value(const Point& at, double s, expr::EvalTrace* trace) const {
    const auto v = pack(at, s);
    return expr::evaluate(expr_, {v.data(), static_cast<std::size_t>(at.dim() + 1)}, trace);
}

Jet2 AnalyticField::jet(const Point& at, double s) const {
    const auto v = pack(at, s);
    const std::span<const double> vars{v.data(), static_cast<std::size_t>(at.dim() + 1)};
    const int ns = at.dim();
    Jet2 j;
    j.value = expr::evaluate(expr_, vars);
    j.egrad.resize(ns);
    j.ehess.resize(ns, ns);
    for (int i = 0; i < ns; ++i) j.egrad(i) = expr::evaluate(d_->first[i], vars);
    for (int i = 0; i < ns; ++i)
        for (int k = 0; k <= i; ++k) {
            const double h = expr::evaluate(d_->second[i][k], vars);
            j.ehess(i, k) = h;
            j.ehess(k, i) = h;
        }
    return j;
}

double AnalyticField::ds(const Point& at, double s) const {
    if (!with_s_) return 0.0;
    const auto v = pack(at, s);
    return expr::evaluate(d_->first[2 * n_ + 1], {v.data(), static_cast<std::size_t>(at.dim() + 1)});
}

Vec AnalyticField::dxi(const Point& at, double s) const {
    const auto v = pack(at, s);
    const std::span<const double> vars{v.data(), static_cast<std::size_t>(at.dim() + 1)};
    Vec g(at.dim());
    for (int i = 0; i < at.dim(); ++i) g(i) = expr::evaluate(d_->first[i], vars);
    return g;
}

bool AnalyticField::depends_on_s() const { return with_s_ && expr::depends_on(expr_, 2 * n_ + 1); }

bool AnalyticField::depends_on_space() const {
    for (int i = 0; i < 2 * n_ + 1; ++i)
        if (expr::depends_on(expr_, i)) return true;
    return false;
}

Jet2 jet2_analytic(const AnalyticField& f, const Point& at) { return f.jet(at); }

// ---------------------------------------------------------------- Domain

Domain::Domain(int n_, std::vector<double> lo_, std::vector<double> hi_)
    : n(n_), lo(std::move(lo_)), hi(std::move(hi_)) {
    if (n < 1 || n > kMaxN) throw PreconditionError("unsupported n for a domain");
    if (static_cast<int>(lo.size()) != dim() || static_cast<int>(hi.size()) != dim())
        throw DimensionError("domain needs 2n+1 bounds per side");
    for (int a = 0; a < dim(); ++a)
        if (!(lo[a] < hi[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a]))
            throw PreconditionError("domain needs finite lo < hi on every axis");
}

Domain Domain::cube(int n, double half) {
    return Domain(n, std::vector<double>(2 * n + 1, -half), std::vector<double>(2 * n + 1, half));
}

// ---------------------------------------------------------------- GridField

GridField::GridField(Domain d, std::vector<int> res, double fill)
    : domain_(std::move(d)), res_(std::move(res)) {
    if (static_cast<int>(res_.size()) != domain_.dim())
        throw DimensionError("resolution needs one entry per axis");
    std::size_t total = 1;
    for (int r : res_) {
        if (r < 3) throw PreconditionError("resolution must be at least 3 per axis");
        total *= static_cast<std::size_t>(r);
    }
    strides_.assign(res_.size(), 1);
    for (int a = domain_.dim() - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * res_[a + 1];
    values_.assign(total, fill);
}

double GridField::spacing(int axis) const {
    return (domain_.hi[axis] - domain_.lo[axis]) / (res_[axis] - 1);
}

double GridField::coord(int axis, int index) const {
    if (index == res_[axis] - 1) return domain_.hi[axis];
    return domain_.lo[axis] + index * spacing(axis);
}

std::array<int, kMaxDim> GridField::index_of(std::size_t flat) const {
    std::array<int, kMaxDim> idx{};
    for (int a = 0; a < dim(); ++a) {
        idx[a] = static_cast<int>(flat / strides_[a]);
        flat %= strides_[a];
    }
    return idx;
}

std::size_t GridField::flat_of(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int a = 0; a < dim(); ++a) f += static_cast<std::size_t>(idx[a]) * strides_[a];
    return f;
}

Point GridField::point(std::size_t flat) const {
    const auto idx = index_of(flat);
    std::array<double, kMaxDim> c{};
    for (int a = 0; a < dim(); ++a) c[a] = coord(a, idx[a]);
    return Point::from_coords({c.data(), static_cast<std::size_t>(dim())});
}

bool GridField::is_boundary(std::size_t flat) const { return !is_inner(flat, 1); }

bool GridField::is_inner(std::size_t flat, int margin) const {
    const auto idx = index_of(flat);
    for (int a = 0; a < dim(); ++a)
        if (idx[a] < margin || idx[a] > res_[a] - 1 - margin) return false;
    return true;
}

void GridField::set_kink_mask(std::vector<std::uint8_t> mask) {
    if (!mask.empty() && mask.size() != values_.size())
        throw DimensionError("kink mask size does not match the grid");
    kink_ = std::move(mask);
}

bool GridField::same_lattice(const GridField& o) const {
    return domain_ == o.domain_ && res_ == o.res_;
}

double GridField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------- sampling

GridField sample(const AnalyticField& f, const Domain& d, const std::vector<int>& res) {
    if (f.n() != d.n) throw DimensionError("field and domain live on different H^n");
    GridField g(d, res);
    const bool kinks = expr::has_kinks(f.expression());
    std::vector<std::uint64_t> sig(kinks ? g.size() : 0);
    std::mutex err_mu;
    std::size_t first_bad = std::numeric_limits<std::size_t>::max();
    std::string first_msg;
    parallel_for(g.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            try {
                expr::EvalTrace trace;
                g[i] = f.value(g.point(i), 0.0, kinks ? &trace : nullptr);
                if (kinks) sig[i] = trace.signature;
            } catch (const EvalError& ex) {
                std::lock_guard lock(err_mu);
                if (i < first_bad) {
                    first_bad = i;
                    first_msg = ex.what();
                }
                return;
            }
        }
    });
    if (first_bad != std::numeric_limits<std::size_t>::max()) {
        const auto idx = g.index_of(first_bad);
        std::string where;
        for (int a = 0; a < g.dim(); ++a) where += (a ? "," : "") + std::to_string(idx[a]);
        throw EvalError("evaluation failed at node (" + where + "): " + first_msg);
    }
    if (kinks) {
        // A node is marked when any node of its FD stencil took different branches.
        std::vector<std::uint8_t> mask(g.size(), 0);
        const int dim = g.dim();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto idx = g.index_of(i);
            auto differs = [&](int a, int da, int b, int db) {
                auto j = idx;
                j[a] += da;
                if (b >= 0) j[b] += db;
                for (int ax = 0; ax < dim; ++ax)
                    if (j[ax] < 0 || j[ax] >= g.res()[ax]) return false;
                return sig[g.flat_of({j.data(), static_cast<std::size_t>(dim)})] != sig[i];
            };
            bool bad = false;
            for (int a = 0; a < dim && !bad; ++a) {
                bad = differs(a, 1, -1, 0) || differs(a, -1, -1, 0);
                for (int b = a + 1; b < dim && !bad; ++b)
                    bad = differs(a, 1, b, 1) || differs(a, 1, b, -1) || differs(a, -1, b, 1) ||
                          differs(a, -1, b, -1);
            }
            mask[i] = bad ? 1 : 0;
        }
        g.set_kink_mask(std::move(mask));
    }
    return g;
}

// ---------------------------------------------------------------- FD jets

Jet2 jet2_fd(const GridField& g, std::size_t node, int stride) {
    if (stride < 1) throw PreconditionError("FD stride must be positive");
    if (node >= g.size()) throw PreconditionError("node index out of range");
    if (!g.is_inner(node, stride))
        throw PreconditionError("FD stencil leaves the lattice at node " + std::to_string(node));
    if (g.kink(node)) throw EvalError("FD stencil straddles a kink at node " + std::to_string(node));
    const int d = g.dim();
    Jet2 j;
    j.value = g[node];
    j.egrad.resize(d);
    j.ehess.resize(d, d);
    const double u0 = g[node];
    for (int a = 0; a < d; ++a) {
        const std::size_t sa = g.stride(a) * stride;
        const double ha = g.spacing(a) * stride;
        const double up = g[node + sa];
        const double um = g[node - sa];
        j.egrad(a) = (up - um) / (2.0 * ha);
        j.ehess(a, a) = (up - 2.0 * u0 + um) / (ha * ha);
        for (int b = a + 1; b < d; ++b) {
            const std::size_t sb = g.stride(b) * stride;
            const double hb = g.spacing(b) * stride;
            const double m = (g[node + sa + sb] - g[node + sa - sb] - g[node - sa + sb] +
                              g[node - sa - sb]) /
                             (4.0 * ha * hb);
            j.ehess(a, b) = m;
            j.ehess(b, a) = m;
        }
    }
    return j;
}

// ---------------------------------------------------------------- Omega_gamma

std::vector<std::size_t> gamma_interior(const GridField& g, double gamma) {
    if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
    std::vector<std::size_t> boundary;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.is_boundary(i)) boundary.push_back(i);
    std::vector<Point> bpts;
    bpts.reserve(boundary.size());
    for (std::size_t b : boundary) bpts.push_back(g.point(b));
    const double gamma4 = gamma * gamma * gamma * gamma;
    std::vector<std::uint8_t> keep(g.size(), 0);
    parallel_for(g.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            if (g.is_boundary(i)) continue;
            const Point p = g.point(i);
            bool inside = true;
            for (const Point& q : bpts)
                if (dist4(p, q) <= gamma4) {
                    inside = false;
                    break;
                }
            keep[i] = inside ? 1 : 0;
        }
    });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

// ---------------------------------------------------------------- transforms

GridField exp_transform(const GridField& w, double alpha) {
    if (alpha == 0.0) throw PreconditionError("exp_transform needs alpha != 0");
    GridField out = w;
    const double sign = alpha > 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sign * std::exp(alpha * w[i]);
    return out;
}

AnalyticField exp_transform(const AnalyticField& w, double alpha) {
    if (alpha == 0.0) throw PreconditionError("exp_transform needs alpha != 0");
    const double sign = alpha > 0 ? 1.0 : -1.0;
    return AnalyticField(
        expr::mul(expr::constant(sign), expr::exp(expr::mul(expr::constant(alpha), w.expression()))),
        w.n(), w.has_s());
}

}  // namespace heisvisc
