#include "heisvisc/core.hpp"

#include <cmath>
#include <string>

namespace heisvisc {

namespace {

void require_same_n(const Point& a, const Point& b) {
    if (a.n() != b.n())
        throw DimensionError("points live on H^" + std::to_string(a.n()) + " and H^" +
                             std::to_string(b.n()));
}

void require_jet_matches(const Jet2& j, const Point& at) {
    if (j.egrad.size() != at.dim() || j.ehess.rows() != at.dim() || j.ehess.cols() != at.dim())
        throw DimensionError("jet dimension does not match the evaluation point");
}

}  // namespace

// ---------------------------------------------------------------- SymMat

SymMat::SymMat(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionError("SymMat needs a square matrix");
    m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::zero(int dim) {
    SymMat s;
    s.m_ = Mat::Zero(dim, dim);
    return s;
}

SymMat SymMat::identity(int dim) {
    SymMat s;
    s.m_ = Mat::Identity(dim, dim);
    return s;
}

double SymMat::max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

SymMat SymMat::operator+(const SymMat& o) const {
    SymMat s;
    s.m_ = m_ + o.m_;
    return s;
}

SymMat SymMat::operator-(const SymMat& o) const {
    SymMat s;
    s.m_ = m_ - o.m_;
    return s;
}

SymMat SymMat::operator*(double c) const {
    SymMat s;
    s.m_ = c * m_;
    return s;
}

SymMat& SymMat::operator+=(const SymMat& o) {
    m_ += o.m_;
    return *this;
}

// ---------------------------------------------------------------- Point

Point::Point(int n) : n_(n) {
    if (n < 1 || n > kMaxN)
        throw PreconditionError("n must lie in [1, " + std::to_string(kMaxN) + "], got " +
                                std::to_string(n));
}

Point Point::from_coords(std::span<const double> coords) {
    if (coords.size() % 2 != 1) throw DimensionError("a point needs 2n+1 coordinates");
    Point p(static_cast<int>(coords.size() / 2));
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (!std::isfinite(coords[i])) throw PreconditionError("point coordinates must be finite");
        p.c_[i] = coords[i];
    }
    return p;
}

Point Point::from_xyt(std::span<const double> x, std::span<const double> y, double t) {
    if (x.size() != y.size()) throw DimensionError("x and y must have the same length");
    std::array<double, kMaxDim> c{};
    const std::size_t n = x.size();
    if (n == 0 || n > static_cast<std::size_t>(kMaxN)) throw DimensionError("unsupported n");
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = x[i];
        c[n + i] = y[i];
    }
    c[2 * n] = t;
    return from_coords({c.data(), 2 * n + 1});
}

bool Point::operator==(const Point& o) const {
    if (n_ != o.n_) return false;
    for (int i = 0; i < dim(); ++i)
        if (c_[i] != o.c_[i]) return false;
    return true;
}

Jet2 Jet2::zero(int n) {
    Jet2 j;
    j.egrad = Vec::Zero(2 * n + 1);
    j.ehess = Mat::Zero(2 * n + 1, 2 * n + 1);
    return j;
}

// ---------------------------------------------------------------- group

Point group_mul(const Point& a, const Point& b) {
    require_same_n(a, b);
    const int n = a.n();
    Point r(n);
    double twist = 0.0;
    for (int i = 0; i < n; ++i) {
        r[i] = a.x(i) + b.x(i);
        r[n + i] = a.y(i) + b.y(i);
        twist += a.y(i) * b.x(i) - a.x(i) * b.y(i);
    }
    r[2 * n] = a.t() + b.t() + 2.0 * twist;
    return r;
}

Point group_inv(const Point& a) {
    Point r(a.n());
    for (int i = 0; i < a.dim(); ++i) r[i] = -a[i];
    return r;
}

double gauge4(const Point& a) {
    double z2 = 0.0;
    for (double c : a.z()) z2 += c * c;
    return z2 * z2 + a.t() * a.t();
}

double gauge(const Point& a) { return std::sqrt(std::sqrt(gauge4(a))); }

double dist4(const Point& a, const Point& b) { return gauge4(group_mul(group_inv(b), a)); }

double dist(const Point& a, const Point& b) { return gauge(group_mul(group_inv(b), a)); }

Point dilate(double lambda, const Point& a) {
    if (!(lambda > 0.0)) throw PreconditionError("dilation factor must be positive");
    Point r(a.n());
    for (int i = 0; i < 2 * a.n(); ++i) r[i] = lambda * a[i];
    r[2 * a.n()] = lambda * lambda * a.t();
    return r;
}

bool gauge_ball_contains(const Point& center, double radius, const Point& p) {
    if (!(radius > 0.0)) throw PreconditionError("ball radius must be positive");
    return dist(center, p) < radius;
}

// ---------------------------------------------------------------- calculus

Mat symplectic_J(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        J(i, n + i) = 1.0;
        J(n + i, i) = -1.0;
    }
    return J;
}

namespace {

// t-coefficient of the frame: V_i = d/de_i + a_i d/dt, a = 2 J z = 2 (y, -x).
Vec frame_t_coefficients(const Point& at) {
    const int n = at.n();
    Vec a(2 * n);
    for (int i = 0; i < n; ++i) {
        a(i) = 2.0 * at.y(i);
        a(n + i) = -2.0 * at.x(i);
    }
    return a;
}

}  // namespace

HVec horizontal_gradient(const Jet2& j, const Point& at) {
    require_jet_matches(j, at);
    const int n = at.n();
    const Vec a = frame_t_coefficients(at);
    const double ut = j.egrad(2 * n);
    HVec g(2 * n);
    for (int i = 0; i < 2 * n; ++i) g(i) = j.egrad(i) + a(i) * ut;
    return g;
}

FullMat heis_hessian(const Jet2& j, const Point& at) {
    require_jet_matches(j, at);
    const int n = at.n();
    const int m = 2 * n;
    const Vec a = frame_t_coefficients(at);
    const double ut = j.egrad(m);
    const double utt = j.ehess(m, m);
    FullMat h(m, m);
    // V_j V_i u = u_ij + (d_j a_i) u_t + a_i u_tj + a_j u_it + a_i a_j u_tt,
    // where d_j a_i is 2 for (X_i, Y_i) and -2 for (Y_i, X_i).
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            h(i, k) = j.ehess(i, k) + a(i) * j.ehess(m, k) + a(k) * j.ehess(i, m) +
                      a(i) * a(k) * utt;
    for (int i = 0; i < n; ++i) {
        h(i, n + i) += 2.0 * ut;
        h(n + i, i) -= 2.0 * ut;
    }
    return h;
}

SymMat heis_hessian_sym(const Jet2& j, const Point& at) { return SymMat(heis_hessian(j, at)); }

}  // namespace heisvisc
