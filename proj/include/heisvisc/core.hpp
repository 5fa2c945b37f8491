#pragma once

// Heisenberg group arithmetic, Koranyi gauge geometry and the left-invariant
// first/second order calculus on H^n.
//
// Coordinates of a point are ordered (x_1..x_n, y_1..y_n, t).  The horizontal
// frame is ordered (X_1..X_n, Y_1..Y_n) with
//     X_j = d/dx_j + 2 y_j d/dt,     Y_j = d/dy_j - 2 x_j d/dt.

#include <array>
#include <span>

#include <Eigen/Core>

#include "heisvisc/error.hpp"

namespace heisvisc {

/// Largest supported n.  Small fixed capacities keep hot loops allocation free.
inline constexpr int kMaxN = 4;
inline constexpr int kMaxDim = 2 * kMaxN + 1;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Horizontal vector (length 2n): components along X_1..X_n, Y_1..Y_n.
using HVec = Vec;

/// Not necessarily symmetric 2n x 2n matrix (the Heisenberg Hessian).
using FullMat = Mat;

/// Symmetric matrix, stored canonically symmetrized.
class SymMat {
public:
    SymMat() = default;
    /// Stores (m + m^T) / 2.
    explicit SymMat(const Mat& m);

    static SymMat zero(int dim);
    static SymMat identity(int dim);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Mat& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }
    double trace() const { return m_.trace(); }
    /// Max absolute entry.
    double max_abs() const;

    SymMat operator+(const SymMat& o) const;
    SymMat operator-(const SymMat& o) const;
    SymMat operator*(double c) const;
    SymMat& operator+=(const SymMat& o);

private:
    Mat m_;
};

inline SymMat operator*(double c, const SymMat& m) { return m * c; }

/// Element xi = (x, y, t) of H^n.
class Point {
public:
    Point() = default;
    /// Origin of H^n.
    explicit Point(int n);
    /// From 2n+1 coordinates ordered (x_1..x_n, y_1..y_n, t).
    static Point from_coords(std::span<const double> coords);
    static Point from_xyt(std::span<const double> x, std::span<const double> y, double t);

    int n() const { return n_; }
    int dim() const { return 2 * n_ + 1; }
    double x(int i) const { return c_[i]; }
    double y(int i) const { return c_[n_ + i]; }
    double t() const { return c_[2 * n_]; }
    /// z = (x, y) as a view of length 2n.
    std::span<const double> z() const { return {c_.data(), static_cast<std::size_t>(2 * n_)}; }
    std::span<const double> coords() const { return {c_.data(), static_cast<std::size_t>(dim())}; }
    double operator[](int i) const { return c_[i]; }
    double& operator[](int i) { return c_[i]; }

    bool operator==(const Point& o) const;

private:
    std::array<double, kMaxDim> c_{};
    int n_ = 0;
};

/// Value, Euclidean gradient and Euclidean Hessian of a scalar field at a point.
/// Gradient/Hessian are indexed by (x_1..x_n, y_1..y_n, t).
struct Jet2 {
    double value = 0.0;
    Vec egrad;
    Mat ehess;

    static Jet2 zero(int n);
    int n() const { return (static_cast<int>(egrad.size()) - 1) / 2; }
};

Point group_mul(const Point& a, const Point& b);
Point group_inv(const Point& a);

/// |xi|_H = (|z|^4 + t^2)^(1/4).
double gauge(const Point& a);
/// |xi|_H^4 = |z|^4 + t^2, without the root.
double gauge4(const Point& a);
/// d_H(a, b) = |b^{-1} o a|_H.
double dist(const Point& a, const Point& b);
/// |b^{-1} o a|_H^4.
double dist4(const Point& a, const Point& b);
/// (x, y, t) -> (lambda x, lambda y, lambda^2 t); lambda > 0.
Point dilate(double lambda, const Point& a);
/// True iff dist(center, p) < radius.
bool gauge_ball_contains(const Point& center, double radius, const Point& p);

/// Horizontal gradient (X_1 u..X_n u, Y_1 u..Y_n u) assembled from a Euclidean jet.
HVec horizontal_gradient(const Jet2& j, const Point& at);

/// Heisenberg Hessian with entry (i, j) = V_j V_i u, frame order (X_1..X_n, Y_1..Y_n).
/// Its antisymmetric part is H - H^T = 4 (dT u) J.
FullMat heis_hessian(const Jet2& j, const Point& at);

/// Symmetric part of heis_hessian.
SymMat heis_hessian_sym(const Jet2& j, const Point& at);

/// The symplectic matrix J = [[0, I_n], [-I_n, 0]].
Mat symplectic_J(int n);

/// Coefficient of J in the antisymmetric part of heis_hessian, per unit dT u.
inline constexpr double kCommutatorConstant = 4.0;

}  // namespace heisvisc
