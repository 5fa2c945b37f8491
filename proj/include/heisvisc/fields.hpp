#pragma once

// Scalar fields over box domains in R^{2n+1}: closed-form fields with exact
// symbolic jets, and lattice-sampled fields with central finite-difference jets.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heisvisc/core.hpp"
#include "heisvisc/expr.hpp"

namespace heisvisc {

/// Variable table for fields on H^n: x1..xn, y1..yn, t (indices 0..2n), plus
/// s (index 2n+1) when with_s.  For n = 1 the aliases x, y are accepted.
expr::VarTable field_variables(int n, bool with_s = false);

/// Closed-form scalar field with exact first and second symbolic derivatives.
/// Optionally depends on an extra scalar s (used by coefficient functions).
class AnalyticField {
public:
    AnalyticField() = default;
    AnalyticField(expr::Expr e, int n, bool with_s = false);

    static AnalyticField parse(std::string_view src, int n, bool with_s = false);
    static AnalyticField constant(double c, int n, bool with_s = false);

    int n() const { return n_; }
    bool has_s() const { return with_s_; }
    const expr::Expr& expression() const { return expr_; }
    std::string to_string() const;

    double value(const Point& at, double s = 0.0, expr::EvalTrace* trace = nullptr) const;
    /// Exact jet in the spatial variables.
    Jet2 jet(const Point& at, double s = 0.0) const;
    /// d/ds.
    double ds(const Point& at, double s) const;
    /// Spatial gradient (length 2n+1).
    Vec dxi(const Point& at, double s) const;

    bool depends_on_s() const;
    bool depends_on_space() const;

private:
    struct Derivatives {
        std::vector<expr::Expr> first;                // per variable
        std::vector<std::vector<expr::Expr>> second;  // [i][j], j <= i, spatial only
    };

    std::array<double, kMaxDim + 1> pack(const Point& at, double s) const;

    expr::Expr expr_;
    int n_ = 0;
    bool with_s_ = false;
    std::shared_ptr<const Derivatives> d_;
};

/// Exact jet of an analytic field.
Jet2 jet2_analytic(const AnalyticField& f, const Point& at);

/// Axis-aligned box [lo_a, hi_a] in R^{2n+1}.
struct Domain {
    int n = 1;
    std::vector<double> lo;
    std::vector<double> hi;

    Domain() = default;
    Domain(int n, std::vector<double> lo, std::vector<double> hi);
    /// Cube [-half, half]^{2n+1}.
    static Domain cube(int n, double half);
    int dim() const { return 2 * n + 1; }
    bool operator==(const Domain& o) const = default;
};

/// Scalar samples on an axis-aligned lattice.  Node flat indices are
/// row-major with axis 0 (x_1) slowest and the t axis fastest; the boundary
/// is the outermost lattice shell.
class GridField {
public:
    GridField() = default;
    GridField(Domain d, std::vector<int> res, double fill = 0.0);

    int n() const { return domain_.n; }
    int dim() const { return domain_.dim(); }
    const Domain& domain() const { return domain_; }
    const std::vector<int>& res() const { return res_; }
    std::size_t size() const { return values_.size(); }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double spacing(int axis) const;
    double coord(int axis, int index) const;
    std::size_t stride(int axis) const { return strides_[axis]; }
    std::array<int, kMaxDim> index_of(std::size_t flat) const;
    std::size_t flat_of(std::span<const int> idx) const;
    Point point(std::size_t flat) const;
    bool is_boundary(std::size_t flat) const;
    /// All indices within [margin, res-1-margin].
    bool is_inner(std::size_t flat, int margin) const;

    /// Nodes whose FD stencil straddles a min/max kink of the sampled expression.
    bool kink(std::size_t flat) const { return !kink_.empty() && kink_[flat] != 0; }
    void set_kink_mask(std::vector<std::uint8_t> mask);

    bool same_lattice(const GridField& o) const;
    double max_abs() const;

private:
    Domain domain_;
    std::vector<int> res_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
    std::vector<std::uint8_t> kink_;
};

/// Pointwise evaluation at every lattice node; res >= 3 per axis.  Throws
/// EvalError naming the first failing node.
GridField sample(const AnalyticField& f, const Domain& d, const std::vector<int>& res);

/// Central second-order finite-difference jet at an inner node with step
/// stride * spacing per axis.  Throws PreconditionError when the stencil
/// leaves the lattice and EvalError on kink-marked nodes.
Jet2 jet2_fd(const GridField& g, std::size_t node, int stride = 1);

/// Interior nodes whose gauge distance to the boundary shell exceeds gamma.
std::vector<std::size_t> gamma_interior(const GridField& g, double gamma);

/// Exponential substitution (alpha / |alpha|) exp(alpha w), alpha != 0.
GridField exp_transform(const GridField& w, double alpha);

/// The same substitution on a closed-form field.
AnalyticField exp_transform(const AnalyticField& w, double alpha);

}  // namespace heisvisc
