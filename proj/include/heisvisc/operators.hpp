#pragma once

// The quadratic family
//     L(xi, s, p) = alpha p(x)p - gamma Jp(x)Jp - beta |p|^2 I_{2n},
//     F[psi]      = sym. Heisenberg Hessian of psi + L(., psi, grad_H psi),
// the CR invariant operators A[psi] and A^u, and a sampled checker for the
// structural conditions the comparison theory places on L.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heisvisc/core.hpp"
#include "heisvisc/fields.hpp"

namespace heisvisc {

/// alpha, beta or gamma: a constant or a closed-form function of (xi, s).
class Coefficient {
public:
    Coefficient(double c = 0.0) : constant_(c) {}  // NOLINT: implicit from a number is intended
    explicit Coefficient(AnalyticField f);
    /// A number literal becomes a constant; anything else is parsed as a field
    /// over x1..xn, y1..yn, t, s.
    static Coefficient parse(const std::string& src, int n);

    bool is_constant() const { return !field_.has_value(); }
    double constant_value() const { return constant_; }
    const std::optional<AnalyticField>& field() const { return field_; }

    double value(const Point& xi, double s) const;
    double ds(const Point& xi, double s) const;
    Vec dxi(const Point& xi, double s) const;

    std::string to_string() const;

private:
    double constant_ = 0.0;
    std::optional<AnalyticField> field_;
};

struct OperatorSpec {
    Coefficient alpha;
    Coefficient beta;
    Coefficient gamma;
    double m = 2.0;

    static OperatorSpec zero() { return {0.0, 0.0, 0.0, 2.0}; }
    static OperatorSpec quadratic(double alpha, double beta, double gamma, double m = 2.0) {
        return {alpha, beta, gamma, m};
    }
    /// alpha = gamma = 1, beta = 1/2: the operator A[psi].
    static OperatorSpec cr_invariant() { return quadratic(1.0, 0.5, 1.0); }

    bool constant_coefficients() const {
        return alpha.is_constant() && beta.is_constant() && gamma.is_constant();
    }
};

/// Jp = (p_{n+1..2n}, -p_{1..n}).
HVec apply_J(const HVec& p);

SymMat eval_L(const OperatorSpec& spec, const Point& xi, double s, const HVec& p);

/// d L / d p_k for k = 0..2n-1.
std::vector<SymMat> eval_dL_dp(const OperatorSpec& spec, const Point& xi, double s, const HVec& p);

/// d L / d xi_a for a = 0..2n.
std::vector<SymMat> eval_dL_dxi(const OperatorSpec& spec, const Point& xi, double s, const HVec& p);

/// F[psi](xi) from the jet of psi at xi.
SymMat eval_F(const OperatorSpec& spec, const Jet2& j, const Point& xi);

/// A[psi] = F[psi] with alpha = gamma = 1, beta = 1/2.
SymMat eval_A_psi(const Jet2& j, const Point& xi);

/// The CR invariant operator A^u (u > 0), Q = 2n + 2.
SymMat eval_A_u(const Jet2& u, const Point& xi);

/// Bounds R, Lambda, theta_bar, C, m, beta0 entering the structural conditions.
struct StructuralBounds {
    double R = 1.0;
    double Lambda = 1.0;
    double theta_bar = 0.01;
    double C = 8.0;
    double m = 2.0;
    double beta0 = 0.1;
};

/// Seeded sampling plan for the structural checker.
struct SamplePlan {
    std::uint64_t seed = 42;
    int samples = 10000;
    double p_min = 0.05;  // annulus for p
    double p_max = 5.0;
    double tol = 1e-8;    // relative to the per-sample scale
};

struct StructuralWitness {
    std::vector<double> xi;
    double s = 0.0;
    double s2 = 0.0;
    std::vector<double> p;
    double theta = 0.0;
};

struct ConditionResult {
    std::string name;
    bool applicable = true;
    bool passed = true;
    /// Smallest normalized slack seen (eigenvalue of a required-PSD
    /// difference, or slack of a scalar inequality, over the sample scale).
    double margin = 0.0;
    long violations = 0;
    StructuralWitness witness;
    std::string note;
};

struct StructuralReport {
    std::vector<ConditionResult> conditions;
    /// Which alternative of the beta structure holds: "beta>beta0,gamma>=0",
    /// "beta<-beta0,gamma<=0", "constant alpha,beta; gamma=0" or "none".
    std::string beta_branch;
    double lipschitz_estimate = 0.0;
    bool passed = true;

    const ConditionResult* find(const std::string& name) const;
};

/// Samples xi in the box, |s| <= R, p in the annulus, theta in [0, theta_bar]
/// and reports per-condition margins with the witness attaining each.
StructuralReport check_structural(const OperatorSpec& spec, const StructuralBounds& bounds,
                                  const Domain& box, const SamplePlan& plan);

}  // namespace heisvisc
