#pragma once

// Degenerate elliptic cones of symmetric 2n x 2n matrices.  Every shipped
// family is spectral: membership depends on the eigenvalues only.

#include <cstdint>
#include <string>
#include <vector>

#include "heisvisc/core.hpp"
#include "heisvisc/expr.hpp"

namespace heisvisc {

enum class ConeFamily { Trace, PosDef, SigmaK, Spectral };

enum class Membership { Interior, Exterior, Boundary };

const char* to_string(Membership m);
const char* to_string(ConeFamily f);

struct ConeSpec {
    ConeFamily family = ConeFamily::Trace;
    int k = 1;             // SigmaK only
    double tol = 1e-9;     // boundary band is tol * (1 + ||M||_F)
    expr::Expr g;          // Spectral only, over l1..lN (ascending eigenvalues)
    std::string g_source;

    static ConeSpec trace(double tol = 1e-9);
    static ConeSpec posdef(double tol = 1e-9);
    static ConeSpec sigma_k(int k, double tol = 1e-9);
    /// {M : g(lambda(M)) > 0}; not necessarily a cone.
    static ConeSpec spectral(const std::string& g, double tol = 1e-9);

    std::string name() const;
};

/// Scalar rho with rho > 0 inside, rho < 0 outside, non-decreasing under
/// M -> M + B for B >= 0.  Trace: tr M.  PosDef: lambda_min.  SigmaK: the
/// largest t with lambda - t(1..1) in the closed Garding cone.  Spectral: g.
double defining_value(const ConeSpec& c, const SymMat& M);

/// Same, from eigenvalues sorted ascending.
double defining_value_eigs(const ConeSpec& c, const std::vector<double>& lambda);

/// Largest t with lambda - t(1..1) in the closure of Gamma_k.
double garding_shift(const std::vector<double>& lambda, int k);

double boundary_band(const ConeSpec& c, const SymMat& M);

/// Interior / Exterior / Boundary by the sign of defining_value outside the band.
Membership classify(const ConeSpec& c, const SymMat& M);

struct AxiomPlan {
    std::uint64_t seed = 42;
    int samples = 10000;
    int n = 1;
    /// A is accepted only when rho(A) exceeds this times (1 + ||A||_F).
    double interior_margin = 1e-3;
};

struct AxiomResult {
    std::string name;
    long checked = 0;
    long violations = 0;
    bool passed = true;
    // first violating triple, if any
    std::vector<double> witness_A;  // row-major
    std::vector<double> witness_B;
    double witness_c = 0.0;
};

struct AxiomReport {
    std::string cone;
    std::vector<AxiomResult> axioms;  // UCondPos, UCone, UCond*S, UCond*SCat
    long rejected_draws = 0;
    bool passed = true;
    const AxiomResult* find(const std::string& name) const;
};

AxiomReport check_axioms(const ConeSpec& c, const AxiomPlan& plan);

}  // namespace heisvisc
