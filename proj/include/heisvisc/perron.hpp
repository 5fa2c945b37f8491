#pragma once

// Perron-style solver for F[psi] in the cone boundary between an ordered
// sub/supersolution pair, lattice max/min combinators and the uniqueness check.

#include <cstddef>
#include <string>
#include <vector>

#include "heisvisc/cones.hpp"
#include "heisvisc/fields.hpp"
#include "heisvisc/operators.hpp"

namespace heisvisc {

/// On a finite lattice every function is continuous, so both envelopes are
/// the identity.  They exist to keep the pipeline total.
GridField usc_envelope(const GridField& g);
GridField lsc_envelope(const GridField& g);

GridField max_fields(const GridField& a, const GridField& b);
GridField min_fields(const GridField& a, const GridField& b);

/// B * prod_a (1 - q_a^2) with q_a the axis coordinate rescaled to [-1, 1];
/// vanishes exactly on the boundary shell.
GridField bump(const Domain& d, const std::vector<int>& res, double B);

struct Problem {
    Domain domain;
    std::vector<int> res;
    OperatorSpec spec;
    ConeSpec cone;
    AnalyticField boundary;
    GridField sub;    // v
    GridField super;  // w

    /// v <= w everywhere, v = w = boundary data on the shell (1e-10), constant
    /// coefficients satisfying the beta structure.  Throws PreconditionError.
    void validate() const;
};

/// v = g - bump, w = g + bump with g the boundary expression sampled on the lattice.
Problem barrier_problem(const Domain& d, const std::vector<int>& res, const OperatorSpec& spec,
                        const ConeSpec& cone, const AnalyticField& boundary, double B);

enum class Start { Ascend, Descend };

struct SolveOptions {
    double dt = 0.0;  // 0: automatic
    double tol = 1e-8;
    long max_iter = 200000;
    Start start = Start::Ascend;
    /// Number of dt halvings allowed when the monotonicity probe fails.
    int max_halvings = 6;
};

struct SolveResult {
    GridField u;
    long iterations = 0;
    std::vector<double> residual_history;  // residual of iterate k, k = 0..iterations
    bool converged = false;
    double final_residual = 0.0;
    double dt = 0.0;
    int halvings = 0;
    /// The iterates were monotone (nondecreasing when ascending,
    /// nonincreasing when descending) for the final dt.
    bool monotone = true;
    long monotone_violations = 0;
};

/// h_min^2 / (8 n (1 + |alpha| + 2n |beta| + |gamma|)).
double auto_dt(const Problem& p);

/// F_h at an inner node, from central differences (same values as
/// eval_F(spec, jet2_fd(g, node), point)).
SymMat discrete_F(const GridField& g, std::size_t node, const OperatorSpec& spec);

/// Clamped explicit iteration psi <- clamp(psi + dt rho(F_h[psi]), v, w).
SolveResult solve(const Problem& p, const SolveOptions& opt = {});

struct UniquenessReport {
    double gap = 0.0;   // max |u_up - u_down|
    double tol = 0.0;
    bool passed = false;
    SolveResult up;
    SolveResult down;
};

/// Runs the ascending and the descending solve; passes iff both converge and
/// gap <= uniq_tol (default 1e-6 ||w - v||_inf when uniq_tol <= 0).
UniquenessReport uniqueness_gap(const Problem& p, const SolveOptions& opt = {}, double uniq_tol = 0.0);

}  // namespace heisvisc
