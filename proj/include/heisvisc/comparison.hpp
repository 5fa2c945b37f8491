#pragma once

// Perturbations psi +/- mu (e^{alpha |z|^2} + e^{-beta psi} - tau) with a
// numerical check of the matrix inequalities they satisfy, and a harness
// testing the propagation of touching points on concrete grid pairs.

#include <cstddef>
#include <string>
#include <vector>

#include "heisvisc/cones.hpp"
#include "heisvisc/fields.hpp"
#include "heisvisc/operators.hpp"
#include "heisvisc/viscosity.hpp"

namespace heisvisc {

struct PerturbParams {
    double mu = 0.0;
    double mu0 = 0.05;
    double alpha = 0.5;
    double beta = 2.0;
    double delta = 0.5;
    double K0 = 0.0;
    double tau = 0.0;
    double M = 1.0;

    /// Range checks that do not depend on psi: 0 <= mu < mu0, alpha, beta,
    /// delta, M > 0, alpha < 1, delta < 1, K0 >= 0.
    void validate() const;
    /// Also mu0 beta sup e^{-beta psi} <= 1/2, with the sup given.
    void validate(double sup_exp_neg_beta_psi) const;
};

/// sup over the lattice nodes of e^{-beta psi}.
double sup_exp_neg(const AnalyticField& psi, const Domain& d, const std::vector<int>& res, double beta);

/// psi + mu (e^{alpha |z|^2} + e^{-beta psi} - tau), built symbolically.
AnalyticField perturb_up(const AnalyticField& psi, const PerturbParams& p);
/// psi - mu (...).
AnalyticField perturb_down(const AnalyticField& psi, const PerturbParams& p);
GridField perturb_up(const GridField& psi, const PerturbParams& p);
GridField perturb_down(const GridField& psi, const PerturbParams& p);

struct Lemma35Report {
    bool mirrored = false;
    long nodes = 0;       // in Omega^{M,delta}
    long excluded = 0;    // offered nodes outside it
    /// min over nodes of lambda_min(...) at the given K0.
    double margin = 0.0;
    std::size_t worst_node = 0;
    bool passed = false;  // margin >= -tol at the given K0
    /// Largest K0 passing, capped at K0_cap (then capped = true); negative if
    /// none passes even at K0 = 0.
    double largest_K0 = 0.0;
    bool capped = false;
    double tol = 1e-8;
};

/// F[psi~] - (1 - mu beta e^{-beta psi}) F[psi] - mu K0 [(1 + |p|^m) I + p (x) p] >= 0
/// (mirrored: (1 + mu beta e^{-beta psi}) F[psi] - mu K0 [...] - F[psi^] >= 0)
/// at the nodes of Omega^{M,delta}, with exact jets.
Lemma35Report lemma35_margin(const AnalyticField& psi, const PerturbParams& p, const OperatorSpec& spec,
                             const std::vector<Point>& nodes, bool mirrored = false, double tol = 1e-8,
                             double K0_cap = 1e12);

/// Lattice nodes of d at resolution res not on the boundary shell.
std::vector<Point> interior_points(const Domain& d, const std::vector<int>& res);

struct TouchComponent {
    std::size_t size = 0;
    bool touches_boundary = false;
    std::size_t first_node = 0;
};

struct TouchingReport {
    bool precondition_ok = true;  // w >= v - touch_tol everywhere
    double min_gap = 0.0;         // min (w - v) over all nodes
    double boundary_gap = 0.0;    // min (w - v) over the boundary shell
    double touch_tol = 0.0;
    long touching_count = 0;           // all nodes with w - v <= touch_tol
    long interior_touching_count = 0;
    std::vector<TouchComponent> components;
    bool all_components_touch_boundary = true;
    /// CONSISTENT iff precondition_ok and (boundary_gap > touch_tol implies
    /// no interior touching).
    std::string verdict;
    Classification w_class;  // super side
    Classification v_class;  // sub side
};

TouchingReport touching_harness(const GridField& w, const GridField& v, const OperatorSpec& spec,
                                const ConeSpec& cone);

}  // namespace heisvisc
