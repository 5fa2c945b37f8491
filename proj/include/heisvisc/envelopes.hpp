#pragma once

// eps-upper and eps-lower envelopes (sup/inf convolutions with the quartic
// Koranyi kernel K(xi, eta) = |eta^{-1} o xi|_H^4) over all lattice nodes,
// plus checks of their regularization properties.

#include <cstddef>
#include <string>
#include <vector>

#include "heisvisc/fields.hpp"

namespace heisvisc {

enum class EnvelopeMode { Upper, Lower };

const char* to_string(EnvelopeMode m);

struct EnvelopeResult {
    GridField out;
    /// witness[i] is the node attaining the extremum for output node i.
    std::vector<std::size_t> witness;
    double eps = 0.0;
    EnvelopeMode mode = EnvelopeMode::Upper;
};

/// v^eps(xi) = max_eta { v(eta) - K(xi, eta) / eps }; ties go to the smallest node index.
EnvelopeResult upper_envelope(const GridField& v, double eps);
/// w_eps(xi) = min_eta { w(eta) + K(xi, eta) / eps }.
EnvelopeResult lower_envelope(const GridField& w, double eps);
EnvelopeResult envelope(const GridField& v, double eps, EnvelopeMode mode);

/// The envelope at an arbitrary point (not necessarily a node).
double envelope_at(const GridField& v, const Point& xi, double eps, EnvelopeMode mode,
                   std::size_t* witness = nullptr);

/// Euclidean Hessian in xi of K(xi, eta).
Mat kernel_hessian(const Point& xi, const Point& eta);

/// 1.1 x the largest ||kernel_hessian|| over node pairs inside the pruning window.
double semiconvexity_constant(const EnvelopeResult& r, const GridField& v);

/// Outcome of one property check.
struct CheckReport {
    std::string name;
    bool passed = true;
    long checked = 0;
    long violations = 0;
    /// Most adverse value seen (check-specific slack; negative means violated).
    double worst = 0.0;
    std::size_t witness_node = 0;
    std::string note;
    std::vector<double> series;
};

/// eps_list strictly decreasing: the envelopes are nested monotonically and
/// max |v^eps - v| is non-increasing along the list.
CheckReport check_monotone_convergence(const GridField& v, const std::vector<double>& eps_list,
                                       EnvelopeMode mode);

/// Upper: lambda_min(FD Hessian of v^eps) >= -C/eps - tol at every inner node;
/// lower: lambda_max <= C/eps + tol.  C is 1.1 times the largest kernel
/// Hessian norm over node pairs within the pruning window.  The estimated C
/// is reported in `series[0]`.
CheckReport check_semiconvexity(const EnvelopeResult& r, const GridField& v);

/// |xi*^{-1} o xi|^4 <= eps (max v - v(xi)) (upper), eps (w(xi) - min w) (lower).
CheckReport check_witness_bound(const EnvelopeResult& r, const GridField& v);

/// out(xi) == v(witness) -/+ K / eps bit for bit, and out >= v (upper) / out <= v (lower).
CheckReport check_optimality(const EnvelopeResult& r, const GridField& v);

/// For xi_j -> node and eps_j -> 0: the tail of v^{eps_j}(xi_j) stays below
/// v(node) + tol (upper), above v(node) - tol (lower).  tail = last quarter.
CheckReport check_stability(const GridField& v, std::size_t node, const std::vector<Point>& xi_seq,
                            const std::vector<double>& eps_seq, EnvelopeMode mode);

}  // namespace heisvisc
