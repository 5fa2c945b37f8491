#pragma once

// Grid-point viscosity classification of F[psi] against a cone, and the
// regularization-error certificate for inf/sup-convolved supersolutions and
// subsolutions.

#include <cstddef>
#include <string>
#include <vector>

#include "heisvisc/cones.hpp"
#include "heisvisc/envelopes.hpp"
#include "heisvisc/fields.hpp"
#include "heisvisc/operators.hpp"

namespace heisvisc {

enum class Tag { SubOK, SuperOK, OnBoundary, SubViolated, SuperViolated, Untestable };
enum class Side { Sub, Super, Both };

const char* to_string(Tag t);
const char* to_string(Side s);

/// Tag for a cone membership under the requested side.  With Side::Both an
/// interior value breaks the supersolution half and an exterior value the
/// subsolution half.
Tag tag_for(Membership m, Side side);

struct Classification {
    std::vector<Tag> tags;       // per node
    std::vector<double> margin;  // defining value at testable nodes, 0 elsewhere
    long counts[6] = {0, 0, 0, 0, 0, 0};
    /// Smallest defining value among sub-tested nodes and largest among
    /// super-tested nodes, with the nodes attaining them.
    double worst_sub = 0.0;
    double worst_super = 0.0;
    std::size_t worst_sub_node = 0;
    std::size_t worst_super_node = 0;

    long count(Tag t) const { return counts[static_cast<int>(t)]; }
    /// No *Violated tags.
    bool ok() const { return count(Tag::SubViolated) == 0 && count(Tag::SuperViolated) == 0; }
};

/// Boundary nodes and kink-marked nodes are Untestable.
Classification classify_grid(const GridField& g, const OperatorSpec& spec, const ConeSpec& cone, Side side);

enum class DistanceMetric { Euclidean, Gauge };

struct KeyLemmaOptions {
    DistanceMetric metric = DistanceMetric::Euclidean;
    /// Which statement: supersolution w (inf-convolution, shift subtracted)
    /// or subsolution v (sup-convolution, shift added).
    Side side = Side::Super;
    double a_cap = 1e12;
};

struct KeyLemmaReport {
    double a = 0.0;
    double eps = 0.0;
    long testable = 0;
    long passing = 0;           // at the given a
    long failing_interior = 0;  // failures outside the one-cell collar, at the given a
    double fraction = 0.0;      // passing / testable
    /// Smallest a certifying every testable node off the collar (infinity if none).
    double minimal_a = 0.0;
    /// At minimal_a over all testable nodes (collar included).
    long passing_at_minimal = 0;
    double fraction_at_minimal = 0.0;
    bool failures_confined_to_collar = true;
    std::vector<std::size_t> failing_nodes;  // at minimal_a
    long skipped_M = 0;  // nodes with |w_eps| + |w(xi_*)| > M
    long skipped_boundary_witness = 0;  // nodes whose xi_* is a boundary node
};

/// Certificate for F[w_eps] -/+ a (|xi - xi_*| + K / eps) |grad_H w_eps|^m I.
KeyLemmaReport key_lemma_certificate(const GridField& w, double eps, const OperatorSpec& spec,
                                     const ConeSpec& cone, double a, double M,
                                     const KeyLemmaOptions& opt = {});

}  // namespace heisvisc
