#include "heisvisc/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heisvisc/parallel.hpp"

namespace heisvisc {

const char* to_string(Tag t) {
    switch (t) {
        case Tag::SubOK: return "SubOK";
        case Tag::SuperOK: return "SuperOK";
        case Tag::OnBoundary: return "OnBoundary";
        case Tag::SubViolated: return "SubViolated";
        case Tag::SuperViolated: return "SuperViolated";
        case Tag::Untestable: return "Untestable";
    }
    return "?";
}

const char* to_string(Side s) {
    switch (s) {
        case Side::Sub: return "sub";
        case Side::Super: return "super";
        case Side::Both: return "both";
    }
    return "?";
}

Tag tag_for(Membership m, Side side) {
    if (m == Membership::Boundary) return Tag::OnBoundary;
    switch (side) {
        case Side::Sub: return m == Membership::Interior ? Tag::SubOK : Tag::SubViolated;
        case Side::Super: return m == Membership::Exterior ? Tag::SuperOK : Tag::SuperViolated;
        case Side::Both: return m == Membership::Interior ? Tag::SuperViolated : Tag::SubViolated;
    }
    return Tag::Untestable;
}

Classification classify_grid(const GridField& g, const OperatorSpec& spec, const ConeSpec& cone, Side side) {
    Classification c;
    c.tags.assign(g.size(), Tag::Untestable);
    c.margin.assign(g.size(), 0.0);
    parallel_for(g.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            if (g.is_boundary(i) || g.kink(i)) continue;
            try {
                const Point xi = g.point(i);
                const SymMat F = eval_F(spec, jet2_fd(g, i), xi);
                const double rho = defining_value(cone, F);
                const double band = boundary_band(cone, F);
                const Membership m = rho > band ? Membership::Interior
                                     : rho < -band ? Membership::Exterior
                                                   : Membership::Boundary;
                c.tags[i] = tag_for(m, side);
                c.margin[i] = rho;
            } catch (const EvalError&) {
                c.tags[i] = Tag::Untestable;
            }
        }
    });
    c.worst_sub = std::numeric_limits<double>::infinity();
    c.worst_super = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Tag t = c.tags[i];
        ++c.counts[static_cast<int>(t)];
        if (t == Tag::Untestable) continue;
        if (side != Side::Super && c.margin[i] < c.worst_sub) {
            c.worst_sub = c.margin[i];
            c.worst_sub_node = i;
        }
        if (side != Side::Sub && c.margin[i] > c.worst_super) {
            c.worst_super = c.margin[i];
            c.worst_super_node = i;
        }
    }
    if (!std::isfinite(c.worst_sub)) c.worst_sub = 0.0;
    if (!std::isfinite(c.worst_super)) c.worst_super = 0.0;
    return c;
}

namespace {

bool in_collar(const GridField& g, std::size_t i) {
    const auto idx = g.index_of(i);
    for (int a = 0; a < g.dim(); ++a)
        if (idx[a] == 1 || idx[a] == g.res()[a] - 2) return true;
    return false;
}

struct NodeData {
    SymMat F;
    double shift = 0.0;  // (|xi - xi_*| + K/eps) |grad_H|^m
};

}  // namespace

KeyLemmaReport key_lemma_certificate(const GridField& w, double eps, const OperatorSpec& spec,
                                     const ConeSpec& cone, double a, double M, const KeyLemmaOptions& opt) {
    if (!(a >= 0.0)) throw PreconditionError("certificate needs a >= 0");
    if (!(M > 0.0)) throw PreconditionError("certificate needs M > 0");
    if (opt.side == Side::Both) throw PreconditionError("certificate side must be sub or super");
    const bool super = opt.side == Side::Super;
    const EnvelopeResult env = envelope(w, eps, super ? EnvelopeMode::Lower : EnvelopeMode::Upper);
    const GridField& we = env.out;

    std::vector<std::size_t> nodes;
    KeyLemmaReport rep;
    rep.a = a;
    rep.eps = eps;
    for (std::size_t i = 0; i < we.size(); ++i) {
        if (!we.is_inner(i, 1)) continue;
        // the supersolution test at xi_* needs xi_* inside the domain
        if (w.is_boundary(env.witness[i])) {
            ++rep.skipped_boundary_witness;
            continue;
        }
        if (std::abs(we[i]) + std::abs(w[env.witness[i]]) > M) {
            ++rep.skipped_M;
            continue;
        }
        nodes.push_back(i);
    }
    std::vector<NodeData> data(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const std::size_t i = nodes[k];
            const Point xi = we.point(i);
            const Point xs = we.point(env.witness[i]);
            const Jet2 j = jet2_fd(we, i);
            data[k].F = eval_F(spec, j, xi);
            double d = 0.0;
            if (opt.metric == DistanceMetric::Euclidean) {
                for (int c = 0; c < xi.dim(); ++c) d += (xi[c] - xs[c]) * (xi[c] - xs[c]);
                d = std::sqrt(d);
            } else {
                d = dist(xi, xs);
            }
            const double gn = horizontal_gradient(j, xi).norm();
            data[k].shift = (d + dist4(xi, xs) / eps) * std::pow(gn, spec.m);
        }
    });

    const int dim = 2 * w.n();
    auto passes = [&](const NodeData& nd, double aa) {
        const SymMat S = nd.F + SymMat(Mat::Identity(dim, dim)) * ((super ? -aa : aa) * nd.shift);
        const Membership m = classify(cone, S);
        return super ? m != Membership::Interior : m != Membership::Exterior;
    };
    // Per-node smallest certifying a, by doubling then bisection.
    std::vector<double> need(nodes.size(), 0.0);
    parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const NodeData& nd = data[k];
            if (passes(nd, 0.0)) continue;
            if (nd.shift <= 0.0) {
                need[k] = std::numeric_limits<double>::infinity();
                continue;
            }
            double hi = 1.0;
            while (!passes(nd, hi) && hi < opt.a_cap) hi *= 2.0;
            if (!passes(nd, hi)) {
                need[k] = std::numeric_limits<double>::infinity();
                continue;
            }
            double lo = 0.0;
            for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (passes(nd, mid) ? hi : lo) = mid;
            }
            need[k] = hi;
        }
    });

    rep.testable = static_cast<long>(nodes.size());
    rep.minimal_a = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (passes(data[k], a))
            ++rep.passing;
        else if (!in_collar(we, nodes[k]))
            ++rep.failing_interior;
        if (!in_collar(we, nodes[k])) rep.minimal_a = std::max(rep.minimal_a, need[k]);
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (std::isfinite(rep.minimal_a) && passes(data[k], rep.minimal_a)) {
            ++rep.passing_at_minimal;
        } else {
            rep.failing_nodes.push_back(nodes[k]);
            if (!in_collar(we, nodes[k])) rep.failures_confined_to_collar = false;
        }
    }
    if (rep.testable > 0) {
        rep.fraction = static_cast<double>(rep.passing) / rep.testable;
        rep.fraction_at_minimal = static_cast<double>(rep.passing_at_minimal) / rep.testable;
    }
    return rep;
}

}  // namespace heisvisc
