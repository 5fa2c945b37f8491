#include <doctest.h>

#include <cmath>
#include <vector>

#include "heisvisc/envelopes.hpp"
#include "oracles.hpp"

using namespace heisvisc;

namespace {

GridField random_grid(CounterRng& rng, const Domain& d, const std::vector<int>& res, double amp) {
    GridField g(d, res);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(-amp, amp);
    return g;
}

// K(xi, eta) from the matrix model of the group.
double kernel(const Point& xi, const Point& eta) {
    return std::pow(oracle::gauge(oracle::mul(oracle::inv(eta), xi)), 4);
}

}  // namespace

TEST_CASE("pruned envelope equals brute force") {
    CounterRng rng(41, 1);
    const Domain d1(1, {-0.5, -0.5, -1.0}, {0.5, 0.5, 1.0});
    for (double eps : {2.0, 0.5, 0.05}) {
        for (EnvelopeMode mode : {EnvelopeMode::Upper, EnvelopeMode::Lower}) {
            const GridField v = random_grid(rng, d1, {7, 6, 9}, 1.0);
            const EnvelopeResult r = envelope(v, eps, mode);
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::size_t w = 0;
                const double b = envelope_at(v, v.point(i), eps, mode, &w);
                CHECK(r.out[i] == b);
                CHECK(r.witness[i] == w);
            }
        }
    }
    const Domain d2 = Domain::cube(2, 0.5);
    const GridField v2 = random_grid(rng, d2, {4, 4, 4, 4, 5}, 1.0);
    const EnvelopeResult r2 = upper_envelope(v2, 0.3);
    for (std::size_t i = 0; i < v2.size(); i += 7) CHECK(r2.out[i] == envelope_at(v2, v2.point(i), 0.3, EnvelopeMode::Upper));
}

TEST_CASE("envelope value uses the group kernel") {
    CounterRng rng(41, 2);
    const Domain d(1, {-0.5, -0.5, -1.0}, {0.5, 0.5, 1.0});
    const GridField v = random_grid(rng, d, {5, 5, 5}, 1.0);
    const EnvelopeResult r = lower_envelope(v, 0.5);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t w = r.witness[i];
        CHECK(r.out[i] == doctest::Approx(v[w] + kernel(v.point(i), v.point(w)) / 0.5).epsilon(1e-12));
        CHECK(r.out[i] <= v[i]);
        for (std::size_t j = 0; j < v.size(); ++j)
            CHECK(r.out[i] <= v[j] + kernel(v.point(i), v.point(j)) / 0.5 + 1e-12);
    }
}

TEST_CASE("constant fields are fixed") {
    const Domain d = Domain::cube(1, 1.0);
    const GridField c(d, {5, 5, 5}, 0.25);
    for (EnvelopeMode mode : {EnvelopeMode::Upper, EnvelopeMode::Lower}) {
        const EnvelopeResult r = envelope(c, 0.5, mode);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(r.out[i] == 0.25);
            CHECK(r.witness[i] == i);
        }
    }
}

TEST_CASE("invalid envelope input") {
    const GridField c(Domain::cube(1, 1.0), {3, 3, 3}, 0.0);
    CHECK_THROWS_AS(upper_envelope(c, 0.0), PreconditionError);
    CHECK_THROWS_AS(upper_envelope(c, -1.0), PreconditionError);
    GridField bad = c;
    bad[4] = std::nan("");
    CHECK_THROWS_AS(upper_envelope(bad, 1.0), PreconditionError);
}

TEST_CASE("kernel Hessian matches finite differences") {
    CounterRng rng(41, 3);
    for (int it = 0; it < 50; ++it) {
        const int n = 1 + it % 2;
        const Point xi = oracle::random_point(rng, n, -1, 1), eta = oracle::random_point(rng, n, -1, 1);
        const Mat H = kernel_hessian(xi, eta);
        const double h = 1e-4;
        for (int a = 0; a < xi.dim(); ++a)
            for (int b = 0; b < xi.dim(); ++b) {
                Point pp = xi, pm = xi, mp = xi, mm = xi;
                pp[a] += h, pp[b] += h;
                pm[a] += h, pm[b] -= h;
                mp[a] -= h, mp[b] += h;
                mm[a] -= h, mm[b] -= h;
                const double fd = (kernel(pp, eta) - kernel(pm, eta) - kernel(mp, eta) + kernel(mm, eta)) / (4 * h * h);
                CHECK(H(a, b) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
    }
}

TEST_CASE("regularization properties on random fields") {
    CounterRng rng(41, 4);
    const Domain d(1, {-0.5, -0.5, -1.0}, {0.5, 0.5, 1.0});
    const GridField v = random_grid(rng, d, {7, 7, 7}, 0.5);
    for (EnvelopeMode mode : {EnvelopeMode::Upper, EnvelopeMode::Lower}) {
        const EnvelopeResult r = envelope(v, 0.25, mode);
        CHECK(check_optimality(r, v).passed);
        CHECK(check_witness_bound(r, v).passed);
        CHECK(check_semiconvexity(r, v).passed);
        const CheckReport mc = check_monotone_convergence(v, {1.0, 0.5, 0.25, 0.1}, mode);
        CHECK(mc.passed);
        for (std::size_t k = 1; k < mc.series.size(); ++k) CHECK(mc.series[k] <= mc.series[k - 1]);
    }
}

TEST_CASE("checks detect tampering") {
    CounterRng rng(41, 5);
    const Domain d(1, {-0.5, -0.5, -1.0}, {0.5, 0.5, 1.0});
    const GridField v = random_grid(rng, d, {5, 5, 5}, 0.5);
    EnvelopeResult r = upper_envelope(v, 0.5);
    r.out[17] += 1e-9;
    const CheckReport o = check_optimality(r, v);
    CHECK_FALSE(o.passed);
    CHECK(o.witness_node == 17u);
    const CheckReport m = check_monotone_convergence(v, {0.5, 1.0}, EnvelopeMode::Upper);
    CHECK_FALSE(m.passed);
    CHECK_FALSE(m.note.empty());
}

TEST_CASE("limsup stability at a node") {
    const Domain d = Domain::cube(1, 1.0);
    const GridField g = sample(AnalyticField::parse("x^2 - y + 0.5*t", 1), d, {9, 9, 9});
    const std::vector<int> c = {4, 4, 4};
    const std::size_t node = g.flat_of(c);
    std::vector<Point> seq;
    std::vector<double> eps;
    for (int j = 1; j <= 16; ++j) {
        Point p = g.point(node);
        p[0] += 0.1 * std::pow(0.6, j);
        seq.push_back(p);
        eps.push_back(std::pow(0.5, j));
    }
    CHECK(check_stability(g, node, seq, eps, EnvelopeMode::Upper).passed);
    CHECK(check_stability(g, node, seq, eps, EnvelopeMode::Lower).passed);
    CHECK_THROWS_AS(check_stability(g, node, seq, {0.1}, EnvelopeMode::Upper), PreconditionError);
}
