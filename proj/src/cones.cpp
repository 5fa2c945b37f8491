#include "heisvisc/cones.hpp"

#include <algorithm>
#include <cmath>

#include "heisvisc/linalg.hpp"
#include "heisvisc/parallel.hpp"
#include "heisvisc/rng.hpp"

namespace heisvisc {

const char* to_string(Membership m) {
    switch (m) {
        case Membership::Interior: return "interior";
        case Membership::Exterior: return "exterior";
        case Membership::Boundary: return "boundary";
    }
    return "?";
}

const char* to_string(ConeFamily f) {
    switch (f) {
        case ConeFamily::Trace: return "trace";
        case ConeFamily::PosDef: return "posdef";
        case ConeFamily::SigmaK: return "sigma_k";
        case ConeFamily::Spectral: return "spectral";
    }
    return "?";
}

ConeSpec ConeSpec::trace(double tol) { return {ConeFamily::Trace, 1, tol, nullptr, {}}; }
ConeSpec ConeSpec::posdef(double tol) { return {ConeFamily::PosDef, 1, tol, nullptr, {}}; }

ConeSpec ConeSpec::sigma_k(int k, double tol) {
    if (k < 1 || k > 2 * kMaxN) throw PreconditionError("sigma_k cone needs 1 <= k <= 2n");
    return {ConeFamily::SigmaK, k, tol, nullptr, {}};
}

ConeSpec ConeSpec::spectral(const std::string& g, double tol) {
    expr::VarTable vars;
    for (int i = 0; i < 2 * kMaxN; ++i) vars.add("l" + std::to_string(i + 1), i);
    return {ConeFamily::Spectral, 1, tol, expr::parse(g, vars), g};
}

std::string ConeSpec::name() const {
    switch (family) {
        case ConeFamily::SigmaK: return "sigma_" + std::to_string(k);
        case ConeFamily::Spectral: return "spectral(" + g_source + ")";
        default: return to_string(family);
    }
}

namespace {

bool in_garding(const std::vector<double>& lam, int k) {
    const auto e = elementary_symmetric(lam, k);
    for (int j = 1; j <= k; ++j)
        if (!(e[j] > 0.0)) return false;
    return true;
}

}  // namespace

double garding_shift(const std::vector<double>& lambda, int k) {
    const int N = static_cast<int>(lambda.size());
    if (k < 1 || k > N) throw PreconditionError("sigma_k cone order exceeds matrix size");
    double lo = *std::min_element(lambda.begin(), lambda.end());
    double mean = 0.0;
    for (double l : lambda) mean += l;
    mean /= N;
    double hi = mean;
    if (hi <= lo) return lo;
    std::vector<double> shifted(N);
    auto inside = [&](double t) {
        for (int i = 0; i < N; ++i) shifted[i] = lambda[i] - t;
        return in_garding(shifted, k);
    };
    // lambda - lo >= 0 lies in the closed cone; lambda - mean has zero trace, so lies outside.
    if (!inside(lo)) return lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (inside(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double defining_value_eigs(const ConeSpec& c, const std::vector<double>& lambda) {
    switch (c.family) {
        case ConeFamily::Trace: {
            double s = 0.0;
            for (double l : lambda) s += l;
            return s;
        }
        case ConeFamily::PosDef: return lambda.front();
        case ConeFamily::SigmaK: return garding_shift(lambda, c.k);
        case ConeFamily::Spectral: {
            if (expr::max_variable(c.g) >= static_cast<int>(lambda.size()))
                throw PreconditionError("spectral cone expression uses more eigenvalues than the matrix has");
            return expr::evaluate(c.g, lambda);
        }
    }
    return 0.0;
}

double defining_value(const ConeSpec& c, const SymMat& M) {
    if (c.family == ConeFamily::Trace) return M.trace();
    return defining_value_eigs(c, eigenvalues(M));
}

double boundary_band(const ConeSpec& c, const SymMat& M) { return c.tol * (1.0 + M.mat().norm()); }

Membership classify(const ConeSpec& c, const SymMat& M) {
    const double rho = defining_value(c, M);
    const double band = boundary_band(c, M);
    if (rho > band) return Membership::Interior;
    if (rho < -band) return Membership::Exterior;
    return Membership::Boundary;
}

const AxiomResult* AxiomReport::find(const std::string& name) const {
    for (const auto& a : axioms)
        if (a.name == name) return &a;
    return nullptr;
}

namespace {

std::vector<double> flatten(const SymMat& m) {
    std::vector<double> out;
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) out.push_back(m(i, j));
    return out;
}

struct Trial {
    bool drawn = false;
    long rejected = 0;
    SymMat A, B;
    double c[3] = {0, 0, 0};  // any c > 0, c in (0,1), c in (1, inf)
    bool ok[4] = {true, true, true, true};
};

}  // namespace

AxiomReport check_axioms(const ConeSpec& cone, const AxiomPlan& plan) {
    if (plan.n < 1 || plan.n > kMaxN) throw PreconditionError("axiom plan n out of range");
    const int d = 2 * plan.n;
    const std::size_t N = static_cast<std::size_t>(std::max(plan.samples, 0));
    std::vector<Trial> trials(N);

    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            CounterRng rng(plan.seed, i);
            Trial& tr = trials[i];
            for (int attempt = 0; attempt < 1000 && !tr.drawn; ++attempt) {
                Mat g(d, d);
                for (int r = 0; r < d; ++r)
                    for (int s = 0; s < d; ++s) g(r, s) = rng.normal();
                const double shift = rng.uniform(-1.0, 3.0 * d);
                SymMat A(g + shift * Mat::Identity(d, d));
                if (defining_value(cone, A) > plan.interior_margin * (1.0 + A.mat().norm())) {
                    tr.A = A;
                    tr.drawn = true;
                } else {
                    ++tr.rejected;
                }
            }
            if (!tr.drawn) continue;
            Mat h(d, d);
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s) h(r, s) = rng.normal();
            tr.B = SymMat(h * h.transpose() + 1e-3 * Mat::Identity(d, d));
            tr.c[0] = std::pow(10.0, rng.uniform(-3.0, 3.0));
            tr.c[1] = std::pow(10.0, rng.uniform(-3.0, 0.0));
            tr.c[2] = std::pow(10.0, rng.uniform(0.0, 3.0));
            if (tr.c[1] >= 1.0) tr.c[1] = 0.5;
            if (tr.c[2] <= 1.0) tr.c[2] = 2.0;
            auto in = [&](const SymMat& m) { return classify(cone, m) == Membership::Interior; };
            tr.ok[0] = in(tr.A + tr.B);
            tr.ok[1] = in(tr.A * tr.c[0]);
            tr.ok[2] = in(tr.A * tr.c[1]);
            tr.ok[3] = in(tr.A * tr.c[2]);
        }
    });

    AxiomReport rep;
    rep.cone = cone.name();
    const char* names[4] = {"UCondPos", "UCone", "UCond*S", "UCond*SCat"};
    for (int a = 0; a < 4; ++a) {
        AxiomResult r;
        r.name = names[a];
        for (const auto& tr : trials) {
            if (!tr.drawn) continue;
            ++r.checked;
            if (tr.ok[a]) continue;
            if (r.violations++ == 0) {
                r.witness_A = flatten(tr.A);
                if (a == 0) r.witness_B = flatten(tr.B);
                r.witness_c = a == 0 ? 0.0 : tr.c[a - 1];
            }
        }
        r.passed = r.violations == 0 && r.checked > 0;
        rep.axioms.push_back(std::move(r));
    }
    for (const auto& tr : trials) rep.rejected_draws += tr.rejected;
    rep.passed = std::all_of(rep.axioms.begin(), rep.axioms.end(), [](const AxiomResult& r) { return r.passed; });
    return rep;
}

}  // namespace heisvisc
