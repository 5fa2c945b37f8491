#include "heisvisc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace heisvisc {

std::vector<double> eigenvalues(const SymMat& m, double off_tol, int max_sweeps) {
    const int d = m.dim();
    Mat a = m.mat();
    const double scale = std::max(1.0, a.norm());
    auto off_norm = [&] {
        double s = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q)
                if (p != q) s += a(p, q) * a(p, q);
        return std::sqrt(s);
    };
    int sweep = 0;
    while (off_norm() > off_tol * scale) {
        if (++sweep > max_sweeps)
            throw ConvergenceError("Jacobi eigenvalue iteration did not converge in " +
                                   std::to_string(max_sweeps) + " sweeps");
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation annihilating a(p, q) (Golub & Van Loan, sym.schur2).
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(d);
    for (int i = 0; i < d; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

double lambda_min(const SymMat& m) { return eigenvalues(m).front(); }
double lambda_max(const SymMat& m) { return eigenvalues(m).back(); }

std::vector<double> elementary_symmetric(const std::vector<double>& lambda, int k) {
    if (k < 0 || k > static_cast<int>(lambda.size()))
        throw PreconditionError("elementary symmetric order out of range");
    std::vector<double> e(k + 1, 0.0);
    e[0] = 1.0;
    for (double l : lambda)
        for (int j = k; j >= 1; --j) e[j] += l * e[j - 1];
    return e;
}

double sigma_k(const std::vector<double>& lambda, int k) {
    if (k < 1 || k > static_cast<int>(lambda.size()))
        throw PreconditionError("sigma_k needs 1 <= k <= " + std::to_string(lambda.size()) +
                                ", got k = " + std::to_string(k));
    return elementary_symmetric(lambda, k)[k];
}

}  // namespace heisvisc
