#pragma once

#include <vector>

#include "heisvisc/core.hpp"

namespace heisvisc {

/// All eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations until the off-diagonal Frobenius norm is below
/// off_tol * max(1, ||M||_F).  Throws ConvergenceError after max_sweeps.
std::vector<double> eigenvalues(const SymMat& m, double off_tol = 1e-12, int max_sweeps = 100);

double lambda_min(const SymMat& m);
double lambda_max(const SymMat& m);

/// k-th elementary symmetric polynomial of lambda, 1 <= k <= size.
double sigma_k(const std::vector<double>& lambda, int k);

/// All sigma_0..sigma_k (sigma_0 = 1).
std::vector<double> elementary_symmetric(const std::vector<double>& lambda, int k);

}  // namespace heisvisc
