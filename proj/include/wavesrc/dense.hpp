#pragma once
#include <vector>

namespace wavesrc {

// Small dense symmetric matrix, row-major.
struct DenseMatrix {
    int n = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    explicit DenseMatrix(int n_) : n(n_), a(std::size_t(n_) * n_, 0.0) {}

    double& at(int i, int j) { return a[std::size_t(i) * n + j]; }
    double at(int i, int j) const { return a[std::size_t(i) * n + j]; }
};

// Cholesky factorization solve for SPD systems; throws numeric_error naming the
// pivot index when a non-positive pivot appears.
std::vector<double> cholesky_solve(DenseMatrix m, std::vector<double> rhs);

// In-place factorization A = L L^T (lower triangle of m receives L).
// Returns a cheap condition estimate max_i L_ii^2 / min_i L_ii^2.
double cholesky_factor(DenseMatrix& m);
void cholesky_apply(const DenseMatrix& l, std::vector<double>& x);

} // namespace wavesrc
