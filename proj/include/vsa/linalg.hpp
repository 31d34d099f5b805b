#pragma once

#include <cstddef>
#include <vector>

namespace vsa {

// Small dense routines for generator rank checks, least-squares fits and the
// PCA used by cluster export. Sizes here are at most a few hundred.

// Solves A X = B in place (A: n x n, B: n x m, row-major) by Gaussian
// elimination with partial pivoting. Returns false if A is singular.
bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n, std::size_t m);

// True if the n x k matrix (row-major, k <= n) has full column rank, judged
// by the pivots of its Gram matrix.
bool full_column_rank(const std::vector<double>& mat, std::size_t n, std::size_t k);

// Eigen decomposition of a symmetric n x n matrix by cyclic Jacobi rotations.
// Eigenvalues are returned in descending order with matching eigenvectors
// (row e of `vectors` is the e-th eigenvector). Deterministic sign convention:
// the component of largest magnitude is positive.
void symmetric_eigen(std::vector<double> a, std::size_t n, std::vector<double>& values,
                     std::vector<double>& vectors);

}  // namespace vsa
