#pragma once

#include <Eigen/Dense>

namespace tdrom {

/// Thin SVD A = U diag(S) V^T keeping only U and S; S is non-increasing and
/// U has min(rows, cols) orthonormal columns.
///
/// A Householder QR reduces A to its square triangular factor R, then
/// one-sided (Hestenes) Jacobi rotations orthogonalize the columns of R until
/// every pair satisfies |<r_i, r_j>| <= tol * |r_i| |r_j|; tol = 0 selects
/// min(n * machine epsilon, 1e-12) for n columns. Columns whose
/// singular value is negligible are re-orthonormalized explicitly so U stays
/// orthonormal even for rank-deficient input.
struct ThinSvd {
  Eigen::MatrixXd U;
  Eigen::VectorXd S;
  int sweeps = 0;
};

ThinSvd thin_svd(const Eigen::MatrixXd& a, double tol = 0.0, int max_sweeps = 80);

/// Minimum-norm least-squares solution of min |A X - B|_F (complete
/// orthogonal decomposition built on column-pivoted QR).
Eigen::MatrixXd lstsq_min_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// (A^T A + lambda I)^{-1} A^T B by Cholesky of the regularized Gram matrix.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lambda);

}  // namespace tdrom
