#include "tdrom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "tdrom/error.hpp"

namespace tdrom {
namespace {

// Hestenes sweeps over the columns of b (rows >= cols) in place.
int jacobi_orthogonalize(Eigen::MatrixXd& b, double tol, int max_sweeps) {
  const Eigen::Index m = b.rows(), n = b.cols();
  std::vector<double> norm2(static_cast<std::size_t>(n));
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < n; ++j) norm2[static_cast<std::size_t>(j)] = b.col(j).squaredNorm();
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      double* x = b.col(i).data();
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double* y = b.col(j).data();
        double& alpha = norm2[static_cast<std::size_t>(i)];
        double& beta = norm2[static_cast<std::size_t>(j)];
        if (alpha == 0.0 || beta == 0.0) continue;
        double gamma = 0.0;
        for (Eigen::Index r = 0; r < m; ++r) gamma += x[r] * y[r];
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (Eigen::Index r = 0; r < m; ++r) {
          const double xr = x[r], yr = y[r];
          x[r] = c * xr - s * yr;
          y[r] = s * xr + c * yr;
        }
        alpha -= t * gamma;
        beta += t * gamma;
      }
    }
    if (!rotated) return sweep;
  }
  throw NumericalError("thin_svd: Jacobi rotations did not converge in " + std::to_string(max_sweeps) +
                       " sweeps");
}

// Two passes of modified Gram-Schmidt of columns [from, n) against all
// earlier columns; a column that vanishes is replaced by the first unit
// vector that is not already in the span.
void orthonormalize_tail(Eigen::MatrixXd& u, Eigen::Index from) {
  const Eigen::Index m = u.rows(), n = u.cols();
  Eigen::Index probe = 0;
  for (Eigen::Index j = from; j < n; ++j) {
    for (;;) {
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) u.col(j) -= u.col(i).dot(u.col(j)) * u.col(i);
      const double nrm = u.col(j).norm();
      if (nrm > 1e-8) {
        u.col(j) /= nrm;
        break;
      }
      if (probe >= m) throw NumericalError("thin_svd: cannot complete orthonormal basis");
      u.col(j).setZero();
      u(probe++, j) = 1.0;
    }
  }
}

}  // namespace

ThinSvd thin_svd(const Eigen::MatrixXd& a, double tol, int max_sweeps) {
  if (a.size() == 0) throw ShapeError("thin_svd: empty matrix");
  if (!a.allFinite()) throw DataError("thin_svd: non-finite entries");
  if (a.rows() < a.cols()) {
    // A = L Q^T with L = R^T from the QR of A^T; A's left factor is L's.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a.transpose());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(a.rows()).triangularView<Eigen::Upper>();
    return thin_svd(r.transpose(), tol, max_sweeps);
  }
  const Eigen::Index n = a.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  if (tol <= 0.0) tol = std::min(static_cast<double>(n) * std::numeric_limits<double>::epsilon(), 1e-12);
  ThinSvd out;
  out.sweeps = jacobi_orthogonalize(r, tol, max_sweeps);

  std::vector<double> sv(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) sv[static_cast<std::size_t>(j)] = r.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return sv[static_cast<std::size_t>(x)] > sv[static_cast<std::size_t>(y)];
  });

  Eigen::MatrixXd ur(n, n);
  out.S.resize(n);
  const double smax = sv[static_cast<std::size_t>(order[0])];
  Eigen::Index good = n;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double s = sv[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    out.S(k) = s;
    if (s > 1e-10 * smax && s > 0.0) {
      ur.col(k) = r.col(order[static_cast<std::size_t>(k)]) / s;
    } else {
      if (good == n) good = k;
      ur.col(k) = r.col(order[static_cast<std::size_t>(k)]);
    }
  }
  // negligible columns carry no reliable direction; rebuild them
  orthonormalize_tail(ur, std::min(good, n));

  out.U = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), n);
  out.U = out.U * ur;
  return out;
}

Eigen::MatrixXd lstsq_min_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows())
    throw ShapeError("lstsq: " + std::to_string(a.rows()) + " equations vs " + std::to_string(b.rows()) +
                     " right-hand-side rows");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.solve(b);
}

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lambda) {
  if (a.rows() != b.rows())
    throw ShapeError("ridge: " + std::to_string(a.rows()) + " equations vs " + std::to_string(b.rows()) +
                     " right-hand-side rows");
  if (!(lambda > 0.0)) throw ConfigError("ridge: lambda must be positive");
  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("ridge: regularized Gram matrix is not positive definite");
  return llt.solve(a.transpose() * b);
}

}  // namespace tdrom
