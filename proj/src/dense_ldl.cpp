#include "mpcckit/dense_ldl.hpp"

#include <cmath>
#include <stdexcept>

#include <lapacke.h>

namespace mpcckit {

bool SymmetricIndefiniteFactor::factorize(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("matrix is not square");
  a_ = a;
  ipiv_.assign(n, 0);
  n_pos_ = n_neg_ = n_zero_ = 0;
  scale_ = Eigen::VectorXd::Ones(n);
  if (n == 0) {
    ldl_ = a;
    return true;
  }
  // Symmetric Ruiz equilibration. The congruence D A D keeps the inertia and
  // tames the spread between barrier terms and constraint pivots.
  ldl_ = a;  // column major, lower triangle used
  for (int pass = 0; pass < 5; ++pass) {
    Eigen::VectorXd r = ldl_.cwiseAbs().colwise().maxCoeff().transpose();
    bool done = true;
    for (int i = 0; i < n; ++i) {
      r[i] = r[i] > 0.0 ? 1.0 / std::sqrt(r[i]) : 1.0;
      if (std::fabs(r[i] - 1.0) > 0.1) done = false;
    }
    ldl_ = r.asDiagonal() * ldl_ * r.asDiagonal();
    scale_ = scale_.cwiseProduct(r);
    if (done) break;
  }
  const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n,
                                         ldl_.data(), n, ipiv_.data());
  if (info < 0) return false;

  // Only exact (or subnormal) pivots count as zero. Primal-dual matrices mix
  // barrier terms near 1e18 with Schur pivots near 1e-18, so any tolerance
  // relative to the largest entry misreads legitimate pivots.
  const double zero_tol = 1e-300;
  for (int k = 0; k < n;) {
    if (ipiv_[k] > 0) {
      const double d = ldl_(k, k);
      if (std::fabs(d) <= zero_tol) ++n_zero_;
      else if (d > 0) ++n_pos_;
      else ++n_neg_;
      ++k;
    } else {
      // 2x2 block [[a, b], [b, c]] stored in the lower triangle.
      const double d11 = ldl_(k, k), d21 = ldl_(k + 1, k),
                   d22 = ldl_(k + 1, k + 1);
      const double tr = d11 + d22;
      const double det = d11 * d22 - d21 * d21;
      const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
      for (double ev : {0.5 * tr + disc, 0.5 * tr - disc}) {
        if (std::fabs(ev) <= zero_tol) ++n_zero_;
        else if (ev > 0) ++n_pos_;
        else ++n_neg_;
      }
      k += 2;
    }
  }
  return true;
}

Eigen::VectorXd SymmetricIndefiniteFactor::solve(const Eigen::VectorXd& b,
                                                 int refine) const {
  const int n = static_cast<int>(ldl_.rows());
  if (b.size() != n) throw std::invalid_argument("rhs has wrong length");
  if (n == 0) return b;
  auto raw = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x = scale_.cwiseProduct(rhs);
    LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, ldl_.data(), n, ipiv_.data(),
                   x.data(), n);
    return Eigen::VectorXd(scale_.cwiseProduct(x));
  };
  Eigen::VectorXd x = raw(b);
  for (int it = 0; it < refine; ++it) {
    const Eigen::VectorXd r = b - a_ * x;
    if (!r.allFinite()) break;
    x += raw(r);
  }
  return x;
}

}  // namespace mpcckit
