#ifndef MPCCKIT_DENSE_LDL_HPP
#define MPCCKIT_DENSE_LDL_HPP

#include <vector>

#include <Eigen/Core>

namespace mpcckit {

// Bunch-Kaufman LDL^T of a dense symmetric matrix with inertia counts, used
// for the primal-dual systems of the interior-point solver.
class SymmetricIndefiniteFactor {
 public:
  // Returns false only if LAPACK reports an argument error; singular
  // matrices factor fine and show up in num_zero().
  bool factorize(const Eigen::MatrixXd& a);

  int num_positive() const { return n_pos_; }
  int num_negative() const { return n_neg_; }
  int num_zero() const { return n_zero_; }

  // Solves A x = b using the stored factor, followed by up to `refine`
  // steps of iterative refinement against the original matrix.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, int refine = 1) const;

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd ldl_;
  Eigen::VectorXd scale_;
  std::vector<int> ipiv_;
  int n_pos_ = 0, n_neg_ = 0, n_zero_ = 0;
};

}  // namespace mpcckit

#endif  // MPCCKIT_DENSE_LDL_HPP
