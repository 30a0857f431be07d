#pragma once

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace dipex {

/// Complex least squares min ||T x - f||_2 through a Householder QR with
/// column pivoting. The factorization is computed once, so repeated solves
/// against the same matrix (as in the back-and-forth iteration) cost O(M N).
class LeastSquares {
public:
  /// Throws IllConditionedError when the condition estimate exceeds 1/rcond
  /// or when M < N.
  explicit LeastSquares(const Eigen::MatrixXcd &t, double rcond = 1e-10);

  Eigen::VectorXcd solve(const Eigen::VectorXcd &f) const;
  /// max|R_ii| / min|R_ii| of the pivoted factor; a lower bound on cond_2(T).
  double condition_estimate() const noexcept { return condition_; }
  Eigen::Index rows() const noexcept { return qr_.rows(); }
  Eigen::Index cols() const noexcept { return qr_.cols(); }

private:
  Eigen::MatrixXcd qr_;                 // R above the diagonal, reflectors below
  std::vector<std::complex<double>> tau_;
  std::vector<Eigen::Index> perm_;
  double condition_ = 1.0;
};

Eigen::VectorXcd lstsq_complex(const Eigen::MatrixXcd &t, const Eigen::VectorXcd &f,
                               double rcond = 1e-10);

} // namespace dipex
