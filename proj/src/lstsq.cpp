#include "dipex/lstsq.hpp"

#include "dipex/errors.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dipex {

using Complex = std::complex<double>;

LeastSquares::LeastSquares(const Eigen::MatrixXcd &t, double rcond) : qr_(t) {
  const Eigen::Index m = qr_.rows();
  const Eigen::Index n = qr_.cols();
  if (n == 0)
    return;
  if (m < n)
    throw IllConditionedError("least squares needs at least as many rows (" + std::to_string(m) +
                                  ") as unknowns (" + std::to_string(n) + ")",
                              std::numeric_limits<double>::infinity());
  if (!qr_.allFinite())
    throw IllConditionedError("transfer matrix contains non-finite entries",
                              std::numeric_limits<double>::infinity());

  tau_.assign(static_cast<std::size_t>(n), Complex(0.0, 0.0));
  perm_.resize(static_cast<std::size_t>(n));
  std::iota(perm_.begin(), perm_.end(), Eigen::Index{0});

  Eigen::VectorXd col_norm2(n);
  for (Eigen::Index j = 0; j < n; ++j)
    col_norm2[j] = qr_.col(j).squaredNorm();

  for (Eigen::Index k = 0; k < n; ++k) {
    // Pivot: largest remaining column norm. Norms are recomputed rather than
    // downdated; n is small here.
    Eigen::Index best = k;
    for (Eigen::Index j = k; j < n; ++j) {
      col_norm2[j] = qr_.col(j).tail(m - k).squaredNorm();
      if (col_norm2[j] > col_norm2[best])
        best = j;
    }
    if (best != k) {
      qr_.col(k).swap(qr_.col(best));
      std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(best)]);
      std::swap(col_norm2[k], col_norm2[best]);
    }

    auto x = qr_.col(k).tail(m - k);
    const double xnorm = x.norm();
    if (xnorm == 0.0) {
      tau_[static_cast<std::size_t>(k)] = 0.0;
      continue;
    }
    // Reflector H = I - tau v v^H mapping x to beta e1 with |beta| = ||x||.
    const Complex alpha = x[0];
    const Complex phase = std::abs(alpha) > 0.0 ? alpha / std::abs(alpha) : Complex(1.0, 0.0);
    const Complex beta = -phase * xnorm;
    const Complex v0 = alpha - beta;
    x.tail(m - k - 1) /= v0;
    const Complex tau = (beta - alpha) / beta;
    tau_[static_cast<std::size_t>(k)] = tau;
    x[0] = beta;

    // Apply H^H = I - conj(tau) v v^H to the trailing columns.
    for (Eigen::Index j = k + 1; j < n; ++j) {
      auto y = qr_.col(j).tail(m - k);
      Complex w = y[0];
      w += x.tail(m - k - 1).dot(y.tail(m - k - 1)); // v^H y (dot conjugates lhs)
      w *= std::conj(tau);
      y[0] -= w;
      y.tail(m - k - 1) -= w * x.tail(m - k - 1);
    }
  }

  double rmax = 0.0;
  double rmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double d = std::abs(qr_(k, k));
    rmax = std::max(rmax, d);
    rmin = std::min(rmin, d);
  }
  condition_ = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();
  if (!(condition_ * rcond <= 1.0))
    throw IllConditionedError("transfer matrix is ill-conditioned (condition estimate " +
                                  std::to_string(condition_) + ")",
                              condition_);
}

Eigen::VectorXcd LeastSquares::solve(const Eigen::VectorXcd &f) const {
  const Eigen::Index m = qr_.rows();
  const Eigen::Index n = qr_.cols();
  if (f.size() != m)
    throw Error("right-hand side length does not match the matrix rows");
  if (n == 0)
    return Eigen::VectorXcd(0);

  Eigen::VectorXcd y = f;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto v_tail = qr_.col(k).tail(m - k - 1);
    Complex w = y[k] + v_tail.dot(y.tail(m - k - 1));
    w *= std::conj(tau_[static_cast<std::size_t>(k)]);
    y[k] -= w;
    y.tail(m - k - 1) -= w * v_tail;
  }

  Eigen::VectorXcd z(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Complex s = y[i];
    for (Eigen::Index j = i + 1; j < n; ++j)
      s -= qr_(i, j) * z[j];
    z[i] = s / qr_(i, i);
  }

  Eigen::VectorXcd x(n);
  for (Eigen::Index k = 0; k < n; ++k)
    x[perm_[static_cast<std::size_t>(k)]] = z[k];
  return x;
}

Eigen::VectorXcd lstsq_complex(const Eigen::MatrixXcd &t, const Eigen::VectorXcd &f,
                               double rcond) {
  return LeastSquares(t, rcond).solve(f);
}

} // namespace dipex
