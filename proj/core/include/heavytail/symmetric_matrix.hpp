#pragma once

#include <functional>

#include <Eigen/Core>

namespace heavytail {

// Truncation function psi(x) = (|x| ^ 1) * sign(x): identity on [-1, 1],
// saturated outside. Applied spectrally to matrices and radially to data.
inline double psi(double x) {
  if (x > 1.0) return 1.0;
  if (x < -1.0) return -1.0;
  return x;
}

// Dense symmetric matrix; entries are symmetrized exactly on construction,
// so a(i,j) == a(j,i) bitwise. Immutable after construction.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Eigen::MatrixXd& a);

  static SymmetricMatrix identity(Eigen::Index d);
  static SymmetricMatrix zero(Eigen::Index d);

  Eigen::Index dim() const { return mat_.rows(); }
  const Eigen::MatrixXd& matrix() const { return mat_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }

 private:
  Eigen::MatrixXd mat_;
};

// Spectral factorization A = V diag(lambda) V^T with eigenvalues sorted in
// descending order and the largest-magnitude component of each eigenvector
// made positive (deterministic output for golden tests).
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal
};

// Cyclic Jacobi with threshold sweeps; converged when the off-diagonal
// Frobenius mass drops below 1e-12 * |A|_F (at most 30 sweeps).
EigenDecomposition eigendecompose(const SymmetricMatrix& a);

// f(A) = V f(diag(lambda)) V^T. Throws std::domain_error when f is not
// finite at some eigenvalue.
SymmetricMatrix matrix_function(const SymmetricMatrix& a,
                                const std::function<double(double)>& f);

double operator_norm(const SymmetricMatrix& a);   // max |lambda_i|
double frobenius_norm(const SymmetricMatrix& a);  // sqrt(sum lambda_i^2)
double nuclear_norm(const SymmetricMatrix& a);    // sum |lambda_i|

// Eigenvalues mapped lambda -> max(lambda - tau/2, 0); result is PSD.
SymmetricMatrix spectral_soft_threshold(const SymmetricMatrix& a, double tau);

// PSD square root and inverse square root. sqrt_psd tolerates eigenvalues
// down to -1e-10 * |A| (clamped to zero); invsqrt_psd refuses eigenvalues
// below 1e-12 * lambda_max.
SymmetricMatrix sqrt_psd(const SymmetricMatrix& a);
SymmetricMatrix invsqrt_psd(const SymmetricMatrix& a);

}  // namespace heavytail
