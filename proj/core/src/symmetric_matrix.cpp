#include "heavytail/symmetric_matrix.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace heavytail {

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("SymmetricMatrix: matrix must be square");
  mat_ = 0.5 * (a + a.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index d) {
  return SymmetricMatrix(Eigen::MatrixXd::Identity(d, d));
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index d) {
  return SymmetricMatrix(Eigen::MatrixXd::Zero(d, d));
}

namespace {

double offdiag_frobenius(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index p = 0; p < a.rows(); ++p)
    for (Eigen::Index q = p + 1; q < a.cols(); ++q) s += 2.0 * a(p, q) * a(p, q);
  return std::sqrt(s);
}

void sort_and_fix_signs(Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index d = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return values[i] > values[j]; });

  Eigen::VectorXd sorted_values(d);
  Eigen::MatrixXd sorted_vectors(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    sorted_values[k] = values[order[static_cast<std::size_t>(k)]];
    sorted_vectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  // Sign convention: largest-magnitude component positive (first such index
  // on exact ties).
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double m = std::abs(sorted_vectors(i, k));
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    if (sorted_vectors(arg, k) < 0.0) sorted_vectors.col(k) = -sorted_vectors.col(k);
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

}  // namespace

EigenDecomposition eigendecompose(const SymmetricMatrix& a) {
  if (!a.matrix().allFinite())
    throw std::invalid_argument("eigendecompose: matrix has non-finite entries");

  const Eigen::Index d = a.dim();
  Eigen::MatrixXd work = a.matrix();
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Identity(d, d);
  const double total_norm = work.norm();
  const double target = 1e-12 * total_norm;

  constexpr int kMaxSweeps = 30;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = offdiag_frobenius(work);
    if (off <= target) break;
    // Early sweeps skip rotations on entries that are small relative to the
    // remaining off-diagonal mass (classic threshold strategy); later sweeps
    // annihilate everything.
    const double threshold =
        sweep < 3 ? 0.2 * off / (static_cast<double>(d) * static_cast<double>(d)) : 0.0;

    for (Eigen::Index p = 0; p < d - 1; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        const double apq = work(p, q);
        if (std::abs(apq) <= threshold || apq == 0.0) continue;

        const double theta = (work(q, q) - work(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        const double app = work(p, p);
        const double aqq = work(q, q);
        work(p, p) = app - t * apq;
        work(q, q) = aqq + t * apq;
        work(p, q) = 0.0;
        work(q, p) = 0.0;
        for (Eigen::Index r = 0; r < d; ++r) {
          if (r != p && r != q) {
            const double arp = work(r, p);
            const double arq = work(r, q);
            work(r, p) = work(p, r) = arp - s * (arq + tau * arp);
            work(r, q) = work(q, r) = arq + s * (arp - tau * arq);
          }
          const double vrp = vectors(r, p);
          const double vrq = vectors(r, q);
          vectors(r, p) = vrp - s * (vrq + tau * vrp);
          vectors(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  EigenDecomposition out;
  out.eigenvalues = work.diagonal();
  out.eigenvectors = std::move(vectors);
  sort_and_fix_signs(out.eigenvalues, out.eigenvectors);
  return out;
}

SymmetricMatrix matrix_function(const SymmetricMatrix& a,
                                const std::function<double(double)>& f) {
  const EigenDecomposition ed = eigendecompose(a);
  Eigen::VectorXd mapped(ed.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    mapped[i] = f(ed.eigenvalues[i]);
    if (!std::isfinite(mapped[i]))
      throw std::domain_error("matrix_function: f is not finite at an eigenvalue");
  }
  return SymmetricMatrix(ed.eigenvectors * mapped.asDiagonal() * ed.eigenvectors.transpose());
}

double operator_norm(const SymmetricMatrix& a) {
  const EigenDecomposition ed = eigendecompose(a);
  return ed.eigenvalues.size() == 0 ? 0.0 : ed.eigenvalues.cwiseAbs().maxCoeff();
}

double frobenius_norm(const SymmetricMatrix& a) {
  const EigenDecomposition ed = eigendecompose(a);
  return ed.eigenvalues.norm();
}

double nuclear_norm(const SymmetricMatrix& a) {
  const EigenDecomposition ed = eigendecompose(a);
  return ed.eigenvalues.cwiseAbs().sum();
}

SymmetricMatrix spectral_soft_threshold(const SymmetricMatrix& a, double tau) {
  if (!(tau >= 0.0))
    throw std::invalid_argument("spectral_soft_threshold: tau must be nonnegative");
  return matrix_function(a, [tau](double x) { return std::max(x - tau / 2.0, 0.0); });
}

SymmetricMatrix sqrt_psd(const SymmetricMatrix& a) {
  const EigenDecomposition ed = eigendecompose(a);
  const double scale = ed.eigenvalues.size() == 0 ? 0.0 : ed.eigenvalues.cwiseAbs().maxCoeff();
  Eigen::VectorXd mapped(ed.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    const double lambda = ed.eigenvalues[i];
    if (lambda < -1e-10 * std::max(scale, 1.0))
      throw std::domain_error("sqrt_psd: matrix is not positive semidefinite");
    mapped[i] = std::sqrt(std::max(lambda, 0.0));
  }
  return SymmetricMatrix(ed.eigenvectors * mapped.asDiagonal() * ed.eigenvectors.transpose());
}

SymmetricMatrix invsqrt_psd(const SymmetricMatrix& a) {
  const EigenDecomposition ed = eigendecompose(a);
  if (ed.eigenvalues.size() == 0 || !(ed.eigenvalues[0] > 0.0))
    throw std::domain_error("invsqrt_psd: matrix has no positive spectrum");
  const double floor = 1e-12 * ed.eigenvalues[0];
  Eigen::VectorXd mapped(ed.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    const double lambda = ed.eigenvalues[i];
    if (lambda < floor)
      throw std::domain_error("invsqrt_psd: eigenvalue below the rank floor");
    mapped[i] = 1.0 / std::sqrt(lambda);
  }
  return SymmetricMatrix(ed.eigenvectors * mapped.asDiagonal() * ed.eigenvectors.transpose());
}

}  // namespace heavytail
