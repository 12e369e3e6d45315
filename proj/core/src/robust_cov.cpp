#include "heavytail/robust_cov.hpp"

#include <cmath>
#include <stdexcept>

namespace heavytail {

SymmetricMatrix truncated_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& mu_hat,
                                     double theta) {
  if (!(theta > 0.0))
    throw std::invalid_argument("truncated_covariance: theta must be positive");
  if (X.cols() != mu_hat.size())
    throw std::invalid_argument("truncated_covariance: center dimension mismatch");

  const Eigen::Index m = X.rows();
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd z = X.row(i).transpose() - mu_hat;
    const double n2 = z.squaredNorm();
    if (n2 == 0.0) continue;
    // psi(theta n2)/n2 = min(theta, 1/n2) since theta n2 >= 0
    const double w = std::min(theta, 1.0 / n2);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(z, w);
  }
  acc = acc.selfadjointView<Eigen::Lower>();
  acc /= static_cast<double>(m) * theta;
  return SymmetricMatrix(acc);
}

LepskiResult lepski_covariance(const Eigen::MatrixXd& X, const CovConfig& cfg) {
  if (!(cfg.sigma_min > 0.0) || !(cfg.sigma_max > 0.0) || cfg.sigma_min > cfg.sigma_max)
    throw std::invalid_argument("lepski_covariance: invalid sigma bracket");
  if (X.rows() < 1) throw std::invalid_argument("lepski_covariance: empty sample");

  const Eigen::Index m = X.rows();
  const double rate = std::sqrt(cfg.beta / static_cast<double>(m));

  LepskiTrace trace;
  for (double sigma = cfg.sigma_min; sigma < 2.0 * cfg.sigma_max; sigma *= 2.0)
    trace.sigma_grid.push_back(sigma);

  const Eigen::VectorXd mu_hat = median_of_means(X, cfg.mom);

  std::vector<SymmetricMatrix> estimates;
  estimates.reserve(trace.sigma_grid.size());
  for (double sigma : trace.sigma_grid)
    estimates.push_back(truncated_covariance(X, mu_hat, rate / sigma));

  const int grid_size = static_cast<int>(trace.sigma_grid.size());
  int chosen = -1;
  for (int j = 0; j < grid_size && chosen < 0; ++j) {
    bool ok = true;
    for (int k = j + 1; k < grid_size; ++k) {
      const double dist = operator_norm(
          SymmetricMatrix(estimates[k].matrix() - estimates[j].matrix()));
      const double threshold = 6.0 * trace.sigma_grid[k] * rate;
      const bool passed = dist <= threshold;
      trace.tests.push_back({j, k, dist, threshold, passed});
      if (!passed) {
        ok = false;
        break;
      }
    }
    if (ok) chosen = j;
  }
  if (chosen < 0) {
    // The high-probability event backing the selection rule failed on this
    // sample; fall back to the most conservative truncation level.
    chosen = grid_size - 1;
    trace.fallback = true;
  }
  trace.chosen_index = chosen;
  return {estimates[chosen], std::move(trace)};
}

SymmetricMatrix lowrank_covariance(const Eigen::MatrixXd& X, const CovConfig& cfg, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("lowrank_covariance: tau must be nonnegative");
  return spectral_soft_threshold(lepski_covariance(X, cfg).covariance, tau);
}

double pca_projector_distance(const SymmetricMatrix& sigma_hat,
                              const SymmetricMatrix& sigma_true, int k) {
  const Eigen::Index d = sigma_true.dim();
  if (k <= 0 || k > d) throw std::invalid_argument("pca_projector_distance: bad rank k");
  if (sigma_hat.dim() != d)
    throw std::invalid_argument("pca_projector_distance: dimension mismatch");

  const EigenDecomposition true_ed = eigendecompose(sigma_true);
  if (k < d) {
    const double gap = true_ed.eigenvalues[k - 1] - true_ed.eigenvalues[k];
    if (gap <= 1e-12)
      throw std::domain_error("pca_projector_distance: degenerate top-k eigengap");
  }
  const EigenDecomposition hat_ed = eigendecompose(sigma_hat);

  const Eigen::MatrixXd p_true =
      true_ed.eigenvectors.leftCols(k) * true_ed.eigenvectors.leftCols(k).transpose();
  const Eigen::MatrixXd p_hat =
      hat_ed.eigenvectors.leftCols(k) * hat_ed.eigenvectors.leftCols(k).transpose();
  return operator_norm(SymmetricMatrix(p_hat - p_true));
}

}  // namespace heavytail
