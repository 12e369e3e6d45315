#include "heavytail/single_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace heavytail {

double SingleIndexConfig::truncation_level(Eigen::Index n) const {
  return trunc_scale * std::pow(static_cast<double>(n), 1.0 / (2.0 * (1.0 + kappa)));
}

void SingleIndexConfig::validate() const {
  if (!(kappa > 0.0) || !(kappa < 1.0))
    throw std::invalid_argument("SingleIndexConfig: kappa must lie in (0, 1)");
  if (!(trunc_scale > 0.0))
    throw std::invalid_argument("SingleIndexConfig: trunc_scale must be positive");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("SingleIndexConfig: lambda must be nonnegative");
  if (constraint_radius && !(*constraint_radius > 0.0))
    throw std::invalid_argument("SingleIndexConfig: constraint radius must be positive");
}

TransformedSample transform(const Eigen::VectorXd& x, double y, double tau) {
  const double mu = x.norm();
  if (mu == 0.0) throw std::domain_error("transform: zero design vector");
  const double root_d = std::sqrt(static_cast<double>(x.size()));
  TransformedSample out;
  out.u_tilde = (root_d / mu) * x;
  out.q = mu * y / root_d;
  out.q_tilde = std::clamp(out.q, -tau, tau);
  return out;
}

Eigen::VectorXd truncated_moment_vector(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        double tau, int* skipped) {
  if (X.rows() != y.size())
    throw std::invalid_argument("truncated_moment_vector: shape mismatch");
  const Eigen::Index n = X.rows();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
  int dropped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    if (x.norm() == 0.0) {
      ++dropped;  // q U_tilde degenerates to the zero vector
      continue;
    }
    const TransformedSample t = transform(x, y[i], tau);
    b += t.q_tilde * t.u_tilde;
  }
  if (skipped) *skipped = dropped;
  return b / static_cast<double>(n);
}

EstimateReport estimate_unconstrained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const SingleIndexConfig& cfg) {
  cfg.validate();
  if (cfg.sigma)
    throw std::invalid_argument("estimate_unconstrained: isotropic path only");
  EstimateReport report;
  const double tau = cfg.truncation_level(X.rows());
  const Eigen::VectorXd b = truncated_moment_vector(X, y, tau, &report.skipped_rows);
  const double half = cfg.lambda / 2.0;
  report.theta = b.unaryExpr([half](double v) {
    if (v >= half) return v - half;
    if (v <= -half) return v + half;
    return 0.0;
  });
  return report;
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("project_l1_ball: radius must be positive");
  if (v.lpNorm<1>() <= r) return v;
  // Sorted-threshold projection (Duchi et al., 2008).
  std::vector<double> mag(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());
  double cumsum = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    cumsum += mag[j];
    const double candidate = (cumsum - r) / static_cast<double>(j + 1);
    if (mag[j] - candidate > 0.0)
      threshold = candidate;
    else
      break;
  }
  return v.unaryExpr([threshold](double b) {
    const double m = std::abs(b) - threshold;
    return m > 0.0 ? (b > 0.0 ? m : -m) : 0.0;
  });
}

EstimateReport estimate_constrained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const SingleIndexConfig& cfg) {
  cfg.validate();
  if (!cfg.constraint_radius)
    throw std::invalid_argument("estimate_constrained: constraint radius required");
  EstimateReport report;
  const double tau = cfg.truncation_level(X.rows());
  const Eigen::VectorXd b = truncated_moment_vector(X, y, tau, &report.skipped_rows);
  // |theta|^2 - 2<b,theta> = |theta - b|^2 - |b|^2, so the constrained
  // minimizer is the projection of b onto the l1 ball.
  report.theta = project_l1_ball(b, *cfg.constraint_radius);
  return report;
}

EstimateReport estimate_nonisotropic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const SingleIndexConfig& cfg) {
  cfg.validate();
  if (!cfg.sigma)
    throw std::invalid_argument("estimate_nonisotropic: sigma required");
  const SymmetricMatrix whitener = invsqrt_psd(*cfg.sigma);  // throws when rank deficient
  const Eigen::MatrixXd X_white = X * whitener.matrix();     // rows x_i -> Sigma^{-1/2} x_i

  SingleIndexConfig inner = cfg;
  inner.sigma.reset();
  EstimateReport report = cfg.constraint_radius ? estimate_constrained(X_white, y, inner)
                                                : estimate_unconstrained(X_white, y, inner);
  report.theta = whitener.matrix() * report.theta;
  return report;
}

double relative_error(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star,
                      bool* zero_estimate) {
  const double star_norm = theta_star.norm();
  if (star_norm == 0.0) throw std::invalid_argument("relative_error: zero truth vector");
  if (zero_estimate) *zero_estimate = false;
  const double hat_norm = theta_hat.norm();
  if (hat_norm == 0.0) {
    if (zero_estimate) *zero_estimate = true;
    return 2.0;  // diameter of the unit sphere: worst possible value
  }
  return (theta_hat / hat_norm - theta_star / star_norm).norm();
}

}  // namespace heavytail
