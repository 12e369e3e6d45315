#pragma once

#include <optional>

#include <Eigen/Core>

#include "heavytail/estimate_report.hpp"
#include "heavytail/symmetric_matrix.hpp"

namespace heavytail {

struct SingleIndexConfig {
  double kappa = 0.5;     // moment exponent, in (0, 1); truncation tau = c N^{1/(2(1+kappa))}
  double trunc_scale = 1.0;  // c
  double lambda = 0.0;       // l1 penalty (unconstrained estimator)
  std::optional<SymmetricMatrix> sigma;  // design covariance; whitening path when set
  std::optional<double> constraint_radius;  // l1-ball radius R (constrained estimator)

  double truncation_level(Eigen::Index n) const;  // c * n^{1/(2(1+kappa))}
  void validate() const;
};

// Polar factorization of one labelled sample: mu = |x|_2, U = x/mu,
// U_tilde = sqrt(d) U, q = mu y / sqrt(d), so q U_tilde = y x exactly.
// q_tilde clips q at the truncation level tau.
struct TransformedSample {
  Eigen::VectorXd u_tilde;
  double q = 0.0;
  double q_tilde = 0.0;
};

// Throws std::domain_error for x = 0 (batch callers skip such rows and count
// them in the report).
TransformedSample transform(const Eigen::VectorXd& x, double y, double tau);

// b = (1/N) sum_i q_tilde_i U_tilde_i; zero rows contribute nothing.
Eigen::VectorXd truncated_moment_vector(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        double tau, int* skipped = nullptr);

// Closed-form minimizer of |theta|^2 - 2 <b, theta> + lambda |theta|_1:
// coordinatewise soft-threshold of b at lambda/2.
EstimateReport estimate_unconstrained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const SingleIndexConfig& cfg);

// Minimizer of |theta|^2 - 2 <b, theta> over the l1 ball of radius R, i.e.
// the Euclidean projection of b onto that ball (sorted-threshold algorithm).
EstimateReport estimate_constrained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const SingleIndexConfig& cfg);

// Non-isotropic wrapper: whitens rows by Sigma^{-1/2}, runs the isotropic
// estimator (constrained when cfg.constraint_radius is set), and maps the
// result back through Sigma^{-1/2}.
EstimateReport estimate_nonisotropic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const SingleIndexConfig& cfg);

// Exact Euclidean projection onto the l1 ball of radius r.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double r);

// | theta_hat/|theta_hat| - theta_star/|theta_star| |_2. Returns the maximal
// value 2 (setting *zero_estimate) when theta_hat = 0; throws for
// theta_star = 0.
double relative_error(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star,
                      bool* zero_estimate = nullptr);

}  // namespace heavytail
