#pragma once

#include <optional>
#include <variant>

#include <Eigen/Core>

#include "heavytail/rng.hpp"

namespace heavytail {

// Radial law of an elliptical distribution x = mu * B * (sqrt(d) * U),
// U uniform on the unit sphere. The radial scalar mu is normalized so that
// E[mu^2] = 1, hence cov(x) = B B^T for every law below.
enum class RadialLaw {
  GaussianChi,        // mu = |g|_2 / sqrt(d), g standard normal in R^d; x ~ N(0, BB^T)
  SymmetrizedPareto,  // mu = (xi_1 - xi_2) / sqrt(2 c(q)), xi_i Pareto(q), q > 2
  Constant,           // mu = fixed value (degenerate; used for shape checks)
};

struct EllipticalSpec {
  Eigen::Index dim = 0;
  RadialLaw radial = RadialLaw::GaussianChi;
  double pareto_q = 2.1;      // tail exponent for SymmetrizedPareto
  double constant_value = 1.0;
  std::optional<Eigen::MatrixXd> covariance_factor;  // B with Sigma = B B^T; identity when absent

  void validate() const;  // throws std::invalid_argument
};

// Response models on top of a design matrix.
struct LinearModel {
  double noise_sigma = 0.0;  // y = <x,theta*> + N(0, sigma^2)
};
struct LogisticModel {};  // y ~ Bernoulli(e^z / (1 + e^z)), z = <x,theta*>
struct PoissonModel {};   // y ~ Poisson(e^z), z clamped to [-30, 30]
struct OneBitSignModel {
  // y = sign(<x,theta*>) + noise_scale * h, h symmetrized unit-variance Pareto(q).
  // noise_scale = 0 disables the noise; 1/sqrt(10) gives SNR 10 dB.
  double noise_scale = 0.0;
  double pareto_q = 2.1;
};
enum class IndexLink { Sign, Tanh, Cube };
struct SingleIndexModel {
  IndexLink link = IndexLink::Sign;
  double noise_sigma = 0.0;  // y = f(<x,theta*>) + N(0, sigma^2)
};

struct ModelSpec {
  Eigen::VectorXd theta_star;
  std::variant<LinearModel, LogisticModel, PoissonModel, OneBitSignModel, SingleIndexModel>
      model = LinearModel{};
};

// Uniform draw from the unit sphere in R^d (normalized Gaussian vector).
Eigen::VectorXd sample_unit_sphere(Rng& rng, Eigen::Index d);

// Pareto with density q (1+t)^{-(1+q)} on t > 0.
// Inverse CDF: t = u^{-1/q} - 1 for u in (0, 1].
double pareto_icdf(double u, double q);
double sample_pareto(Rng& rng, double q);

// Var(xi) = q / ((q-1)^2 (q-2)) for xi Pareto(q), finite iff q > 2.
double pareto_variance(double q);

// (xi_1 - xi_2) / sqrt(2 c(q)): symmetric with unit variance.
double sample_radial_symmetrized_pareto(Rng& rng, double q);

// Poisson draw; inversion below mean 10, Hormann's PTRS rejection above.
long sample_poisson(Rng& rng, double mean);

// n x d matrix with independent rows mu_i * B * (sqrt(d) * U_i).
Eigen::MatrixXd sample_elliptical(Rng& rng, const EllipticalSpec& spec, Eigen::Index n);

// Draws y_i from the model given the rows of X.
Eigen::VectorXd generate_responses(Rng& rng, const Eigen::MatrixXd& X, const ModelSpec& spec);

}  // namespace heavytail
