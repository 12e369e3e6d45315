#include "heavytail/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace heavytail {

void EllipticalSpec::validate() const {
  if (dim <= 0) throw std::invalid_argument("EllipticalSpec: dim must be positive");
  if (radial == RadialLaw::SymmetrizedPareto && !(pareto_q > 2.0))
    throw std::invalid_argument("EllipticalSpec: SymmetrizedPareto requires q > 2");
  if (covariance_factor) {
    if (covariance_factor->rows() != dim || covariance_factor->cols() != dim)
      throw std::invalid_argument("EllipticalSpec: covariance_factor must be dim x dim");
    if (!covariance_factor->allFinite())
      throw std::invalid_argument("EllipticalSpec: covariance_factor has non-finite entries");
  }
}

Eigen::VectorXd sample_unit_sphere(Rng& rng, Eigen::Index d) {
  if (d <= 0) throw std::invalid_argument("sample_unit_sphere: dimension must be positive");
  Eigen::VectorXd v(d);
  double norm2;
  do {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 == 0.0);
  v /= std::sqrt(norm2);
  return v;
}

double pareto_icdf(double u, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("pareto_icdf: q must be positive");
  if (!(u > 0.0) || u > 1.0) throw std::invalid_argument("pareto_icdf: u must lie in (0, 1]");
  return std::pow(u, -1.0 / q) - 1.0;
}

double sample_pareto(Rng& rng, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("sample_pareto: q must be positive");
  return pareto_icdf(rng.uniform_open_closed(), q);
}

double pareto_variance(double q) {
  if (!(q > 2.0)) throw std::invalid_argument("pareto_variance: finite only for q > 2");
  return q / ((q - 1.0) * (q - 1.0) * (q - 2.0));
}

double sample_radial_symmetrized_pareto(Rng& rng, double q) {
  if (!(q > 2.0))
    throw std::invalid_argument("sample_radial_symmetrized_pareto: q must exceed 2");
  const double scale = 1.0 / std::sqrt(2.0 * pareto_variance(q));
  const double a = sample_pareto(rng, q);
  const double b = sample_pareto(rng, q);
  return scale * (a - b);
}

namespace {

long poisson_inversion(Rng& rng, double mean) {
  const double limit = std::exp(-mean);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform_open_closed();
  } while (p > limit);
  return k - 1;
}

// Transformed rejection with squeeze (Hormann 1993), valid for mean >= 10.
long poisson_ptrs(Rng& rng, double mean) {
  const double log_mean = std::log(mean);
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform_open_closed();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_mean - mean - std::lgamma(k + 1.0))
      return static_cast<long>(k);
  }
}

double radial_draw(Rng& rng, const EllipticalSpec& spec) {
  switch (spec.radial) {
    case RadialLaw::GaussianChi: {
      // |g|_2 / sqrt(d): combined with the sqrt(d)-sphere convention this
      // makes the row exactly N(0, B B^T).
      double s = 0.0;
      for (Eigen::Index i = 0; i < spec.dim; ++i) {
        const double g = rng.normal();
        s += g * g;
      }
      return std::sqrt(s / static_cast<double>(spec.dim));
    }
    case RadialLaw::SymmetrizedPareto:
      return sample_radial_symmetrized_pareto(rng, spec.pareto_q);
    case RadialLaw::Constant:
      return spec.constant_value;
  }
  throw std::logic_error("radial_draw: unknown radial law");
}

int sign_of(double z) { return (z > 0.0) - (z < 0.0); }

}  // namespace

long sample_poisson(Rng& rng, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("sample_poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  return mean < 10.0 ? poisson_inversion(rng, mean) : poisson_ptrs(rng, mean);
}

Eigen::MatrixXd sample_elliptical(Rng& rng, const EllipticalSpec& spec, Eigen::Index n) {
  spec.validate();
  const Eigen::Index d = spec.dim;
  const double root_d = std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd rows(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = radial_draw(rng, spec);
    Eigen::VectorXd u = sample_unit_sphere(rng, d);
    Eigen::VectorXd x = (mu * root_d) * u;
    if (spec.covariance_factor) x = (*spec.covariance_factor) * x;
    rows.row(i) = x.transpose();
  }
  return rows;
}

Eigen::VectorXd generate_responses(Rng& rng, const Eigen::MatrixXd& X, const ModelSpec& spec) {
  if (spec.theta_star.size() != X.cols())
    throw std::invalid_argument("generate_responses: theta_star dimension does not match X");
  const Eigen::VectorXd z = X * spec.theta_star;
  const Eigen::Index n = X.rows();
  Eigen::VectorXd y(n);

  if (const auto* linear = std::get_if<LinearModel>(&spec.model)) {
    for (Eigen::Index i = 0; i < n; ++i)
      y[i] = z[i] + (linear->noise_sigma > 0.0 ? linear->noise_sigma * rng.normal() : 0.0);
  } else if (std::holds_alternative<LogisticModel>(spec.model)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-z[i]));
      y[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
  } else if (std::holds_alternative<PoissonModel>(spec.model)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double zc = std::clamp(z[i], -30.0, 30.0);
      y[i] = static_cast<double>(sample_poisson(rng, std::exp(zc)));
    }
  } else if (const auto* onebit = std::get_if<OneBitSignModel>(&spec.model)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = static_cast<double>(sign_of(z[i]));
      if (onebit->noise_scale > 0.0)
        y[i] += onebit->noise_scale * sample_radial_symmetrized_pareto(rng, onebit->pareto_q);
    }
  } else if (const auto* si = std::get_if<SingleIndexModel>(&spec.model)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double f;
      switch (si->link) {
        case IndexLink::Sign: f = static_cast<double>(sign_of(z[i])); break;
        case IndexLink::Tanh: f = std::tanh(z[i]); break;
        case IndexLink::Cube: f = z[i] * z[i] * z[i]; break;
        default: throw std::logic_error("generate_responses: unknown link");
      }
      y[i] = f + (si->noise_sigma > 0.0 ? si->noise_sigma * rng.normal() : 0.0);
    }
  } else {
    throw std::logic_error("generate_responses: unknown model");
  }
  return y;
}

}  // namespace heavytail
