#include "heavytail/glm.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace heavytail {

namespace {
constexpr double kExpClamp = 30.0;
}

double Link::g(double z) const {
  switch (type_) {
    case Type::Linear:
      return 0.5 * z * z;
    case Type::Logistic: {
      const double zc = std::clamp(z, -kExpClamp, kExpClamp);
      // log(1 + e^z), stable on both tails
      return zc > 0.0 ? zc + std::log1p(std::exp(-zc)) : std::log1p(std::exp(zc));
    }
    case Type::Poisson:
      return std::exp(std::clamp(z, -kExpClamp, kExpClamp));
  }
  return 0.0;
}

double Link::g1(double z) const {
  switch (type_) {
    case Type::Linear:
      return z;
    case Type::Logistic: {
      const double zc = std::clamp(z, -kExpClamp, kExpClamp);
      return 1.0 / (1.0 + std::exp(-zc));
    }
    case Type::Poisson:
      return std::exp(std::clamp(z, -kExpClamp, kExpClamp));
  }
  return 0.0;
}

double Link::g2(double z) const {
  switch (type_) {
    case Type::Linear:
      return 1.0;
    case Type::Logistic: {
      const double s = g1(z);
      return s * (1.0 - s);
    }
    case Type::Poisson:
      return std::exp(std::clamp(z, -kExpClamp, kExpClamp));
  }
  return 0.0;
}

bool Link::would_clamp(double z) const {
  return type_ != Type::Linear && std::abs(z) > kExpClamp;
}

double design_truncation_level(Eigen::Index n, Eigen::Index d) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("design_truncation_level: empty design");
  // log(e d) = 1 + log d
  return std::pow(static_cast<double>(n) / (1.0 + std::log(static_cast<double>(d))), 0.25);
}

Eigen::MatrixXd truncate_design(const Eigen::MatrixXd& X) {
  const double tau = design_truncation_level(X.rows(), X.cols());
  return X.unaryExpr([tau](double v) { return std::clamp(v, -tau, tau); });
}

GlmObjective glm_objective(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, const Link& link, double lambda) {
  if (X.cols() != theta.size() || X.rows() != y.size())
    throw std::invalid_argument("glm_objective: shape mismatch");
  const Eigen::Index n = X.rows();
  const Eigen::VectorXd z = X * theta;
  GlmObjective out;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += link.g(z[i]) - y[i] * z[i];
    out.clamped = out.clamped || link.would_clamp(z[i]);
  }
  out.smooth = acc / static_cast<double>(n);
  out.penalty = lambda * theta.lpNorm<1>();
  out.value = out.smooth + out.penalty;
  return out;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  return v.unaryExpr([t](double b) {
    if (b > t) return b - t;
    if (b < -t) return b + t;
    return 0.0;
  });
}

namespace {

// max over coordinates of the distance to the l1 subdifferential condition.
double kkt_residual(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lambda) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double r = theta[i] == 0.0 ? std::max(std::abs(grad[i]) - lambda, 0.0)
                                     : std::abs(grad[i] + lambda * (theta[i] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace

EstimateReport fit_glm_erm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Link& link, const GlmConfig& cfg) {
  if (X.rows() < 2) throw std::invalid_argument("fit_glm_erm: needs at least two samples");
  if (X.rows() != y.size()) throw std::invalid_argument("fit_glm_erm: shape mismatch");
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("fit_glm_erm: lambda must be >= 0");

  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  EstimateReport report;
  report.converged = false;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  GlmObjective obj = glm_objective(theta, X, y, link, cfg.lambda);
  report.objective_trace.push_back(obj.value);
  report.overflow_clamped = obj.clamped;

  const auto gradient_of = [&](const Eigen::VectorXd& point) {
    const Eigen::VectorXd zz = X * point;
    Eigen::VectorXd gprime(n);
    for (Eigen::Index i = 0; i < n; ++i) gprime[i] = link.g1(zz[i]);
    return Eigen::VectorXd(X.transpose() * (gprime - y) * inv_n);
  };
  const auto smooth_of = [&](const Eigen::VectorXd& point) {
    return glm_objective(point, X, y, link, 0.0).smooth;
  };

  double step = cfg.initial_step;
  // Momentum state (accelerated mode only). Momentum is dropped for the
  // endgame: close to the solution it cycles through restarts instead of
  // settling, while plain steps polish quickly on the identified support.
  Eigen::VectorXd extrapolated = theta;
  Eigen::VectorXd theta_prev = theta;
  double momentum = 1.0;
  bool polishing = false;

  while (report.iterations < cfg.max_iter) {
    const Eigen::VectorXd grad = gradient_of(theta);
    report.kkt_residual = kkt_residual(theta, grad, cfg.lambda);
    const double kkt_target = cfg.tol * (1.0 + grad.lpNorm<Eigen::Infinity>());
    if (report.kkt_residual <= kkt_target) {
      report.converged = true;
      break;
    }
    if (report.kkt_residual <= 10.0 * kkt_target) polishing = true;
    const bool use_momentum = cfg.accelerate && !polishing;

    const Eigen::VectorXd& base = use_momentum ? extrapolated : theta;
    const Eigen::VectorXd grad_base = use_momentum ? gradient_of(base) : grad;
    const double smooth_base = use_momentum ? smooth_of(base) : obj.smooth;

    // Halving line search. Plain mode accepts on sufficient decrease of the
    // full objective; accelerated mode accepts on the quadratic majorization
    // of the smooth part at the extrapolated point.
    step *= 2.0;
    Eigen::VectorXd candidate;
    GlmObjective cand_obj;
    double move2 = 0.0;
    for (;;) {
      candidate = soft_threshold(base - step * grad_base, step * cfg.lambda);
      cand_obj = glm_objective(candidate, X, y, link, cfg.lambda);
      move2 = (candidate - base).squaredNorm();
      if (move2 == 0.0) break;
      bool accept;
      if (use_momentum) {
        const double model = smooth_base + grad_base.dot(candidate - base) +
                             move2 / (2.0 * step);
        accept = cand_obj.smooth <= model + 1e-12 * (1.0 + std::abs(model));
      } else {
        accept = cand_obj.value <= obj.value - cfg.backtrack_decrease * move2 / step;
      }
      if (accept) break;
      step *= 0.5;
      if (step < 1e-18) break;
    }
    if ((move2 == 0.0 || step < 1e-18) &&
        (!use_momentum || (extrapolated - theta).squaredNorm() == 0.0))
      break;  // prox fixed point at machine precision

    if (use_momentum) {
      if (cand_obj.value > obj.value || move2 == 0.0 || step < 1e-18) {
        // Momentum overshot: restart the extrapolation at the current point.
        momentum = 1.0;
        extrapolated = theta;
        ++report.iterations;
        continue;
      }
      theta_prev = theta;
      theta = candidate;
      obj = cand_obj;
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      extrapolated = theta + ((momentum - 1.0) / next_momentum) * (theta - theta_prev);
      momentum = next_momentum;
    } else {
      theta = candidate;
      obj = cand_obj;
    }
    ++report.iterations;
    report.objective_trace.push_back(obj.value);
    report.overflow_clamped = report.overflow_clamped || obj.clamped;
  }

  if (!report.converged) {
    // Left by stalling or by the iteration cap; report the residual as it
    // stands (the solution may still satisfy the optimality test).
    const Eigen::VectorXd grad = gradient_of(theta);
    report.kkt_residual = kkt_residual(theta, grad, cfg.lambda);
    report.converged =
        report.kkt_residual <= cfg.tol * (1.0 + grad.lpNorm<Eigen::Infinity>());
  }
  report.theta = theta;
  report.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

EstimateReport fit_truncated_glm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Link& link, const GlmConfig& cfg) {
  return fit_glm_erm(truncate_design(X), y, link, cfg);
}

EstimateReport fit_lasso_baseline(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const GlmConfig& cfg) {
  return fit_glm_erm(X, y, Link::linear(), cfg);
}

}  // namespace heavytail
