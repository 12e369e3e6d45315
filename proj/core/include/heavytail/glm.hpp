#pragma once

#include <Eigen/Core>

#include "heavytail/estimate_report.hpp"

namespace heavytail {

// Canonical exponential-family links. g is the cumulant, so the negative
// log-likelihood of a sample is g(<x,theta>) - y <x,theta> up to constants:
//   Linear:   g(z) = z^2 / 2
//   Logistic: g(z) = log(1 + e^z)
//   Poisson:  g(z) = e^z
// Exponent arguments are clamped to [-30, 30]; callers can detect this via
// Link::would_clamp.
class Link {
 public:
  enum class Type { Linear, Logistic, Poisson };

  static Link linear() { return Link(Type::Linear); }
  static Link logistic() { return Link(Type::Logistic); }
  static Link poisson() { return Link(Type::Poisson); }

  Type type() const { return type_; }
  double g(double z) const;
  double g1(double z) const;  // g'
  double g2(double z) const;  // g'', strictly positive
  bool would_clamp(double z) const;

 private:
  explicit Link(Type t) : type_(t) {}
  Type type_;
};

// Coordinatewise clipping x -> sign(x) min(|x|, tau) with
// tau = (N / log(e d))^{1/4}, N = rows, d = cols.
double design_truncation_level(Eigen::Index n, Eigen::Index d);
Eigen::MatrixXd truncate_design(const Eigen::MatrixXd& X);

struct GlmConfig {
  double lambda = 0.0;  // l1 penalty weight
  int max_iter = 2000;
  double tol = 1e-8;                  // KKT tolerance, relative to 1 + |grad|_inf
  double backtrack_decrease = 1e-4;   // sufficient-decrease factor
  double initial_step = 1.0;
  // Nesterov momentum with restart on objective increase; off by default so
  // the plain iteration keeps a monotone objective trace.
  bool accelerate = false;
};

struct GlmObjective {
  double value = 0.0;    // smooth + penalty
  double smooth = 0.0;   // (1/N) sum [ g(<x_i,theta>) - y_i <x_i,theta> ]
  double penalty = 0.0;  // lambda |theta|_1
  bool clamped = false;
};

GlmObjective glm_objective(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, const Link& link, double lambda);

// Proximal prox of the l1 norm: coordinatewise soft-threshold at level t.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t);

// l1-penalized GLM fit on the given design (no truncation applied here);
// ISTA with halving backtracking line search from theta = 0.
EstimateReport fit_glm_erm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Link& link, const GlmConfig& cfg);

// Same fit on the coordinate-truncated design truncate_design(X).
EstimateReport fit_truncated_glm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Link& link, const GlmConfig& cfg);

// Plain Lasso comparison arm: linear link, raw design.
EstimateReport fit_lasso_baseline(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const GlmConfig& cfg);

}  // namespace heavytail
