#pragma once

#include <vector>

#include <Eigen/Core>

namespace heavytail {

struct MoMConfig {
  double beta = 2.0;  // confidence parameter; group count k = floor(3.5 beta) + 1
  double weiszfeld_tol = 1e-9;
  int weiszfeld_max_iter = 500;
};

// k = floor(3.5 beta) + 1.
int mom_group_count(double beta);

struct GeometricMedianResult {
  Eigen::VectorXd point;
  bool converged = false;
  int iterations = 0;
  // Norm of the minimum-norm subgradient of sum_j |z - x_j| at the returned
  // point (exactly 0 certifies optimality; small values certify near-optimality).
  double subgradient_norm = 0.0;
};

// argmin_z sum_j |z - x_j|_2 by Weiszfeld iteration. When an iterate lands on
// a data point, the subgradient condition is tested there; if it fails, the
// iterate steps off along the descent direction (Vardi-Zhang).
// tol is relative to the point-cloud diameter.
GeometricMedianResult geometric_median(const std::vector<Eigen::VectorXd>& points,
                                       double tol = 1e-9, int max_iter = 500);

// Splits the m rows of X into k disjoint groups of floor(m/k) samples each
// (leftover rows discarded), averages each group, and returns the geometric
// median of the group means. Requires m >= 2k.
Eigen::VectorXd median_of_means(const Eigen::MatrixXd& X, const MoMConfig& cfg);

}  // namespace heavytail
