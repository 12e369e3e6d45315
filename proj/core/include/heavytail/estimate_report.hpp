#pragma once

#include <vector>

#include <Eigen/Core>

namespace heavytail {

// Output bundle shared by the iterative and closed-form estimators.
struct EstimateReport {
  Eigen::VectorXd theta;
  bool converged = true;
  int iterations = 0;
  std::vector<double> objective_trace;  // accepted objective values, one per iteration
  double kkt_residual = 0.0;
  bool overflow_clamped = false;  // an exp() argument was clamped during the fit
  int skipped_rows = 0;           // degenerate samples dropped by a transform
  double elapsed_ms = 0.0;
};

}  // namespace heavytail
