#pragma once

#include <vector>

#include <Eigen/Core>

#include "heavytail/robust_mean.hpp"
#include "heavytail/symmetric_matrix.hpp"

namespace heavytail {

struct CovConfig {
  double beta = 2.0;       // confidence; theta = (1/sigma) sqrt(beta/m)
  double sigma = 1.0;      // variance proxy when known (truncated_covariance callers)
  double sigma_min = 0.0;  // Lepski bracket, sigma_min <= sigma_0 <= sigma_max
  double sigma_max = 0.0;
  MoMConfig mom;
};

// (1/(m theta)) sum_i psi(theta Z_i Z_i^T), Z_i = X_i - mu_hat, computed via
// the rank-one form Z_i Z_i^T psi(theta |Z_i|^2) / |Z_i|^2. Rows with
// Z_i = 0 contribute nothing. Output is symmetric PSD.
SymmetricMatrix truncated_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& mu_hat,
                                     double theta);

struct LepskiTest {
  int j;         // candidate grid index
  int k;         // comparison index, k > j
  double distance;   // |Sigma_k - Sigma_j| (operator norm)
  double threshold;  // 6 sigma_k sqrt(beta/m)
  bool passed;
};

struct LepskiTrace {
  std::vector<double> sigma_grid;  // sigma_j = sigma_min 2^j over the bracket
  std::vector<LepskiTest> tests;   // every pairwise test evaluated, in order
  int chosen_index = 0;            // j* as an offset into sigma_grid
  bool fallback = false;           // no index passed; largest sigma returned
};

struct LepskiResult {
  SymmetricMatrix covariance;
  LepskiTrace trace;
};

// Adaptive estimator: grid sigma_j = sigma_min 2^j with sigma_j < 2 sigma_max,
// theta_j = (1/sigma_j) sqrt(beta/m), shared median-of-means center, and
// j* = min{ j : for all k > j, |Sigma_k - Sigma_j| <= 6 sigma_k sqrt(beta/m) }.
// When no index qualifies the largest grid point is returned with a flag.
LepskiResult lepski_covariance(const Eigen::MatrixXd& X, const CovConfig& cfg);

// Spectral soft-thresholding of the Lepski estimate at level tau.
SymmetricMatrix lowrank_covariance(const Eigen::MatrixXd& X, const CovConfig& cfg, double tau);

// Operator norm of the difference between the rank-k spectral projectors of
// the two matrices. Requires a positive top-k eigengap of sigma_true.
double pca_projector_distance(const SymmetricMatrix& sigma_hat,
                              const SymmetricMatrix& sigma_true, int k);

}  // namespace heavytail
