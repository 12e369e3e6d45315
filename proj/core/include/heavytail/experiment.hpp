#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace heavytail {

enum class Scenario {
  OneBitComparison,   // lasso vs soft-threshold estimator on 1-bit measurements
  CovarianceScaling,  // Lepski covariance operator error across sample sizes
  GlmRecovery,        // truncated GLM sparse recovery across sample sizes
  LowRankCovariance,  // spectrally thresholded covariance, Frobenius error
};

std::string scenario_name(Scenario s);

struct ExperimentSpec {
  Scenario scenario = Scenario::OneBitComparison;
  int trials = 200;
  std::uint64_t seed = 1;

  int d = 512;
  std::vector<int> n_values = {128};
  int sparsity = 5;
  int rank = 2;

  double pareto_q = 2.1;
  bool noise = false;      // one-bit noisy arm
  double snr_db = 10.0;    // noise scale 10^(-snr_db/20) when noise is on
  double noise_sigma = 0.5;  // additive Gaussian noise for GlmRecovery

  double kappa = 0.05;  // single-index truncation exponent
  double beta = 2.0;    // covariance confidence

  double sigma_min = 0.0;  // Lepski bracket (covariance scenarios)
  double sigma_max = 0.0;
  double sigma0 = 0.0;      // reference matrix variance (low-rank tau)
  double tau_factor = 36.0;

  int glm_max_iter = 500;
  double glm_tol = 1e-6;
};

// Collects every offending field; empty means the spec is runnable.
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

class SpecValidationError : public std::runtime_error {
 public:
  explicit SpecValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Strict JSON decoding: unknown keys and type mismatches are validation
// errors. Throws SpecValidationError.
ExperimentSpec parse_spec_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

struct TrialRecord {
  int trial = 0;
  std::string estimator;
  double error = 0.0;  // relative error, or a norm error for covariance scenarios
  double lambda = std::numeric_limits<double>::quiet_NaN();  // selected penalty / sigma_{j*}
  double c = std::numeric_limits<double>::quiet_NaN();       // selected truncation scale
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  int flags = 0;
};

// TrialRecord::flags bits.
inline constexpr int kFlagNotConverged = 1;
inline constexpr int kFlagZeroEstimate = 2;
inline constexpr int kFlagLepskiFallback = 4;
inline constexpr int kFlagSkippedRows = 8;

struct EstimatorSummary {
  std::string name;
  int count = 0;
  double median = 0.0;
  double mean = 0.0;
  std::array<int, 32> histogram{};  // equal-width bins over [0, 2], top bin clamps
};

struct ExperimentSummary {
  ExperimentSpec spec;
  int record_count = 0;
  double total_ms = 0.0;
  std::string cv_protocol;  // resolved hyperparameter-selection description
  std::vector<EstimatorSummary> estimators;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  ExperimentSummary summary;
};

// Runs trials * |n_values| independent tasks; task index t uses the stream
// seeded with spec.seed ^ t, so results do not depend on the thread count.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1);

std::string records_to_csv(const std::vector<TrialRecord>& records);
std::string summary_to_json(const ExperimentSummary& summary);

// Writes records.csv and summary.json under dir (created when missing).
void write_outputs(const std::vector<TrialRecord>& records, const ExperimentSummary& summary,
                   const std::filesystem::path& dir);

}  // namespace heavytail
