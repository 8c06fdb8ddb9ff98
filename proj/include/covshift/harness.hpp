#pragma once

// Seeded experiment runner, rate regression, CSV I/O and the
// mis-specification demo.

#include "covshift/covariates.hpp"
#include "covshift/estimators.hpp"
#include "covshift/models.hpp"
#include "covshift/parallel.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace covshift {

enum class EstimatorKind { MLE, MWLE, ConstrainedMLE, PhaseMLE };
std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

// PiecewiseBall: responses follow beta_star inside the target ball
// (|x| <= target radius) and beta_star_outer outside it.
enum class TruthKind { WellSpecified, PiecewiseBall };

struct ExperimentConfig {
  ModelKind model = ModelKind::Linear;
  CovariateDistribution source = make_gaussian(Vector::Zero(1), 1.0);
  CovariateDistribution target = make_gaussian(Vector::Zero(1), 1.0);
  Vector beta_star = Vector::Zero(1);
  TruthKind truth = TruthKind::WellSpecified;
  Vector beta_star_outer;
  EstimatorKind estimator = EstimatorKind::MLE;
  std::vector<long long> n_grid;
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::size_t mc_eval_m = 20000;
  double noise_sd = 1.0;
  Vector constrained_center;
  double constrained_radius = 1.0;
  FitOptions fit;
};

/// Throws InvalidArgument / DimensionMismatch on an inconsistent config.
void validate(const ExperimentConfig& cfg);

struct TrialResult {
  ModelKind model = ModelKind::Linear;
  int d = 0;
  long long n = 0;
  int trial = 0;
  EstimatorKind estimator = EstimatorKind::MLE;
  double excess_risk = 0.0;
  double excess_risk_se = 0.0;
  double param_dist = 0.0;
  double aligned_dist = 0.0;  // NaN unless phase retrieval
  bool converged = false;
  std::uint64_t seed = 0;
};

/// Seed of trial `trial` at sample size n.
std::uint64_t trial_seed(std::uint64_t master_seed, long long n, int trial);

/// Draws n source observations under the configured truth.
Dataset draw_source_sample(const ExperimentConfig& cfg, long long n, Rng& rng);

/// One row per (n, trial), sorted by (n, trial). Estimator failures become
/// rows with converged = false and NaN risk. Output does not depend on the
/// policy or the worker count.
std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg,
                                        ExecPolicy policy = ExecPolicy::Parallel);

enum class RateMetric { ExcessRisk, AlignedDistSq, ParamDistSq };
RateMetric parse_rate_metric(std::string_view name);

struct RateReport {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::map<long long, double> mean_metric;
  std::map<long long, double> normalized_levels;  // n * mean / trace
};

/// OLS of log(mean metric) on log n. Needs >= 4 distinct n with >= 50 rows
/// each; non-finite metric values are skipped.
RateReport rate_fit(const std::vector<TrialResult>& rows, double trace,
                    RateMetric metric = RateMetric::ExcessRisk);

struct MisspecResult {
  double beta_mle = 0.0;
  double beta_mwle = 0.0;
  double beta_star = 0.0;
};

/// Source N(-mu, 1), target N(mu, 1), y = x^2 + N(0, 1); 1-D linear fits with
/// and without the weights exp(2 mu x). beta* = (mu^3 + 3 mu) / (mu^2 + 1).
MisspecResult misspec_demo(double mu, long long n, std::uint64_t seed);

inline constexpr const char* kCsvHeader =
    "model,d,n,trial,estimator,excess_risk,excess_risk_se,param_dist,aligned_dist,converged,seed";

void write_csv(std::ostream& out, const std::vector<TrialResult>& rows);
std::vector<TrialResult> read_csv(std::istream& in);

/// %.17g; NaN prints as "nan".
std::string format_double(double v);

}  // namespace covshift
