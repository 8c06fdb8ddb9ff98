#pragma once

#include "covshift/models.hpp"

#include <cstdint>
#include <span>
#include <variant>

namespace covshift {

/// Damped Newton (convex models) or backtracking gradient descent (phase
/// retrieval, projected fits).
struct NewtonDamped {};
/// Plain (projected) gradient descent with a fixed step.
struct GradientFixed {
  double step = 0.1;
};
using StepRule = std::variant<NewtonDamped, GradientFixed>;

struct FitOptions {
  int max_iterations = 100;
  double grad_tol = 1e-10;
  double ridge = 1e-10;
  StepRule step_rule = NewtonDamped{};
  int restarts = 5;         // phase retrieval only
  std::uint64_t seed = 0;   // phase retrieval restart perturbations
};

struct Estimate {
  Vector beta_hat;
  bool converged = false;
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool ridge_applied = false;
};

/// Minimizer of the empirical negative log-likelihood. Linear uses the normal
/// equations, Logistic damped Newton, PhaseRetrieval fit_phase_retrieval().
/// Throws SingularDesign for a rank-deficient linear design.
Estimate fit_mle(ModelKind model, const Dataset& data, const FitOptions& opts = {});

/// Minimizer of (1/n) sum_i w_i loss(x_i, y_i, beta). Needs at least d strictly
/// positive weights (DegenerateWeights otherwise).
Estimate fit_mwle(ModelKind model, const Dataset& data, std::span<const double> weights,
                  const FitOptions& opts = {});

/// Empirical-loss minimizer over the closed ball B(center, radius), by
/// projected gradient with backtracking. final_grad_norm is the norm of the
/// gradient mapping, which vanishes exactly at constrained stationary points.
Estimate fit_constrained_mle(ModelKind model, const Dataset& data, const Vector& center,
                             double radius, const FitOptions& opts = {});

/// Phase-retrieval MLE: spectral initialization followed by gradient descent
/// from the initializer and from opts.restarts - 1 random perturbations of
/// it; the run with the lowest empirical loss wins.
Estimate fit_phase_retrieval(const Dataset& data, const FitOptions& opts = {},
                             std::span<const double> weights = {});

/// min(|a - b|, |a + b|): parameter error modulo the global sign of phase retrieval.
double aligned_distance(const Vector& beta_hat, const Vector& beta_star);

/// Leading eigenvector of (1/(2n)) sum_i w_i y_i x_i x_i' by shifted power
/// iteration. Throws SpectralFailure if the iteration stagnates.
Vector spectral_direction(const Dataset& data, std::span<const double> weights = {});

}  // namespace covshift
