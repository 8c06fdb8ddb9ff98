#pragma once

// Linear, logistic and phase-retrieval likelihoods. All three are generalized
// linear in the margin t = x'beta: the loss depends on (t, y) only, so the
// gradient is d1(t, y) * x and the Hessian is d2(t, y) * x x'.
//
// Losses drop parameter-free additive constants (the 0.5*log(2*pi) term of the
// Gaussian likelihoods); argmins and excess risks are unaffected.

#include "covshift/rng.hpp"
#include "covshift/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace covshift {

enum class ModelKind { Linear, Logistic, PhaseRetrieval };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct Observation {
  Vector x;
  double y = 0.0;
};

/// Design matrix plus responses; row i of x is the i-th covariate.
struct Dataset {
  Matrix x;
  Vector y;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }

  static Dataset from_observations(std::span<const Observation> obs);
};

struct MarginDerivatives {
  double loss;
  double d1;  // d loss / dt
  double d2;  // d^2 loss / dt^2
};

MarginDerivatives margin_derivatives(ModelKind model, double t, double y);

double loss(ModelKind model, const Observation& obs, const Vector& beta);
Vector gradient(ModelKind model, const Observation& obs, const Vector& beta);
Matrix hessian(ModelKind model, const Observation& obs, const Vector& beta);

/// Draws y | x under beta_star. noise_sd scales the Gaussian noise of the
/// linear and phase models (1 is the model as stated); it is ignored for
/// logistic, where P(Y=1|x) = 1/(1+exp(-x'beta_star)).
double sample_response(ModelKind model, const Vector& x, const Vector& beta_star, Rng& rng,
                       double noise_sd = 1.0);

/// E[loss(x,y,beta) - loss(x,y,beta_star) | x] with y drawn under beta_star.
double conditional_excess(ModelKind model, const Vector& x, const Vector& beta,
                          const Vector& beta_star);

// Weighted empirical objective (1/n) sum_i w_i loss(x_i, y_i, beta). An empty
// weight span means unit weights.
double empirical_loss(ModelKind model, const Dataset& data, const Vector& beta,
                      std::span<const double> weights = {});
Vector empirical_gradient(ModelKind model, const Dataset& data, const Vector& beta,
                          std::span<const double> weights = {});
Matrix empirical_hessian(ModelKind model, const Dataset& data, const Vector& beta,
                         std::span<const double> weights = {});

double softplus(double t);
double logistic_sigmoid(double t);

}  // namespace covshift
