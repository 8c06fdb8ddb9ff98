#include "covshift/models.hpp"

#include <cmath>
#include <string>

namespace covshift {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Logistic: return "logistic";
    case ModelKind::PhaseRetrieval: return "phase";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "logistic") return ModelKind::Logistic;
  if (name == "phase" || name == "phase_retrieval") return ModelKind::PhaseRetrieval;
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + std::string(name) + "'");
}

Dataset Dataset::from_observations(std::span<const Observation> obs) {
  Dataset data;
  if (obs.empty()) return data;
  const Eigen::Index d = obs.front().x.size();
  data.x.resize(static_cast<Eigen::Index>(obs.size()), d);
  data.y.resize(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    require_same_dim(obs[i].x.size(), d, "Dataset::from_observations");
    data.x.row(static_cast<Eigen::Index>(i)) = obs[i].x.transpose();
    data.y(static_cast<Eigen::Index>(i)) = obs[i].y;
  }
  return data;
}

double softplus(double t) {
  // log(1 + e^t) without overflow
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double logistic_sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

MarginDerivatives margin_derivatives(ModelKind model, double t, double y) {
  switch (model) {
    case ModelKind::Linear: {
      const double r = y - t;
      return {0.5 * r * r, -r, 1.0};
    }
    case ModelKind::Logistic: {
      // 1/(2 + e^t + e^-t) == s(1-s); the product form stays finite for large |t|.
      const double s = logistic_sigmoid(t);
      return {softplus(t) - y * t, s - y, s * (1.0 - s)};
    }
    case ModelKind::PhaseRetrieval: {
      const double r = y - t * t;
      return {0.5 * r * r, 2.0 * t * t * t - 2.0 * t * y, 6.0 * t * t - 2.0 * y};
    }
  }
  return {0.0, 0.0, 0.0};
}

namespace {

void check_observation(ModelKind model, const Observation& obs, const Vector& beta,
                       const char* where) {
  require_same_dim(obs.x.size(), beta.size(), where);
  if (model == ModelKind::Logistic && obs.y != 0.0 && obs.y != 1.0) {
    throw Error(ErrorCode::InvalidArgument, std::string(where) + ": logistic response must be 0 or 1");
  }
}

void check_weights(const Dataset& data, std::span<const double> weights) {
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != data.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights length does not match sample size");
  }
}

double weight_at(std::span<const double> weights, Eigen::Index i) {
  return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
}

}  // namespace

double loss(ModelKind model, const Observation& obs, const Vector& beta) {
  check_observation(model, obs, beta, "loss");
  return margin_derivatives(model, obs.x.dot(beta), obs.y).loss;
}

Vector gradient(ModelKind model, const Observation& obs, const Vector& beta) {
  check_observation(model, obs, beta, "gradient");
  return margin_derivatives(model, obs.x.dot(beta), obs.y).d1 * obs.x;
}

Matrix hessian(ModelKind model, const Observation& obs, const Vector& beta) {
  check_observation(model, obs, beta, "hessian");
  const double d2 = margin_derivatives(model, obs.x.dot(beta), obs.y).d2;
  // Form x x' before scaling; Eigen would otherwise fold d2 into one factor
  // and lose exact symmetry.
  Matrix h = obs.x * obs.x.transpose();
  h *= d2;
  return h;
}

double sample_response(ModelKind model, const Vector& x, const Vector& beta_star, Rng& rng,
                       double noise_sd) {
  require_same_dim(x.size(), beta_star.size(), "sample_response");
  const double t = x.dot(beta_star);
  switch (model) {
    case ModelKind::Linear:
      return t + noise_sd * standard_normal(rng);
    case ModelKind::Logistic:
      return uniform01(rng) < logistic_sigmoid(t) ? 1.0 : 0.0;
    case ModelKind::PhaseRetrieval:
      return t * t + noise_sd * standard_normal(rng);
  }
  return 0.0;
}

double conditional_excess(ModelKind model, const Vector& x, const Vector& beta,
                          const Vector& beta_star) {
  require_same_dim(x.size(), beta.size(), "conditional_excess");
  require_same_dim(x.size(), beta_star.size(), "conditional_excess");
  const double t = x.dot(beta);
  const double t_star = x.dot(beta_star);
  switch (model) {
    case ModelKind::Linear: {
      const double diff = t - t_star;
      return 0.5 * diff * diff;
    }
    case ModelKind::Logistic: {
      // Two-point expectation over y in {0,1} with P(y=1) = sigmoid(t_star).
      const double p = logistic_sigmoid(t_star);
      return softplus(t) - softplus(t_star) - p * (t - t_star);
    }
    case ModelKind::PhaseRetrieval: {
      const double diff = t * t - t_star * t_star;
      return 0.5 * diff * diff;
    }
  }
  return 0.0;
}

double empirical_loss(ModelKind model, const Dataset& data, const Vector& beta,
                      std::span<const double> weights) {
  require_same_dim(data.dim(), beta.size(), "empirical_loss");
  check_weights(data, weights);
  const Vector t = data.x * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double w = weight_at(weights, i);
    if (w == 0.0) continue;
    total += w * margin_derivatives(model, t(i), data.y(i)).loss;
  }
  return total / static_cast<double>(data.size());
}

Vector empirical_gradient(ModelKind model, const Dataset& data, const Vector& beta,
                          std::span<const double> weights) {
  require_same_dim(data.dim(), beta.size(), "empirical_gradient");
  check_weights(data, weights);
  const Vector t = data.x * beta;
  Vector coef(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    coef(i) = weight_at(weights, i) * margin_derivatives(model, t(i), data.y(i)).d1;
  }
  return data.x.transpose() * coef / static_cast<double>(data.size());
}

Matrix empirical_hessian(ModelKind model, const Dataset& data, const Vector& beta,
                         std::span<const double> weights) {
  require_same_dim(data.dim(), beta.size(), "empirical_hessian");
  check_weights(data, weights);
  const Vector t = data.x * beta;
  Vector coef(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    coef(i) = weight_at(weights, i) * margin_derivatives(model, t(i), data.y(i)).d2;
  }
  Matrix h = data.x.transpose() * coef.asDiagonal() * data.x;
  h /= static_cast<double>(data.size());
  return 0.5 * (h + h.transpose());
}

}  // namespace covshift
