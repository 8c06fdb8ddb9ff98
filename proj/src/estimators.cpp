#include "covshift/estimators.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace covshift {

namespace {

constexpr double kMinRcond = 1e-12;
constexpr int kMaxHalvings = 60;
// Rounding slack when comparing two evaluations of an n-term average.
constexpr double kLossNoise = 64.0 * std::numeric_limits<double>::epsilon();

void validate_data(ModelKind model, const Dataset& data) {
  if (data.size() < 1) throw Error(ErrorCode::InvalidArgument, "fit: empty dataset");
  require_same_dim(data.y.size(), data.size(), "fit: responses");
  if (!data.x.allFinite() || !data.y.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "fit: non-finite observation");
  }
  if (model == ModelKind::Logistic) {
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      if (data.y(i) != 0.0 && data.y(i) != 1.0) {
        throw Error(ErrorCode::InvalidArgument, "fit: logistic response must be 0 or 1");
      }
    }
  }
}

void validate_options(const FitOptions& opts) {
  if (opts.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "fit: max_iterations < 1");
  if (!(opts.grad_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fit: grad_tol < 0");
  if (!(opts.ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fit: ridge < 0");
  if (const auto* g = std::get_if<GradientFixed>(&opts.step_rule); g && !(g->step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fit: fixed step must be positive");
  }
}

void validate_weights(const Dataset& data, std::span<const double> weights) {
  if (static_cast<Eigen::Index>(weights.size()) != data.size()) {
    throw Error(ErrorCode::DimensionMismatch, "fit_mwle: weights length does not match sample size");
  }
  Eigen::Index active = 0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "fit_mwle: weights must be finite and nonnegative");
    }
    if (w > 0.0) ++active;
  }
  if (active < data.dim()) {
    throw Error(ErrorCode::DegenerateWeights, "fit_mwle: " + std::to_string(active) +
                                                  " positive weights for dimension " +
                                                  std::to_string(data.dim()));
  }
}

Estimate fit_linear(const Dataset& data, std::span<const double> weights) {
  // Unit weights go through the same arithmetic so MLE and MWLE with w = 1 agree bitwise.
  const Vector unit = weights.empty() ? Vector::Ones(data.size()) : Vector();
  const Eigen::Map<const Vector> w(weights.empty() ? unit.data() : weights.data(), data.size());
  const Matrix gram = data.x.transpose() * w.asDiagonal() * data.x;
  const Vector rhs = data.x.transpose() * w.cwiseProduct(data.y);
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond)) {
    throw Error(ErrorCode::SingularDesign, "fit_mle: rank-deficient design");
  }
  Estimate est;
  est.beta_hat = llt.solve(rhs);
  est.converged = true;
  est.iterations = 1;
  est.final_grad_norm = empirical_gradient(ModelKind::Linear, data, est.beta_hat, weights).norm();
  return est;
}

// Newton direction -H^{-1} g; adds ridge*I once if H is not safely positive definite.
Vector newton_direction(const Matrix& h, const Vector& g, double ridge, bool& ridge_applied) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success && llt.rcond() >= kMinRcond) return -llt.solve(g);
  ridge_applied = true;
  llt.compute(h + ridge * Matrix::Identity(h.rows(), h.cols()));
  if (llt.info() == Eigen::Success) return -llt.solve(g);
  return -g;
}

// Descent driver shared by Newton and gradient fits. Steps are halved until
// the loss strictly decreases; once the decrease falls below floating-point
// resolution a step that keeps the loss (up to rounding) and shrinks the
// gradient is accepted.
Estimate descend(ModelKind model, const Dataset& data, std::span<const double> weights,
                 Vector beta, const FitOptions& opts, bool use_newton) {
  Estimate est;
  double f = empirical_loss(model, data, beta, weights);
  Vector g = empirical_gradient(model, data, beta, weights);
  const auto* fixed = std::get_if<GradientFixed>(&opts.step_rule);
  double gd_step = 1.0;
  if (!use_newton && !fixed) {
    const double lmax =
        empirical_hessian(model, data, beta, weights).cwiseAbs().rowwise().sum().maxCoeff();
    gd_step = lmax > 0.0 ? 1.0 / lmax : 1.0;
  }

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (g.norm() <= opts.grad_tol) break;
    if (fixed) {
      beta -= fixed->step * g;
      f = empirical_loss(model, data, beta, weights);
      g = empirical_gradient(model, data, beta, weights);
      if (!beta.allFinite()) break;
      continue;
    }
    Vector dir;
    double step;
    if (use_newton) {
      dir = newton_direction(empirical_hessian(model, data, beta, weights), g, opts.ridge,
                             est.ridge_applied);
      step = 1.0;
    } else {
      dir = -g;
      step = gd_step * 2.0;
    }
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      const Vector cand = beta + step * dir;
      const double fc = empirical_loss(model, data, cand, weights);
      if (!std::isfinite(fc)) continue;
      const bool armijo = fc < f + 1e-4 * step * g.dot(dir);
      if (armijo || fc < f) {
        beta = cand;
        f = fc;
        g = empirical_gradient(model, data, beta, weights);
        accepted = true;
        break;
      }
      if (fc <= f + kLossNoise * (std::abs(f) + 1.0)) {
        Vector gc = empirical_gradient(model, data, cand, weights);
        if (gc.norm() < g.norm()) {
          beta = cand;
          g = std::move(gc);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;
    if (!use_newton) gd_step = step;
  }
  est.beta_hat = std::move(beta);
  est.iterations = it;
  est.final_grad_norm = g.norm();
  est.converged = est.final_grad_norm <= opts.grad_tol;
  return est;
}

Vector project_ball(const Vector& beta, const Vector& center, double radius) {
  const Vector offset = beta - center;
  const double norm = offset.norm();
  if (norm <= radius) return beta;
  return center + offset * (radius / norm);
}

Estimate fit_dispatch(ModelKind model, const Dataset& data, std::span<const double> weights,
                      const FitOptions& opts) {
  switch (model) {
    case ModelKind::Linear:
      return fit_linear(data, weights);
    case ModelKind::Logistic: {
      const bool newton = std::holds_alternative<NewtonDamped>(opts.step_rule);
      return descend(model, data, weights, Vector::Zero(data.dim()), opts, newton);
    }
    case ModelKind::PhaseRetrieval:
      return fit_phase_retrieval(data, opts, weights);
  }
  throw Error(ErrorCode::InvalidArgument, "fit: unknown model");
}

}  // namespace

Estimate fit_mle(ModelKind model, const Dataset& data, const FitOptions& opts) {
  validate_data(model, data);
  validate_options(opts);
  return fit_dispatch(model, data, {}, opts);
}

Estimate fit_mwle(ModelKind model, const Dataset& data, std::span<const double> weights,
                  const FitOptions& opts) {
  validate_data(model, data);
  validate_options(opts);
  validate_weights(data, weights);
  return fit_dispatch(model, data, weights, opts);
}

Estimate fit_constrained_mle(ModelKind model, const Dataset& data, const Vector& center,
                             double radius, const FitOptions& opts) {
  validate_data(model, data);
  validate_options(opts);
  require_same_dim(center.size(), data.dim(), "fit_constrained_mle");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::InvalidArgument, "fit_constrained_mle: radius must be positive");
  }
  const auto* fixed = std::get_if<GradientFixed>(&opts.step_rule);

  Estimate est;
  Vector beta = center;
  double f = empirical_loss(model, data, beta);
  Vector g = empirical_gradient(model, data, beta);
  double mapping_norm = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    double lipschitz;
    if (fixed) {
      lipschitz = 1.0 / fixed->step;
    } else {
      // Gershgorin bound on the local curvature, then backtrack on the
      // quadratic upper model.
      lipschitz = empirical_hessian(model, data, beta).cwiseAbs().rowwise().sum().maxCoeff();
      lipschitz = std::max(lipschitz, 1e-12);
    }
    Vector cand;
    double fc = f;
    for (int h = 0; h < kMaxHalvings; ++h) {
      cand = project_ball(beta - g / lipschitz, center, radius);
      if (fixed) break;
      fc = empirical_loss(model, data, cand);
      const Vector diff = cand - beta;
      if (fc <= f + g.dot(diff) + 0.5 * lipschitz * diff.squaredNorm()) break;
      lipschitz *= 2.0;
    }
    mapping_norm = lipschitz * (beta - cand).norm();
    if (mapping_norm <= opts.grad_tol) break;
    beta = cand;
    f = fixed ? empirical_loss(model, data, beta) : fc;
    g = empirical_gradient(model, data, beta);
  }
  if (it == opts.max_iterations) {
    // Report stationarity at the returned point.
    const double lipschitz = fixed ? 1.0 / fixed->step
                                   : std::max(empirical_hessian(model, data, beta)
                                                  .cwiseAbs()
                                                  .rowwise()
                                                  .sum()
                                                  .maxCoeff(),
                                              1e-12);
    mapping_norm = lipschitz * (beta - project_ball(beta - g / lipschitz, center, radius)).norm();
  }
  est.beta_hat = std::move(beta);
  est.iterations = it;
  est.final_grad_norm = mapping_norm;
  est.converged = mapping_norm <= opts.grad_tol;
  return est;
}

Vector spectral_direction(const Dataset& data, std::span<const double> weights) {
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();
  Vector coef = data.y;
  if (!weights.empty()) {
    coef = coef.cwiseProduct(
        Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size())));
  }
  Matrix m = data.x.transpose() * coef.asDiagonal() * data.x;
  m /= 2.0 * static_cast<double>(n);
  m = 0.5 * (m + m.transpose());

  // Shift by a Gershgorin bound so the largest algebraic eigenvalue dominates.
  const double shift = m.cwiseAbs().rowwise().sum().maxCoeff();
  const Matrix a = m + shift * Matrix::Identity(d, d);

  Eigen::Index k = 0;
  m.diagonal().maxCoeff(&k);
  Vector v = Vector::Unit(d, k);
  constexpr int kMaxPower = 20000;
  double change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kMaxPower && change > 1e-13; ++it) {
    Vector w = a * v;
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::SpectralFailure, "spectral_direction: power iterate collapsed");
    }
    w /= norm;
    change = (w - v).norm();
    v = std::move(w);
  }
  if (change > 1e-6) {
    throw Error(ErrorCode::SpectralFailure, "spectral_direction: power iteration stagnated");
  }
  return v;
}

Estimate fit_phase_retrieval(const Dataset& data, const FitOptions& opts,
                             std::span<const double> weights) {
  validate_data(ModelKind::PhaseRetrieval, data);
  validate_options(opts);
  if (data.size() < data.dim()) {
    throw Error(ErrorCode::InvalidArgument, "fit_phase_retrieval: need n >= d");
  }
  if (!weights.empty()) validate_weights(data, weights);

  const Vector direction = spectral_direction(data, weights);
  double mean_y = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    mean_y += (weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)]) * data.y(i);
  }
  mean_y /= static_cast<double>(data.size());
  // beta = 0 is a stationary point, so keep the start off it.
  const double scale = std::max(std::sqrt(std::max(mean_y, 0.0)), 1e-6);
  const Vector init = scale * direction;

  const int runs = std::max(1, opts.restarts);
  Estimate best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < runs; ++r) {
    Vector start = init;
    if (r > 0) {
      Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
      Vector noise(data.dim());
      for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = standard_normal(rng);
      start += 0.5 * scale * noise / std::sqrt(static_cast<double>(data.dim()));
    }
    Estimate est = descend(ModelKind::PhaseRetrieval, data, weights, std::move(start), opts, false);
    const double f = empirical_loss(ModelKind::PhaseRetrieval, data, est.beta_hat, weights);
    if (f < best_loss) {
      best_loss = f;
      best = std::move(est);
    }
  }
  return best;
}

double aligned_distance(const Vector& beta_hat, const Vector& beta_star) {
  require_same_dim(beta_hat.size(), beta_star.size(), "aligned_distance");
  return std::min((beta_hat - beta_star).norm(), (beta_hat + beta_star).norm());
}

}  // namespace covshift
