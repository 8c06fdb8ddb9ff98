#include "covshift/fisher.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace covshift {

void require_positive_definite(const Matrix& m, ErrorCode code, const char* where) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, std::string(where) + ": matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-10 * hi)) {
    throw Error(code, std::string(where) + ": matrix is not positive definite");
  }
}

Matrix fisher_closed_form(ModelKind model, const CovariateDistribution& dist,
                          const Vector& beta_star) {
  require_same_dim(beta_star.size(), dimension(dist), "fisher_closed_form");
  switch (model) {
    case ModelKind::Linear:
      return second_moment(dist);
    case ModelKind::PhaseRetrieval: {
      const auto* sphere = std::get_if<SphereDist>(&dist);
      const int d = dimension(dist);
      if (sphere == nullptr || d < 2) {
        throw Error(ErrorCode::Unsupported, "fisher_closed_form: phase retrieval needs a sphere, d >= 2");
      }
      const double norm = beta_star.norm();
      if (!(norm > 0.0)) throw Error(ErrorCode::Unsupported, "fisher_closed_form: beta* = 0");
      const Vector b = beta_star / norm;
      if (std::abs(sphere->shift.dot(b)) > 1e-12 * std::max(1.0, sphere->shift.norm())) {
        throw Error(ErrorCode::Unsupported, "fisher_closed_form: shift not orthogonal to beta*");
      }
      // The Hessian is quadratic in beta*, so eigenvalues scale with |beta*|^2.
      return norm * norm * sphere_structured_fisher(sphere_phase_eigs(d), b, sphere->shift);
    }
    case ModelKind::Logistic:
      break;
  }
  throw Error(ErrorCode::Unsupported, "fisher_closed_form: no closed form for " +
                                          std::string(to_string(model)));
}

MatrixEstimate fisher_monte_carlo(ModelKind model, const CovariateDistribution& dist,
                                  const Vector& beta_star, std::size_t m, std::uint64_t seed,
                                  ExecPolicy policy) {
  const int d = dimension(dist);
  require_same_dim(beta_star.size(), d, "fisher_monte_carlo");
  if (m < 1000) throw Error(ErrorCode::InvalidArgument, "fisher_monte_carlo: m must be >= 1000");

  auto acc = chunked_reduce<MomentAccumulator>(
      m, seed, policy, [d] { return MomentAccumulator(d, d); },
      [&](Rng& rng, MomentAccumulator& a) {
        Vector x(d);
        sample_covariate_into(dist, rng, x);
        const double y = sample_response(model, x, beta_star, rng);
        const double d2 = margin_derivatives(model, x.dot(beta_star), y).d2;
        a.add((d2 * x * x.transpose()).array());
      });
  MatrixEstimate out;
  out.mean = acc.mean().matrix();
  out.mean = (0.5 * (out.mean + out.mean.transpose())).eval();
  out.standard_error = acc.standard_error().matrix();
  return out;
}

SphereEigs sphere_logistic_eigs(int d, std::size_t m, std::uint64_t seed, ExecPolicy policy) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "sphere_logistic_eigs: d must be >= 2");
  if (m < 1000) throw Error(ErrorCode::InvalidArgument, "sphere_logistic_eigs: m must be >= 1000");
  const double dd = static_cast<double>(d);
  auto acc = chunked_reduce<MomentAccumulator>(
      m, seed, policy, [] { return MomentAccumulator(3, 1); },
      [&](Rng& rng, MomentAccumulator& a) {
        std::chi_squared_distribution<double> chi2(dd - 1.0);
        const double g = standard_normal(rng);
        const double rest = chi2(rng);
        const double t = std::sqrt(dd) * g / std::sqrt(g * g + rest);
        const double s = logistic_sigmoid(t);
        const double h = s * (1.0 - s);
        Eigen::Array3d v;
        v << t * t * h, (dd - t * t) / (dd - 1.0) * h, h;
        a.add(v);
      });
  const Eigen::ArrayXXd mean = acc.mean();
  const Eigen::ArrayXXd se = acc.standard_error();
  return SphereEigs{mean(0, 0), mean(1, 0), mean(2, 0), se(0, 0), se(1, 0), se(2, 0)};
}

SphereEigs sphere_phase_eigs(int d) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "sphere_phase_eigs: d must be >= 2");
  const double dd = static_cast<double>(d);
  // 4 E[(b'x)^4] = 4 * 3d/(d+2); 4 E[(b'x)^2 (u'x)^2] = 4 * d/(d+2); 4 E[(b'x)^2] = 4.
  return SphereEigs{12.0 * dd / (dd + 2.0), 4.0 * dd / (dd + 2.0), 4.0, 0.0, 0.0, 0.0};
}

Matrix sphere_structured_fisher(const SphereEigs& eigs, const Vector& beta_unit,
                                const Vector& shift) {
  require_same_dim(beta_unit.size(), shift.size(), "sphere_structured_fisher");
  const auto d = beta_unit.size();
  const Matrix bb = beta_unit * beta_unit.transpose();
  return eigs.lambda1 * bb + eigs.lambda2 * (Matrix::Identity(d, d) - bb) +
         eigs.lambda3 * shift * shift.transpose();
}

double transfer_trace(const FisherPair& pair) {
  require_same_dim(pair.source.rows(), pair.target.rows(), "transfer_trace");
  require_positive_definite(pair.source, ErrorCode::SingularSource, "transfer_trace");
  Eigen::LLT<Matrix> llt(pair.source);
  // Tr(T S^{-1}) = Tr(S^{-1} T)
  return llt.solve(pair.target).trace();
}

FisherPair fisher_pair(ModelKind model, const ShiftPair& pair, const Vector& beta_star,
                       std::size_t m, std::uint64_t seed, ExecPolicy policy) {
  auto one = [&](const CovariateDistribution& dist, std::uint64_t stream) {
    try {
      return fisher_closed_form(model, dist, beta_star);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unsupported) throw;
    }
    return fisher_monte_carlo(model, dist, beta_star, m, derive_seed(seed, stream), policy).mean;
  };
  return FisherPair{one(pair.source, 1), one(pair.target, 2)};
}

WeightedPair weighted_information(ModelKind model, const ShiftPair& pair, const Vector& beta_star,
                                  std::size_t m, std::uint64_t seed, ExecPolicy policy) {
  const int d = dimension(pair.source);
  require_same_dim(beta_star.size(), d, "weighted_information");
  if (!supports_density_ratio(pair)) {
    throw Error(ErrorCode::UnsupportedPair, "weighted_information: density ratio unavailable");
  }
  if (m < 1000) throw Error(ErrorCode::InvalidArgument, "weighted_information: m must be >= 1000");

  struct Draw {
    Vector x;
    double w;
    double d1;
    double d2;
  };
  auto draw = [&](Rng& rng) {
    Draw s{Vector(d), 0.0, 0.0, 0.0};
    sample_covariate_into(pair.source, rng, s.x);
    const double y = sample_response(model, s.x, beta_star, rng);
    s.w = density_ratio(pair, s.x);
    const auto md = margin_derivatives(model, s.x.dot(beta_star), y);
    s.d1 = md.d1;
    s.d2 = md.d2;
    return s;
  };

  // Pass 1: G and H. Both blocks share one accumulator so a single stream
  // feeds both means.
  auto acc = chunked_reduce<MomentAccumulator>(
      m, seed, policy, [d] { return MomentAccumulator(d, 2 * d); },
      [&](Rng& rng, MomentAccumulator& a) {
        const Draw s = draw(rng);
        const Matrix xx = s.x * s.x.transpose();
        Eigen::ArrayXXd block(d, 2 * d);
        block.leftCols(d) = (s.w * s.w * s.d1 * s.d1) * xx.array();
        block.rightCols(d) = (s.w * s.d2) * xx.array();
        a.add(block);
      });

  WeightedPair out;
  out.g = acc.mean().leftCols(d).matrix();
  out.h = acc.mean().rightCols(d).matrix();
  out.g = (0.5 * (out.g + out.g.transpose())).eval();
  out.h = (0.5 * (out.h + out.h.transpose())).eval();
  out.g_se = acc.standard_error().leftCols(d).matrix();
  out.h_se = acc.standard_error().rightCols(d).matrix();

  require_positive_definite(out.h, ErrorCode::SingularSource, "weighted_information: H_w");
  Eigen::LLT<Matrix> llt(out.h);
  const Matrix h_inv_g = llt.solve(out.g);
  out.trace = h_inv_g.trace();

  // Pass 2 replays the same streams to get the delta-method influence
  // psi_i = tr(g_i H^{-1}) - tr(G H^{-1} h_i H^{-1}).
  const Matrix h_inv = llt.solve(Matrix::Identity(d, d));
  const Matrix sandwich = h_inv * out.g * h_inv;
  auto psi = chunked_reduce<MomentAccumulator>(
      m, seed, policy, [] { return MomentAccumulator(1, 1); },
      [&](Rng& rng, MomentAccumulator& a) {
        const Draw s = draw(rng);
        const double quad_inv = s.x.dot(h_inv * s.x);
        const double quad_sand = s.x.dot(sandwich * s.x);
        a.add(s.w * s.w * s.d1 * s.d1 * quad_inv - s.w * s.d2 * quad_sand);
      });
  out.trace_se = psi.standard_error()(0, 0);
  return out;
}

ThresholdTerms sample_size_threshold(double b1, double b2, double b3, double gamma,
                                     const FisherPair& pair) {
  if (!(b1 >= 0.0) || !(b2 >= 0.0) || !(b3 >= 0.0) || !(gamma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample_size_threshold: constants must be nonnegative");
  }
  require_same_dim(pair.source.rows(), pair.target.rows(), "sample_size_threshold");
  require_positive_definite(pair.source, ErrorCode::SingularSource, "sample_size_threshold");
  require_positive_definite(pair.target, ErrorCode::InvalidArgument, "sample_size_threshold: I_T");

  Eigen::SelfAdjointEigenSolver<Matrix> src(pair.source, Eigen::EigenvaluesOnly);
  const double inv_norm = 1.0 / src.eigenvalues().minCoeff();
  const double inv_trace = src.eigenvalues().cwiseInverse().sum();
  // |I_T^{1/2} I_S^{-1} I_T^{1/2}|_2 is the top generalized eigenvalue of (I_T, I_S).
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen(pair.target, pair.source,
                                                       Eigen::EigenvaluesOnly);
  const double sandwich_norm = gen.eigenvalues().maxCoeff();

  ThresholdTerms t;
  t.kappa = transfer_trace(pair) / sandwich_norm;
  t.kappa_tilde = inv_trace / inv_norm;
  t.alpha1 = b1 * std::sqrt(inv_norm);
  t.alpha2 = b2 * inv_norm;
  t.alpha3 = b3 * std::pow(inv_norm, 1.5);

  const double ratio = 1.0 + t.kappa_tilde / t.kappa;
  const double log_arg = ratio * t.alpha1 * t.alpha1 / t.kappa_tilde;
  // log^{2 gamma}: gamma = 0 contributes a factor 1 for any argument.
  const double log_factor = gamma == 0.0 ? 1.0 : std::pow(std::abs(std::log(log_arg)), 2.0 * gamma);
  const double first = t.alpha1 * t.alpha1 * log_factor / t.kappa_tilde;
  const double second = t.alpha2 * t.alpha2;
  const double third =
      t.kappa_tilde * (1.0 + 1.0 / (sandwich_norm * sandwich_norm)) * t.alpha3 * t.alpha3;
  t.n_star = ratio * ratio * std::max({first, second, third});
  return t;
}

}  // namespace covshift
