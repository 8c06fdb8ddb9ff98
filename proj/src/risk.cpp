#include "covshift/risk.hpp"

namespace covshift {

RiskValue excess_risk_closed(ModelKind model, const CovariateDistribution& target,
                             const Vector& beta, const Vector& beta_star) {
  require_same_dim(beta.size(), beta_star.size(), "excess_risk_closed");
  require_same_dim(beta.size(), dimension(target), "excess_risk_closed");
  if (model != ModelKind::Linear) {
    throw Error(ErrorCode::Unsupported, "excess_risk_closed: linear model only");
  }
  const Matrix sigma = second_moment(target);
  const Vector delta = beta - beta_star;
  return RiskValue{0.5 * delta.dot(sigma * delta), 0.0, RiskMethod::Closed};
}

RiskValue excess_risk_mc(ModelKind model, const CovariateDistribution& target, const Vector& beta,
                         const Vector& beta_star, std::size_t m, std::uint64_t seed,
                         ExecPolicy policy) {
  const int d = dimension(target);
  require_same_dim(beta.size(), beta_star.size(), "excess_risk_mc");
  require_same_dim(beta.size(), d, "excess_risk_mc");
  if (m < 1000) throw Error(ErrorCode::InvalidArgument, "excess_risk_mc: m must be >= 1000");

  auto acc = chunked_reduce<MomentAccumulator>(
      m, seed, policy, [] { return MomentAccumulator(1, 1); },
      [&](Rng& rng, MomentAccumulator& a) {
        Vector x(d);
        sample_covariate_into(target, rng, x);
        a.add(conditional_excess(model, x, beta, beta_star));
      });
  return RiskValue{acc.mean()(0, 0), acc.standard_error()(0, 0), RiskMethod::MonteCarlo};
}

}  // namespace covshift
