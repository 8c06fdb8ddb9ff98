#pragma once

// Target-domain excess risk R(beta) = E_T[loss(beta)] - E_T[loss(beta*)].

#include "covshift/covariates.hpp"
#include "covshift/models.hpp"
#include "covshift/parallel.hpp"

#include <cstddef>
#include <cstdint>

namespace covshift {

enum class RiskMethod { Closed, MonteCarlo };

struct RiskValue {
  double value = 0.0;
  double standard_error = 0.0;
  RiskMethod method = RiskMethod::Closed;
};

/// 0.5 (beta - beta*)' Sigma_T (beta - beta*) for the linear model. Throws
/// Unsupported for other models or when Sigma_T has no closed form.
RiskValue excess_risk_closed(ModelKind model, const CovariateDistribution& target,
                             const Vector& beta, const Vector& beta_star);

/// Paired Monte Carlo over m target covariates. The response is integrated
/// out exactly per covariate (conditional_excess), so beta == beta* gives
/// exactly zero and the only error left is covariate sampling.
RiskValue excess_risk_mc(ModelKind model, const CovariateDistribution& target, const Vector& beta,
                         const Vector& beta_star, std::size_t m, std::uint64_t seed,
                         ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace covshift
