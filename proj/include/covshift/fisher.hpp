#pragma once

// Fisher information on source and target, the weighted pair (G_w, H_w) that
// governs importance-weighted estimation, and the trace functionals built on
// them.

#include "covshift/covariates.hpp"
#include "covshift/models.hpp"
#include "covshift/parallel.hpp"

#include <cstddef>
#include <cstdint>

namespace covshift {

struct FisherPair {
  Matrix source;  // I_S(beta*)
  Matrix target;  // I_T(beta*)
};

/// Monte Carlo mean with entrywise standard errors.
struct MatrixEstimate {
  Matrix mean;
  Matrix standard_error;
};

struct WeightedPair {
  Matrix g;     // E_S[w^2 grad grad']
  Matrix h;     // E_S[w hess]
  Matrix g_se;
  Matrix h_se;
  double trace = 0.0;     // Tr(G H^{-1})
  double trace_se = 0.0;  // delta-method standard error of trace
};

/// Eigenvalues of the sphere Fisher matrices for a unit-norm beta*:
/// lambda1 along beta*, lambda2 on its complement, lambda3 the coefficient of
/// r^2 added along the shift direction on the target.
struct SphereEigs {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double se1 = 0.0;
  double se2 = 0.0;
  double se3 = 0.0;
};

/// Exact Fisher matrix E[hess loss(x, y, beta*)] where a closed form exists:
/// Linear with any distribution that has second_moment(), and
/// PhaseRetrieval on the sphere with shift orthogonal to beta*.
/// Throws Unsupported otherwise (Logistic always).
Matrix fisher_closed_form(ModelKind model, const CovariateDistribution& dist,
                          const Vector& beta_star);

MatrixEstimate fisher_monte_carlo(ModelKind model, const CovariateDistribution& dist,
                                  const Vector& beta_star, std::size_t m, std::uint64_t seed,
                                  ExecPolicy policy = ExecPolicy::Parallel);

/// Logistic eigenvalues on Uniform(S^{d-1}(sqrt d)). Reduces the
/// d-dimensional expectation to the scalar margin t = beta*'x, drawn exactly as
/// sqrt(d) g / sqrt(g^2 + chi2_{d-1}).
SphereEigs sphere_logistic_eigs(int d, std::size_t m = 1'000'000, std::uint64_t seed = 0,
                                ExecPolicy policy = ExecPolicy::Parallel);

/// Phase-retrieval eigenvalues (12d/(d+2), 4d/(d+2), 4), exact.
SphereEigs sphere_phase_eigs(int d);

/// U diag(.) U' reconstruction for unit beta* and a shift orthogonal to it:
/// lambda1 b b' + lambda2 (I - b b') + lambda3 v v'.
Matrix sphere_structured_fisher(const SphereEigs& eigs, const Vector& beta_unit,
                                const Vector& shift);

/// Tr(I_T I_S^{-1}) via Cholesky solves. Throws SingularSource.
double transfer_trace(const FisherPair& pair);

/// (I_S, I_T) at beta*: closed form for each side when one exists, otherwise
/// Monte Carlo with m draws (the two sides use different streams).
FisherPair fisher_pair(ModelKind model, const ShiftPair& pair, const Vector& beta_star,
                       std::size_t m, std::uint64_t seed, ExecPolicy policy = ExecPolicy::Parallel);

WeightedPair weighted_information(ModelKind model, const ShiftPair& pair, const Vector& beta_star,
                                  std::size_t m, std::uint64_t seed,
                                  ExecPolicy policy = ExecPolicy::Parallel);

struct ThresholdTerms {
  double kappa = 0.0;
  double kappa_tilde = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
  double n_star = 0.0;
};

/// Sample-size threshold N* of the instance-dependent upper bound, with its
/// ingredients.
ThresholdTerms sample_size_threshold(double b1, double b2, double b3, double gamma,
                                     const FisherPair& pair);

/// Throws SingularSource unless min eig > 1e-10 * max eig.
void require_positive_definite(const Matrix& m, ErrorCode code, const char* where);

}  // namespace covshift
