#pragma once

// Covariate laws used on the source and target domains:
//   Gaussian  N(mean, scale^2 I)
//   Sphere    Uniform(S^{d-1}(sqrt d)) + shift
//   Ball      Uniform(B(radius)) centred at the origin

#include "covshift/rng.hpp"
#include "covshift/types.hpp"

#include <string>
#include <variant>

namespace covshift {

struct GaussianDist {
  Vector mean;
  double scale = 1.0;
};

struct SphereDist {
  Vector shift;  // dimension d; zero for the unshifted sphere
  double radius() const;
  bool shifted() const { return !shift.isZero(0.0); }
};

struct BallDist {
  int d = 1;
  double radius = 1.0;
};

using CovariateDistribution = std::variant<GaussianDist, SphereDist, BallDist>;

CovariateDistribution make_gaussian(Vector mean, double scale);
CovariateDistribution make_sphere(int d);
CovariateDistribution make_sphere(Vector shift);
CovariateDistribution make_ball(int d, double radius);

int dimension(const CovariateDistribution& dist);
std::string describe(const CovariateDistribution& dist);

/// Shift pair (source, target) over a common dimension.
struct ShiftPair {
  CovariateDistribution source;
  CovariateDistribution target;
};

ShiftPair make_shift_pair(CovariateDistribution source, CovariateDistribution target);

Vector sample_covariate(const CovariateDistribution& dist, Rng& rng);
void sample_covariate_into(const CovariateDistribution& dist, Rng& rng, Eigen::Ref<Vector> out);

/// Exact E[x x']. Throws Unsupported for a shifted sphere.
Matrix second_moment(const CovariateDistribution& dist);

bool supports_density_ratio(const ShiftPair& pair);

/// w(x) = dP_T/dP_S (x). Throws UnsupportedPair when the target is not
/// absolutely continuous w.r.t. the source or no closed form is implemented.
double density_ratio(const ShiftPair& pair, const Vector& x);

}  // namespace covshift
