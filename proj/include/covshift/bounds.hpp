#pragma once

// Lower-bound machinery (localization radii, van Trees value, cosine prior)
// and the vector concentration threshold with an empirical coverage check.

#include "covshift/fisher.hpp"
#include "covshift/parallel.hpp"

#include <cstdint>
#include <functional>

namespace covshift {

struct RadiiInputs {
  Matrix source_info;            // I_S(beta0)
  Matrix target_info;            // I_T(beta0)
  double lipschitz_source = 0.0; // L_S
  double lipschitz_target = 0.0; // L_T
  double b3 = 0.0;               // third-derivative bound
  double prior_radius = 1.0;     // B
};

struct Radii {
  double r0 = 0.0;
  double r1 = 0.0;
};

/// R0 = min{ lmin(I_S)^2 / (4 L_S lmax(I_S)), lmin(I_T) / (4 B3 + 2 L_T), B },
/// R1 = sqrt(lmin(I_T)/lmax(I_T)) R0 / 4. Zero denominators give +inf terms.
Radii localization_radii(const RadiiInputs& in);

/// 1 / (16 (2n + pi^2 d / R1^2 * Tr(I_T I_S^-2) / Tr(I_T I_S^-1))): the
/// minimax lower bound on the risk normalized by Tr(I_T I_S^-1).
double van_trees_bound(const FisherPair& pair, double r1, int d, long long n);

/// Smallest n with van_trees_bound >= 1/(50 n), i.e. 8C/9 where C is the
/// prior-information term above.
double van_trees_min_n(const FisherPair& pair, double r1, int d);

/// Product prior with coordinate density pi/(4B) cos(pi (x - beta0_i) / (2B))
/// on [beta0_i - B, beta0_i + B], by inverse CDF.
Vector cosine_prior_sample(const Vector& beta0, double half_width, Rng& rng);

/// Norm tail class: P(|u| >= t) <= 2 exp(-(t/B)^p / 2) with p = 1, 2, or a
/// bounded norm |u| <= B (p = infinity).
enum class TailClass { SubExponential, SubGaussian, Bounded };

/// c (sqrt(v log(1/delta) / n) + B (log n)^{1/p} log(1/delta) / n).
/// Throws DeltaOutOfRange unless delta is in [n^-10, e^-1].
double concentration_threshold(double v, double b, TailClass tail, long long n, double delta,
                               double c);

struct VectorGenerator {
  int dim = 1;
  double v = 1.0;  // bound on E|u|^2
  double b = 1.0;  // tail scale
  TailClass tail = TailClass::Bounded;
  std::function<void(Rng&, Eigen::Ref<Vector>)> draw;
};

/// Uniform on the sphere of radius sqrt(d): bounded with B = sqrt(d), v = d.
VectorGenerator sphere_generator(int d);
/// N(0, I_d / d): E|u|^2 = 1; |u| is sub-Gaussian with B = 1 for d >= 10.
VectorGenerator gaussian_generator(int d);

struct CoverageReport {
  double threshold = 0.0;
  double exceedance = 0.0;  // fraction of trials with |mean| > threshold
  long long trials = 0;
};

/// Requires trials >= 100 / delta.
CoverageReport concentration_check(const VectorGenerator& gen, long long n, double delta,
                                   long long trials, double c, std::uint64_t seed,
                                   ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace covshift
