#include "covshift/bounds.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace covshift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::pair<double, double> eig_range(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

// Tr(I_T I_S^-2) / Tr(I_T I_S^-1)
double trace_ratio(const FisherPair& pair) {
  require_same_dim(pair.source.rows(), pair.target.rows(), "van_trees_bound");
  require_positive_definite(pair.source, ErrorCode::SingularSource, "van_trees_bound");
  Eigen::LLT<Matrix> llt(pair.source);
  const Matrix once = llt.solve(pair.target);
  const Matrix twice = llt.solve(once);
  return twice.trace() / once.trace();
}

double prior_information(const FisherPair& pair, double r1, int d) {
  if (!(r1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "van_trees_bound: R1 must be positive");
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "van_trees_bound: d must be >= 1");
  return std::numbers::pi * std::numbers::pi * d / (r1 * r1) * trace_ratio(pair);
}

}  // namespace

Radii localization_radii(const RadiiInputs& in) {
  require_same_dim(in.source_info.rows(), in.target_info.rows(), "localization_radii");
  require_positive_definite(in.source_info, ErrorCode::InvalidArgument, "localization_radii: I_S");
  require_positive_definite(in.target_info, ErrorCode::InvalidArgument, "localization_radii: I_T");
  if (!(in.lipschitz_source >= 0.0) || !(in.lipschitz_target >= 0.0) || !(in.b3 >= 0.0) ||
      !(in.prior_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "localization_radii: invalid constants");
  }
  const auto [s_min, s_max] = eig_range(in.source_info);
  const auto [t_min, t_max] = eig_range(in.target_info);

  const double source_term =
      in.lipschitz_source > 0.0 ? s_min * s_min / (4.0 * in.lipschitz_source * s_max) : kInf;
  const double target_denom = 4.0 * in.b3 + 2.0 * in.lipschitz_target;
  const double target_term = target_denom > 0.0 ? t_min / target_denom : kInf;

  Radii r;
  r.r0 = std::min({source_term, target_term, in.prior_radius});
  r.r1 = 0.25 * std::sqrt(t_min / t_max) * r.r0;
  return r;
}

double van_trees_bound(const FisherPair& pair, double r1, int d, long long n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "van_trees_bound: n must be >= 1");
  const double c = prior_information(pair, r1, d);
  return 1.0 / (16.0 * (2.0 * static_cast<double>(n) + c));
}

double van_trees_min_n(const FisherPair& pair, double r1, int d) {
  // 1/(16(2n + C)) >= 1/(50n)  <=>  50n >= 32n + 16C  <=>  n >= 8C/9
  return 8.0 * prior_information(pair, r1, d) / 9.0;
}

Vector cosine_prior_sample(const Vector& beta0, double half_width, Rng& rng) {
  if (!(half_width > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "cosine_prior_sample: B must be positive");
  }
  Vector out(beta0.size());
  for (Eigen::Index i = 0; i < beta0.size(); ++i) {
    // F(x) = (1 + sin(pi (x - beta0) / (2B))) / 2
    const double u = uniform01(rng);
    out(i) = beta0(i) + (2.0 * half_width / std::numbers::pi) * std::asin(2.0 * u - 1.0);
  }
  return out;
}

double concentration_threshold(double v, double b, TailClass tail, long long n, double delta,
                               double c) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "concentration_threshold: n must be >= 2");
  if (!(v >= 0.0) || !(b > 0.0) || !(c > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "concentration_threshold: invalid constants");
  }
  const double nn = static_cast<double>(n);
  const double lo = std::pow(nn, -10.0);
  const double hi = std::exp(-1.0);
  // Allow the endpoints themselves up to rounding.
  if (!(delta >= lo * (1.0 - 1e-12)) || !(delta <= hi * (1.0 + 1e-12))) {
    throw Error(ErrorCode::DeltaOutOfRange, "concentration_threshold: delta outside [n^-10, e^-1]");
  }
  const double log_inv_delta = -std::log(delta);
  double log_n_factor = 1.0;
  switch (tail) {
    case TailClass::SubExponential: log_n_factor = std::log(nn); break;
    case TailClass::SubGaussian: log_n_factor = std::sqrt(std::log(nn)); break;
    case TailClass::Bounded: log_n_factor = 1.0; break;
  }
  return c * (std::sqrt(v * log_inv_delta / nn) + b * log_n_factor * log_inv_delta / nn);
}

VectorGenerator sphere_generator(int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "sphere_generator: d must be >= 1");
  const double radius = std::sqrt(static_cast<double>(d));
  VectorGenerator gen;
  gen.dim = d;
  gen.v = d;
  gen.b = radius;
  gen.tail = TailClass::Bounded;
  gen.draw = [radius](Rng& rng, Eigen::Ref<Vector> out) {
    // one distribution per vector so the polar method's spare value is used
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
      for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal(rng);
      const double norm = out.norm();
      if (norm > 0.0) {
        out *= radius / norm;
        return;
      }
    }
  };
  return gen;
}

VectorGenerator gaussian_generator(int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "gaussian_generator: d must be >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  VectorGenerator gen;
  gen.dim = d;
  gen.v = 1.0;
  gen.b = 1.0;
  gen.tail = TailClass::SubGaussian;
  gen.draw = [scale](Rng& rng, Eigen::Ref<Vector> out) {
    std::normal_distribution<double> normal(0.0, scale);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal(rng);
  };
  return gen;
}

CoverageReport concentration_check(const VectorGenerator& gen, long long n, double delta,
                                   long long trials, double c, std::uint64_t seed,
                                   ExecPolicy policy) {
  if (!gen.draw) throw Error(ErrorCode::InvalidArgument, "concentration_check: empty generator");
  if (static_cast<double>(trials) < 100.0 / delta) {
    throw Error(ErrorCode::InvalidArgument, "concentration_check: need trials >= 100/delta");
  }
  CoverageReport report;
  report.trials = trials;
  report.threshold = concentration_threshold(gen.v, gen.b, gen.tail, n, delta, c);

  const int d = gen.dim;
  auto acc = chunked_reduce<MomentAccumulator>(
      static_cast<std::size_t>(trials), seed, policy, [] { return MomentAccumulator(1, 1); },
      [&](Rng& rng, MomentAccumulator& a) {
        Vector sum = Vector::Zero(d);
        Vector u(d);
        for (long long i = 0; i < n; ++i) {
          gen.draw(rng, u);
          sum += u;
        }
        const double norm = sum.norm() / static_cast<double>(n);
        a.add(norm > report.threshold ? 1.0 : 0.0);
      });
  report.exceedance = acc.mean()(0, 0);
  return report;
}

}  // namespace covshift
