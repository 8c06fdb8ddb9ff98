#include "covshift/covariates.hpp"

#include <cmath>
#include <sstream>

namespace covshift {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Standard Gaussian direction g/|g|; g == 0 has probability zero and is redrawn.
void random_direction(Rng& rng, Eigen::Ref<Vector> out) {
  for (;;) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = standard_normal(rng);
    const double norm = out.norm();
    if (norm > 0.0) {
      out /= norm;
      return;
    }
  }
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  return os.str();
}

}  // namespace

double SphereDist::radius() const { return std::sqrt(static_cast<double>(shift.size())); }

CovariateDistribution make_gaussian(Vector mean, double scale) {
  if (mean.size() < 1) throw Error(ErrorCode::InvalidArgument, "gaussian: dimension must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidArgument, "gaussian: scale must be positive and finite");
  }
  if (!mean.allFinite()) throw Error(ErrorCode::InvalidArgument, "gaussian: mean must be finite");
  return GaussianDist{std::move(mean), scale};
}

CovariateDistribution make_sphere(int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "sphere: dimension must be >= 1");
  return SphereDist{Vector::Zero(d)};
}

CovariateDistribution make_sphere(Vector shift) {
  if (shift.size() < 1) throw Error(ErrorCode::InvalidArgument, "sphere: dimension must be >= 1");
  if (!shift.allFinite()) throw Error(ErrorCode::InvalidArgument, "sphere: shift must be finite");
  return SphereDist{std::move(shift)};
}

CovariateDistribution make_ball(int d, double radius) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "ball: dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::InvalidArgument, "ball: radius must be positive and finite");
  }
  return BallDist{d, radius};
}

int dimension(const CovariateDistribution& dist) {
  return std::visit(Overloaded{
                        [](const GaussianDist& g) { return static_cast<int>(g.mean.size()); },
                        [](const SphereDist& s) { return static_cast<int>(s.shift.size()); },
                        [](const BallDist& b) { return b.d; },
                    },
                    dist);
}

std::string describe(const CovariateDistribution& dist) {
  return std::visit(Overloaded{
                        [](const GaussianDist& g) {
                          std::ostringstream os;
                          os << "gaussian(mean=" << format_vector(g.mean) << ";scale=" << g.scale << ")";
                          return os.str();
                        },
                        [](const SphereDist& s) {
                          return "sphere(d=" + std::to_string(s.shift.size()) +
                                 ";shift=" + format_vector(s.shift) + ")";
                        },
                        [](const BallDist& b) {
                          std::ostringstream os;
                          os << "ball(d=" << b.d << ";radius=" << b.radius << ")";
                          return os.str();
                        },
                    },
                    dist);
}

ShiftPair make_shift_pair(CovariateDistribution source, CovariateDistribution target) {
  require_same_dim(dimension(source), dimension(target), "make_shift_pair");
  return ShiftPair{std::move(source), std::move(target)};
}

void sample_covariate_into(const CovariateDistribution& dist, Rng& rng, Eigen::Ref<Vector> out) {
  require_same_dim(out.size(), dimension(dist), "sample_covariate");
  std::visit(Overloaded{
                 [&](const GaussianDist& g) {
                   for (Eigen::Index i = 0; i < out.size(); ++i) {
                     out(i) = g.mean(i) + g.scale * standard_normal(rng);
                   }
                 },
                 [&](const SphereDist& s) {
                   random_direction(rng, out);
                   out = s.radius() * out + s.shift;
                 },
                 [&](const BallDist& b) {
                   // Radial inverse CDF: P(|x| <= r) = (r/R)^d.
                   random_direction(rng, out);
                   const double u = uniform01(rng);
                   out *= b.radius * std::pow(u, 1.0 / static_cast<double>(b.d));
                 },
             },
             dist);
}

Vector sample_covariate(const CovariateDistribution& dist, Rng& rng) {
  Vector x(dimension(dist));
  sample_covariate_into(dist, rng, x);
  return x;
}

Matrix second_moment(const CovariateDistribution& dist) {
  return std::visit(
      Overloaded{
          [](const GaussianDist& g) -> Matrix {
            const auto d = g.mean.size();
            return g.mean * g.mean.transpose() + g.scale * g.scale * Matrix::Identity(d, d);
          },
          [](const SphereDist& s) -> Matrix {
            if (s.shifted()) {
              throw Error(ErrorCode::Unsupported, "second_moment: shifted sphere has no closed form here");
            }
            const auto d = s.shift.size();
            return Matrix::Identity(d, d);
          },
          [](const BallDist& b) -> Matrix {
            // E|x|^2 = d R^2 / (d+2) for the uniform ball, split evenly by isotropy.
            return (b.radius * b.radius / (b.d + 2.0)) * Matrix::Identity(b.d, b.d);
          },
      },
      dist);
}

namespace {

enum class RatioKind { Unit, Gaussian, Ball, None };

RatioKind ratio_kind(const ShiftPair& pair) {
  if (std::holds_alternative<GaussianDist>(pair.source)) {
    return std::holds_alternative<GaussianDist>(pair.target) ? RatioKind::Gaussian : RatioKind::None;
  }
  if (const auto* bs = std::get_if<BallDist>(&pair.source)) {
    if (const auto* bt = std::get_if<BallDist>(&pair.target)) {
      return bt->radius <= bs->radius ? RatioKind::Ball : RatioKind::None;
    }
    return RatioKind::None;
  }
  if (const auto* ss = std::get_if<SphereDist>(&pair.source)) {
    if (const auto* st = std::get_if<SphereDist>(&pair.target)) {
      // Spheres with different centres are mutually singular.
      return ss->shift == st->shift ? RatioKind::Unit : RatioKind::None;
    }
  }
  return RatioKind::None;
}

}  // namespace

bool supports_density_ratio(const ShiftPair& pair) { return ratio_kind(pair) != RatioKind::None; }

double density_ratio(const ShiftPair& pair, const Vector& x) {
  require_same_dim(x.size(), dimension(pair.source), "density_ratio");
  switch (ratio_kind(pair)) {
    case RatioKind::Unit:
      return 1.0;
    case RatioKind::Gaussian: {
      const auto& s = std::get<GaussianDist>(pair.source);
      const auto& t = std::get<GaussianDist>(pair.target);
      const double d = static_cast<double>(x.size());
      const double log_w = d * std::log(s.scale / t.scale) -
                           (x - t.mean).squaredNorm() / (2.0 * t.scale * t.scale) +
                           (x - s.mean).squaredNorm() / (2.0 * s.scale * s.scale);
      return std::exp(log_w);
    }
    case RatioKind::Ball: {
      const auto& s = std::get<BallDist>(pair.source);
      const auto& t = std::get<BallDist>(pair.target);
      if (x.norm() > t.radius) return 0.0;
      return std::pow(s.radius / t.radius, static_cast<double>(s.d));
    }
    case RatioKind::None:
      break;
  }
  throw Error(ErrorCode::UnsupportedPair,
              "density_ratio: no ratio for " + describe(pair.source) + " -> " + describe(pair.target));
}

}  // namespace covshift
