#pragma once

// Reference computations written without the library's solvers, used as
// independent checks in the unit and acceptance tests.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Weighted least squares by forming X'WX, X'Wy in long double and solving
// with Gaussian elimination + partial pivoting.
inline Vec normal_equations(const Mat& x, const Vec& y, const std::vector<double>& w = {}) {
  const long n = x.rows();
  const long d = x.cols();
  std::vector<std::vector<long double>> a(d, std::vector<long double>(d + 1, 0.0L));
  for (long i = 0; i < n; ++i) {
    const long double wi = w.empty() ? 1.0L : w[i];
    for (long r = 0; r < d; ++r) {
      for (long c = 0; c < d; ++c) a[r][c] += wi * x(i, r) * x(i, c);
      a[r][d] += wi * x(i, r) * y(i);
    }
  }
  for (long col = 0; col < d; ++col) {
    long piv = col;
    for (long r = col + 1; r < d; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0.0L) throw std::runtime_error("oracle: singular normal equations");
    std::swap(a[col], a[piv]);
    for (long r = col + 1; r < d; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (long c = col; c <= d; ++c) a[r][c] -= f * a[col][c];
    }
  }
  Vec beta(d);
  for (long r = d - 1; r >= 0; --r) {
    long double s = a[r][d];
    for (long c = r + 1; c < d; ++c) s -= a[r][c] * static_cast<long double>(beta(c));
    beta(r) = static_cast<double>(s / a[r][r]);
  }
  return beta;
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& b, double h = 1e-6) {
  Vec g(b.size());
  for (long i = 0; i < b.size(); ++i) {
    Vec p = b;
    Vec m = b;
    p(i) += h;
    m(i) -= h;
    g(i) = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& b, double h = 1e-6) {
  Mat jac(b.size(), b.size());
  for (long i = 0; i < b.size(); ++i) {
    Vec p = b;
    Vec m = b;
    p(i) += h;
    m(i) -= h;
    jac.col(i) = (g(p) - g(m)) / (2.0 * h);
  }
  return jac;
}

// Coarse grid then golden-section refinement around the best grid point.
inline double grid_minimize(const std::function<double(double)>& f, double lo, double hi,
                            int points = 10001) {
  double best = lo;
  double fbest = f(lo);
  const double step = (hi - lo) / (points - 1);
  for (int i = 1; i < points; ++i) {
    const double t = lo + i * step;
    const double v = f(t);
    if (v < fbest) {
      fbest = v;
      best = t;
    }
  }
  double a = best - step;
  double b = best + step;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

// Probabilists' Gauss-Hermite rule via Golub-Welsch: E[f(Z)] ~ sum w_i f(x_i).
inline std::pair<Vec, Vec> gauss_hermite(int k) {
  Mat jacobi = Mat::Zero(k, k);
  for (int i = 1; i < k; ++i) {
    jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
    jacobi(i - 1, i) = jacobi(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  Vec nodes = eig.eigenvalues();
  Vec weights = eig.eigenvectors().row(0).transpose().array().square();
  return {nodes, weights};
}

// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
