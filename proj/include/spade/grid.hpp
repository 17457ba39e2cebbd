#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "spade/errors.hpp"

namespace spade {

// Uniform 1-D spatial grid with trapezoidal quadrature. All sampled field
// data lives on such a grid. For smooth integrands that decay to ~1e-15 at
// the boundary the trapezoid rule is spectrally accurate.
struct Grid {
  double xmin = 0.0;
  double xmax = 0.0;
  int n = 0;
  double h = 0.0;
  Eigen::VectorXd x;

  static Grid uniform(double xmin, double xmax, int n) {
    if (!(xmax > xmin) || n < 64) {
      throw InvalidArgument("grid requires xmax > xmin and n >= 64");
    }
    Grid g;
    g.xmin = xmin;
    g.xmax = xmax;
    g.n = n;
    g.h = (xmax - xmin) / (n - 1);
    g.x = Eigen::VectorXd::LinSpaced(n, xmin, xmax);
    return g;
  }

  // Default working grid for a field of length scale sigma: tail mass < 1e-14,
  // derivative stencils accurate.
  static Grid standard(double sigma) {
    return uniform(-8.0 * sigma, 8.0 * sigma, 4096);
  }

  // Wider grid for work that displaces the field beyond ~1.5 sigma (the
  // displacement tail gate trips on the standard grid past that point).
  static Grid wide(double sigma) {
    return uniform(-12.0 * sigma, 12.0 * sigma, 6144);
  }

  double integrate(const Eigen::VectorXd& f) const {
    double s = 0.5 * (f(0) + f(n - 1));
    s += f.segment(1, n - 2).sum();
    return s * h;
  }

  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return integrate(a.cwiseProduct(b));
  }

  bool contains(double xq) const { return xq >= xmin && xq <= xmax; }

  bool same_as(const Grid& o, double tol = 1e-12) const {
    return n == o.n && std::abs(xmin - o.xmin) <= tol &&
           std::abs(xmax - o.xmax) <= tol;
  }
};

// Six-point local Lagrange interpolation of samples f at xq. Points outside
// the grid evaluate to 0: every field here decays to ~1e-15 at the edges, so
// a zero extension is far more accurate than polynomial extrapolation.
inline double interp6(const Grid& g, const Eigen::VectorXd& f, double xq) {
  if (!g.contains(xq)) return 0.0;
  int i = static_cast<int>(std::floor((xq - g.xmin) / g.h));
  int lo = i - 2;
  if (lo < 0) lo = 0;
  if (lo > g.n - 6) lo = g.n - 6;
  double r = 0.0;
  for (int j = 0; j < 6; ++j) {
    double lj = 1.0;
    const double xj = g.x(lo + j);
    for (int k = 0; k < 6; ++k) {
      if (k == j) continue;
      lj *= (xq - g.x(lo + k)) / (xj - g.x(lo + k));
    }
    r += lj * f(lo + j);
  }
  return r;
}

}  // namespace spade
