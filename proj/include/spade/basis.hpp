#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "spade/errors.hpp"
#include "spade/grid.hpp"
#include "spade/psf.hpp"

namespace spade {

// Orthonormal computational basis built from the PSF and its derivatives,
// aligned at `center` (the centroid guess). Column k holds the samples of
// mode Phi_{k+1}; mode 1 is the PSF itself, modes 2,3 are the normalized
// first- and second-derivative residuals, higher modes continue the pattern.
struct ModeSet {
  Grid grid;
  double center = 0.0;
  Moments moments;
  Eigen::MatrixXd modes;  // grid.n x N

  int num_modes() const { return static_cast<int>(modes.cols()); }
};

// Modified Gram-Schmidt over the stack {(-d/dx)^k Psi(x - center)},
// k = 0..N-1, with one re-orthogonalization pass. Mode signs follow the
// natural convention: each mode keeps a positive overlap with its generating
// derivative vector (outcome probabilities are invariant under global mode
// sign flips, so this is a presentation choice; it reproduces the
// Hermite-Gauss modes with their standard signs for a Gaussian PSF).
inline ModeSet build_derivative_basis(const Psf& psf, double center, int num_modes) {
  if (num_modes < 3) throw InvalidArgument("mode set needs at least 3 modes");
  if (num_modes > 12) throw Unsupported("mode sets beyond 12 modes are not supported");
  const Grid& g = psf.grid();
  const Psf base = psf.displaced(center - psf.center());

  ModeSet ms;
  ms.grid = g;
  ms.center = center;
  ms.moments = base.momentum_moments();
  ms.modes.resize(g.n, num_modes);

  for (int k = 0; k < num_modes; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;  // (-d/dx)^k
    Eigen::VectorXd v = sign * base.derivative_samples(k);
    const double vnorm = std::sqrt(g.inner(v, v));
    Eigen::VectorXd w = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        const Eigen::VectorXd phi = ms.modes.col(j);
        w -= phi * g.inner(phi, w);
      }
    }
    const double r = std::sqrt(g.inner(w, w));
    if (!(r > 1e-10 * vnorm)) {
      throw DegenerateBasis("derivative stack is linearly dependent at order " +
                            std::to_string(k));
    }
    // Mode 1 is the PSF itself: a valid PSF is already unit-normalized, so
    // skipping the cosmetic rescale keeps the samples bitwise identical.
    if (k != 0 || std::abs(r - 1.0) > 1e-6) w /= r;
    if (g.inner(w, v) < 0.0) w = -w;
    ms.modes.col(k) = w;
  }
  return ms;
}

// Overlap coefficients c_k(d) = <Phi_k | Psi_d> by quadrature.
inline Eigen::VectorXd overlaps(const ModeSet& ms, const Psf& psf, double d) {
  if (!psf.grid().same_as(ms.grid)) {
    throw InvalidArgument("mode set and psf live on different grids");
  }
  const Eigen::VectorXd disp = psf.displaced_samples(d);
  Eigen::VectorXd c(ms.num_modes());
  for (int k = 0; k < ms.num_modes(); ++k) {
    c(k) = ms.grid.inner(ms.modes.col(k), disp);
  }
  return c;
}

// n-th Hermite-Gauss mode matched to a Gaussian PSF of width sigma:
// HG_n(x) = (2 pi sigma^2)^{-1/4} (2^n n!)^{-1/2} H_n(x / (sigma sqrt 2))
//           exp(-x^2 / (4 sigma^2)).
inline double hg_analytic(int n, double sigma, double x) {
  if (n < 0 || n > 12) throw Unsupported("hg mode order must be in [0, 12]");
  if (!(sigma > 0.0)) throw InvalidArgument("hg mode requires sigma > 0");
  const double two_pi = 6.283185307179586476925286766559;
  const double u = x / (sigma * 1.4142135623730951);
  double hprev = 1.0, h = 2.0 * u;
  if (n == 0) h = hprev;
  for (int k = 1; k < n; ++k) {
    const double hnext = 2.0 * u * h - 2.0 * k * hprev;
    hprev = h;
    h = hnext;
  }
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  const double norm = std::pow(two_pi * sigma * sigma, -0.25) /
                      std::sqrt(std::pow(2.0, n) * fact);
  return norm * h * std::exp(-x * x / (4.0 * sigma * sigma));
}

inline Eigen::VectorXd hg_analytic_samples(const Grid& g, double sigma, int n) {
  return g.x.unaryExpr([&](double x) { return hg_analytic(n, sigma, x); });
}

}  // namespace spade
