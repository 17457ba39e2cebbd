#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>

#include "spade/basis.hpp"
#include "spade/errors.hpp"
#include "spade/povm.hpp"
#include "spade/psf.hpp"

namespace spade {

// Two equal-intensity incoherent point sources: centroid s0, separation
// s >= 0, alignment guess s0_hat. The sources sit at s0 +/- s/2; the
// deviation x0 = s0 - s0_hat measures how far the mode alignment is off.
// Parameter order is (s0, s) everywhere.
struct SourceConfig {
  double s0 = 0.0;
  double s = 0.0;
  double s0_hat = 0.0;

  double x0() const { return s0 - s0_hat; }
  double delta_plus() const { return s0 + 0.5 * s; }
  double delta_minus() const { return s0 - 0.5 * s; }

  // r = (s / (2 x0))^2, recorded as +infinity at x0 = 0. The regime r >> 1
  // is where the measurement is aligned well relative to the separation.
  double ratio() const {
    const double x = x0();
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    const double q = s / x;
    return 0.25 * q * q;
  }
};

struct ProbVector {
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
};

namespace detail {

// Outcome probabilities without the s >= 0 gate (probabilities are even in s,
// which finite-difference callers rely on near the boundary).
inline std::array<double, 3> probs_raw(const Psf& psf, const ModeSet& ms,
                                       const PovmCoeffs& c, double s0, double s) {
  const Eigen::VectorXd cp = overlaps(ms, psf, s0 + 0.5 * s);
  const Eigen::VectorXd cm = overlaps(ms, psf, s0 - 0.5 * s);
  const double a_p = c.a2 * cp(1) + c.a3 * cp(2);
  const double a_m = c.a2 * cm(1) + c.a3 * cm(2);
  const double b_p = c.b1 * cp(0) + c.b2 * cp(1) + c.b3 * cp(2);
  const double b_m = c.b1 * cm(0) + c.b2 * cm(1) + c.b3 * cm(2);
  const double p1 = 0.5 * (a_p * a_p + a_m * a_m);
  const double p2 = 0.5 * (b_p * b_p + b_m * b_m);
  return {p1, p2, 1.0 - p1 - p2};
}

inline void check_alignment(const ModeSet& ms, const SourceConfig& src,
                            double scale) {
  if (std::abs(ms.center - src.s0_hat) > 1e-9 * (scale > 0 ? scale : 1.0)) {
    throw InvalidArgument("mode set center does not match the alignment guess s0_hat");
  }
}

}  // namespace detail

// p_j = (1/2) sum_{+-} |<pi_j|Psi_{+-}>|^2 for j = 1,2 from exact overlaps
// (no small-s expansion); p3 is the complement.
inline ProbVector outcome_probs(const Psf& psf, const ModeSet& ms,
                                const PovmCoeffs& c, const SourceConfig& src) {
  if (!(src.s >= 0.0)) throw InvalidArgument("separation must be >= 0");
  detail::check_alignment(ms, src, psf.length_scale());
  const auto p = detail::probs_raw(psf, ms, c, src.s0, src.s);
  if (p[2] < -1e-9) {
    throw NegativeProbability("p3 = " + std::to_string(p[2]) +
                              " (invalid povm or numerics)");
  }
  ProbVector out;
  out.p1 = p[0] < 0.0 ? 0.0 : p[0];
  out.p2 = p[1] < 0.0 ? 0.0 : p[1];
  out.p3 = p[2] < 0.0 ? 0.0 : p[2];
  return out;
}

// Classical Fisher information matrix of the three-outcome measurement by
// central finite differences in (s0, s). Evaluations at step h and h/2 must
// agree (Richardson check, 1e-4 relative) or the step is rejected. The
// evaluation point must keep s >= 1e-6 length scales: at s = 0 the first
// outcome probability vanishes quadratically and the CFI limit is one-sided.
inline Eigen::Matrix2d cfi_matrix(const Psf& psf, const ModeSet& ms,
                                  const PovmCoeffs& c, const SourceConfig& src,
                                  double fd_rel_step = 1e-4) {
  const double scale = psf.length_scale();
  if (!(fd_rel_step > 0.0)) throw InvalidArgument("fd_rel_step must be > 0");
  if (!(src.s >= 1e-6 * scale)) {
    throw InvalidArgument("cfi evaluation requires s >= 1e-6 length scales");
  }
  detail::check_alignment(ms, src, scale);
  const double h = fd_rel_step * scale;

  auto fd = [&](double step, int param) {
    std::array<double, 3> hi, lo;
    if (param == 0) {
      hi = detail::probs_raw(psf, ms, c, src.s0 + step, src.s);
      lo = detail::probs_raw(psf, ms, c, src.s0 - step, src.s);
    } else {
      hi = detail::probs_raw(psf, ms, c, src.s0, src.s + step);
      lo = detail::probs_raw(psf, ms, c, src.s0, src.s - step);
    }
    std::array<double, 3> d;
    for (int i = 0; i < 3; ++i) d[i] = (hi[i] - lo[i]) / (2.0 * step);
    return d;
  };

  std::array<std::array<double, 3>, 2> d_half;
  for (int j = 0; j < 2; ++j) {
    const auto d1 = fd(h, j);
    const auto d2 = fd(0.5 * h, j);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
      num = std::max(num, std::abs(d1[i] - d2[i]));
      den = std::max(den, std::abs(d2[i]));
    }
    if (den > 1e-300 && num > 1e-4 * den) {
      throw StepTooLarge("finite-difference steps h and h/2 disagree by " +
                         std::to_string(num / den) + " relative");
    }
    d_half[j] = d2;
  }

  const auto p0 = detail::probs_raw(psf, ms, c, src.s0, src.s);
  Eigen::Matrix2d f = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 3; ++i) {
    const double dmax = std::max(std::abs(d_half[0][i]), std::abs(d_half[1][i]));
    if (p0[i] < 1e-14 && dmax < 1e-12) continue;  // vanishing outcome, zero limit
    const double p = std::max(p0[i], 1e-300);
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        f(j, k) += d_half[j][i] * d_half[k][i] / p;
      }
    }
  }
  return f;
}

// Leading-order small-separation CFI matrix in closed form (lengths in units
// of the PSF scale):
//   F_s0s0 = 4 p2 (eps_s0^2 + eps_s^2 / (1 + r))
//   F_ss   = p2 eps_s^2 r / (1 + r)
//   F_s0s  = 4 eps_s^2 / (4 r + 1/r)
// At r = +infinity this reduces to diag(4 p2 eps_s0^2, p2 eps_s^2). The
// off-diagonal expression is kept verbatim from its source; finite-difference
// evaluation of the exact model reproduces the diagonals (tested at 1%) but
// not this off-diagonal's structure, so cross-validation asserts the
// diagonals only and treats the off-diagonal as a bound.
inline Eigen::Matrix2d cfi_smallsep_closedform(const Moments& m,
                                               const EpsilonPair& e, double r) {
  if (!(r > 0.0)) throw InvalidArgument("ratio r must be > 0 (or +infinity)");
  Eigen::Matrix2d f;
  if (std::isinf(r)) {
    f << 4.0 * m.p2 * e.eps_s0_sq, 0.0, 0.0, m.p2 * e.eps_s_sq;
    return f;
  }
  const double f00 = 4.0 * m.p2 * (e.eps_s0_sq + e.eps_s_sq / (1.0 + r));
  const double f11 = m.p2 * e.eps_s_sq * r / (1.0 + r);
  const double f01 = 4.0 * e.eps_s_sq / (4.0 * r + 1.0 / r);
  f << f00, f01, f01, f11;
  return f;
}

// w(s) = <Psi_+|Psi_-> by quadrature; depends only on the separation.
inline double overlap(const Psf& psf, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("separation must be >= 0");
  const Eigen::VectorXd a = psf.displaced_samples(0.5 * s);
  const Eigen::VectorXd b = psf.displaced_samples(-0.5 * s);
  return psf.grid().inner(a, b);
}

// Small-separation closed form for the centroid QFI,
//   Q_s0s0 = 4 [ p2 - |ov|^2 (1 - |ov|^2) / 4 ],
// kept verbatim from its source. This is the leading small-s approximation
// of the exact rank-2 value (see qfi_centroid_exact); the two agree for
// s <~ 0.1 length scales.
inline double qfi_centroid_closedform(const Moments& m, double ov) {
  if (!(std::abs(ov) <= 1.0 + 1e-12)) {
    throw InvalidArgument("overlap magnitude cannot exceed 1");
  }
  const double w2 = ov * ov;
  return 4.0 * (m.p2 - w2 * (1.0 - w2) / 4.0);
}

// Exact rank-2 centroid QFI: Q_s0s0 = 4 [ p2 - gamma^2 ] with
// gamma = |<Psi_+|P|Psi_->| = |integral Psi(x - s/2) Psi'(x + s/2) dx|
// (for a Gaussian, gamma = ov * s / (4 sigma^2)). Independent of x0 by
// translation invariance.
inline double qfi_centroid_exact(const Psf& psf, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("separation must be >= 0");
  const Moments m = psf.momentum_moments();
  const Eigen::VectorXd a = psf.displaced_samples(0.5 * s);
  const Eigen::VectorXd b = psf.displaced(-0.5 * s).derivative_samples(1);
  const double gamma = std::abs(psf.grid().inner(a, b));
  return 4.0 * (m.p2 - gamma * gamma);
}

// Numerical QFI oracle: builds the rank-2 state in the truncated mode basis,
// diagonalizes it, and sums the spectral formula
//   Q_jk = sum_{a,b: la+lb > eps} 2 Re <a|d_j rho|b><b|d_k rho|a> / (la + lb)
// with central finite differences for d rho and eps = 1e-12. The basis must
// capture both displaced states to within 1e-8 in probability mass.
inline Eigen::Matrix2d qfi_oracle(const Psf& psf, const ModeSet& ms,
                                  const SourceConfig& src) {
  if (ms.num_modes() < 6) {
    throw InvalidArgument("qfi oracle needs a mode set with at least 6 modes");
  }
  const double scale = psf.length_scale();
  double h = 1e-4 * scale;
  if (src.s > 0.0 && src.s < 2.0 * h) h = 0.5 * src.s;

  auto rho_at = [&](double s0, double s) {
    const Eigen::VectorXd cp = overlaps(ms, psf, s0 + 0.5 * s);
    const Eigen::VectorXd cm = overlaps(ms, psf, s0 - 0.5 * s);
    for (const auto* cv : {&cp, &cm}) {
      const double deficit = 1.0 - cv->squaredNorm();
      if (deficit > 1e-8) {
        throw TruncationTooSmall("mode basis misses probability mass " +
                                 std::to_string(deficit));
      }
    }
    return Eigen::MatrixXd(0.5 * (cp * cp.transpose() + cm * cm.transpose()));
  };

  const Eigen::MatrixXd rho0 = rho_at(src.s0, src.s);
  const Eigen::MatrixXd dr0 =
      (rho_at(src.s0 + h, src.s) - rho_at(src.s0 - h, src.s)) / (2.0 * h);
  const Eigen::MatrixXd dr1 =
      (rho_at(src.s0, src.s + h) - rho_at(src.s0, src.s - h)) / (2.0 * h);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho0);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd v = es.eigenvectors();
  const Eigen::MatrixXd a0 = v.transpose() * dr0 * v;
  const Eigen::MatrixXd a1 = v.transpose() * dr1 * v;

  const int n = ms.num_modes();
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double w = lam(a) + lam(b);
      if (w <= 1e-12) continue;
      q(0, 0) += 2.0 * a0(a, b) * a0(b, a) / w;
      q(0, 1) += 2.0 * a0(a, b) * a1(b, a) / w;
      q(1, 1) += 2.0 * a1(a, b) * a1(b, a) / w;
    }
  }
  q(1, 0) = q(0, 1);
  return q;
}

// Squared information regrets (1 - F_jj / Q_jj), clamped to [0, 1].
inline Eigen::Vector2d regrets(const Eigen::Matrix2d& f, const Eigen::Matrix2d& q) {
  Eigen::Vector2d r;
  for (int j = 0; j < 2; ++j) {
    if (!(q(j, j) > 1e-300)) throw ZeroQfi("Q_jj must be positive for regrets");
    double v = 1.0 - f(j, j) / q(j, j);
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    r(j) = v;
  }
  return r;
}

// Continuous-outcome direct-imaging baseline:
//   F_jk = integral d_j I d_k I / I dx,  I(x) = (|Psi_+|^2 + |Psi_-|^2) / 2.
inline Eigen::Matrix2d direct_imaging_cfi(const Psf& psf, const SourceConfig& src) {
  if (!(src.s >= 0.0)) throw InvalidArgument("separation must be >= 0");
  const Grid& g = psf.grid();
  const Eigen::VectorXd ap = psf.displaced_samples(src.delta_plus());
  const Eigen::VectorXd am = psf.displaced_samples(src.delta_minus());
  const Eigen::VectorXd dp = psf.displaced(src.delta_plus()).derivative_samples(1);
  const Eigen::VectorXd dm = psf.displaced(src.delta_minus()).derivative_samples(1);

  Eigen::VectorXd intens = 0.5 * (ap.cwiseAbs2() + am.cwiseAbs2());
  Eigen::VectorXd g0 = -(ap.cwiseProduct(dp) + am.cwiseProduct(dm));
  Eigen::VectorXd g1 = -0.5 * (ap.cwiseProduct(dp) - am.cwiseProduct(dm));

  Eigen::VectorXd i00(g.n), i01(g.n), i11(g.n);
  for (int i = 0; i < g.n; ++i) {
    if (intens(i) < 1e-300) {
      i00(i) = i01(i) = i11(i) = 0.0;
      continue;
    }
    i00(i) = g0(i) * g0(i) / intens(i);
    i01(i) = g0(i) * g1(i) / intens(i);
    i11(i) = g1(i) * g1(i) / intens(i);
  }
  Eigen::Matrix2d f;
  f << g.integrate(i00), g.integrate(i01), g.integrate(i01), g.integrate(i11);
  return f;
}

// Bundled comparison of a measurement against the quantum limit. Q assembles
// the exact centroid value (quadrature-accurate closed form) with the oracle
// separation and cross entries; psd_gap is the smallest eigenvalue of Q - F.
struct FisherReport {
  Eigen::Matrix2d F = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Eigen::Vector2d regret_sq = Eigen::Vector2d::Zero();
  double psd_gap = 0.0;
};

inline Eigen::Matrix2d qfi_matrix(const Psf& psf, const ModeSet& oracle_ms,
                                  const SourceConfig& src) {
  Eigen::Matrix2d q = qfi_oracle(psf, oracle_ms, src);
  q(0, 0) = qfi_centroid_exact(psf, src.s);
  return q;
}

inline FisherReport make_fisher_report(const Psf& psf, const ModeSet& ms,
                                       const PovmCoeffs& c, const SourceConfig& src,
                                       const ModeSet* oracle_ms = nullptr) {
  FisherReport rep;
  ModeSet local;
  if (oracle_ms == nullptr) {
    local = build_derivative_basis(psf, ms.center, 8);
    oracle_ms = &local;
  }
  rep.F = cfi_matrix(psf, ms, c, src);
  rep.Q = qfi_matrix(psf, *oracle_ms, src);
  rep.regret_sq = regrets(rep.F, rep.Q);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(rep.Q - rep.F);
  rep.psd_gap = es.eigenvalues().minCoeff();
  return rep;
}

}  // namespace spade
