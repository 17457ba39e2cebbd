#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "spade/basis.hpp"
#include "spade/errors.hpp"

namespace spade {

// Three-element POVM from two measurement vectors in the span of the first
// three basis modes:
//   |pi1> = a2 |Phi2> + a3 |Phi3>      (orthogonal to the PSF mode Phi1)
//   |pi2> = b1 |Phi1> + b2 |Phi2> + b3 |Phi3>
//   Pi3   = I - |pi1><pi1| - |pi2><pi2|
struct PovmCoeffs {
  double a2 = 0.0;
  double a3 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
};

// Saturating two-angle family. Both angles live in the open interval
// (0, pi/2): aligning either measurement vector with a coordinate axis
// degenerates the measurement, so the endpoints are rejected.
struct AnglePair {
  double alpha = 0.0;
  double beta = 0.0;
};

// Information-allocation parameters: eps_s^2 = a2^2 governs separation
// information, eps_s0^2 = b2^2 / (1 - b1^2) governs centroid information.
struct EpsilonPair {
  double eps_s_sq = 0.0;
  double eps_s0_sq = 0.0;
};

inline constexpr double kAngleMargin = 1e-6;

inline PovmCoeffs from_angles(const AnglePair& ap) {
  const double half_pi = 1.5707963267948966;
  for (double v : {ap.alpha, ap.beta}) {
    if (!(v > kAngleMargin) || !(v < half_pi - kAngleMargin)) {
      throw AngleOutOfRange("angles must lie strictly inside (0, pi/2), margin 1e-6");
    }
  }
  PovmCoeffs c;
  c.a2 = std::cos(ap.alpha);
  c.a3 = std::sin(ap.alpha);
  c.b1 = std::cos(ap.beta);
  c.b2 = std::sin(ap.alpha) * std::sin(ap.beta);
  c.b3 = -std::cos(ap.alpha) * std::sin(ap.beta);
  return c;
}

inline EpsilonPair epsilons(const PovmCoeffs& c) {
  const double d = 1.0 - c.b1 * c.b1;
  if (d < 1e-12) {
    throw DegenerateB1("1 - b1^2 < 1e-12: centroid allocation undefined");
  }
  return {c.a2 * c.a2, c.b2 * c.b2 / d};
}

struct PovmDiagnostics {
  bool signs_ok = false;        // a2 > 0, b1 > 0, b2 > 0
  bool norms_ok = false;        // |pi1| <= 1 and |pi2| <= 1
  double norm_pi1_sq = 0.0;
  double norm_pi2_sq = 0.0;
  double condition_value = 0.0;  // a2^2 (1 - b1^2) + b1^2 + b2^2
  bool closed_form_valid = false;  // signs && norms && condition <= 1
  double min_eigenvalue = 0.0;     // of the Pi3 3x3 restriction
  bool eigen_valid = false;        // min eigenvalue >= -1e-10
  bool valid = false;              // both verdicts
  bool disagreement = false;       // verdicts differ (possible off the
                                   // orthogonal-pair family)
  std::vector<std::string> failures;
};

inline Eigen::Vector3d pi1_vector(const PovmCoeffs& c) {
  return {0.0, c.a2, c.a3};
}

inline Eigen::Vector3d pi2_vector(const PovmCoeffs& c) {
  return {c.b1, c.b2, c.b3};
}

// Checks the sign constraints, the norm bounds, the closed-form positivity
// condition, and (independently) the eigenvalues of the Pi3 restriction.
// Never throws; every violation is reported by name.
inline PovmDiagnostics validate(const PovmCoeffs& c) {
  PovmDiagnostics d;
  const Eigen::Vector3d p1 = pi1_vector(c), p2 = pi2_vector(c);
  d.norm_pi1_sq = p1.squaredNorm();
  d.norm_pi2_sq = p2.squaredNorm();
  d.signs_ok = c.a2 > 0.0 && c.b1 > 0.0 && c.b2 > 0.0;
  d.norms_ok = d.norm_pi1_sq <= 1.0 + 1e-12 && d.norm_pi2_sq <= 1.0 + 1e-12;
  d.condition_value = c.a2 * c.a2 * (1.0 - c.b1 * c.b1) + c.b1 * c.b1 + c.b2 * c.b2;
  d.closed_form_valid =
      d.signs_ok && d.norms_ok && d.condition_value <= 1.0 + 1e-12;

  const Eigen::Matrix3d pi3 = Eigen::Matrix3d::Identity() - p1 * p1.transpose() -
                              p2 * p2.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(pi3);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  d.eigen_valid = d.min_eigenvalue >= -1e-10;

  d.valid = d.closed_form_valid && d.eigen_valid;
  d.disagreement = d.closed_form_valid != d.eigen_valid;
  if (!d.signs_ok) d.failures.push_back("signs");
  if (!d.norms_ok) d.failures.push_back("norms");
  if (d.condition_value > 1.0 + 1e-12) d.failures.push_back("positivity-condition");
  if (!d.eigen_valid) d.failures.push_back("eigenvalues");
  return d;
}

// The three POVM elements restricted to span{Phi1, Phi2, Phi3}. Requires
// valid coefficients: completeness and positivity both hold on the
// restriction, and the identity continues outside the span.
inline std::array<Eigen::Matrix3d, 3> povm_matrices(const PovmCoeffs& c) {
  const PovmDiagnostics d = validate(c);
  if (!d.valid) {
    std::string what = "invalid povm coefficients:";
    for (const auto& f : d.failures) what += " " + f;
    throw PovmValidationError(what);
  }
  const Eigen::Vector3d p1 = pi1_vector(c), p2 = pi2_vector(c);
  std::array<Eigen::Matrix3d, 3> out;
  out[0] = p1 * p1.transpose();
  out[1] = p2 * p2.transpose();
  out[2] = Eigen::Matrix3d::Identity() - out[0] - out[1];
  return out;
}

// Sampled measurement-mode functions pi1(x), pi2(x) on the mode-set grid,
// unit-normalized (a no-op for the angle family, whose vectors are unit).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> mode_functions(
    const PovmCoeffs& c, const ModeSet& ms) {
  if (ms.num_modes() < 3) throw InvalidArgument("mode set needs at least 3 modes");
  Eigen::VectorXd f1 = c.a2 * ms.modes.col(1) + c.a3 * ms.modes.col(2);
  Eigen::VectorXd f2 = c.b1 * ms.modes.col(0) + c.b2 * ms.modes.col(1) +
                       c.b3 * ms.modes.col(2);
  const double n1 = std::sqrt(ms.grid.inner(f1, f1));
  const double n2 = std::sqrt(ms.grid.inner(f2, f2));
  if (!(n1 > 1e-300) || !(n2 > 1e-300)) {
    throw InvalidArgument("measurement vector has zero norm");
  }
  return {f1 / n1, f2 / n2};
}

}  // namespace spade
