#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spade/spade.hpp"

using Catch::Matchers::WithinAbs;
using namespace spade;

namespace {

double gram_error(const ModeSet& ms) {
  const int n = ms.num_modes();
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double g = ms.grid.inner(ms.modes.col(i), ms.modes.col(j));
      e = std::max(e, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  return e;
}

}  // namespace

TEST_CASE("derivative basis of a gaussian is orthonormal", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  for (int n : {3, 6, 8}) {
    REQUIRE(gram_error(build_derivative_basis(psf, 0.0, n)) < 1e-8);
  }
}

TEST_CASE("mode 1 is the input psf, bitwise", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 3);
  REQUIRE((ms.modes.col(0) - psf.samples()).lpNorm<Eigen::Infinity>() == 0.0);

  const Grid g = Grid::uniform(-8.0, 8.0, 2048);
  const Psf sampled = Psf::from_samples(g, Psf::gaussian(1.0, g).samples());
  const ModeSet mss = build_derivative_basis(sampled, 0.0, 3);
  REQUIRE((mss.modes.col(0) - sampled.samples()).lpNorm<Eigen::Infinity>() ==
          0.0);
}

TEST_CASE("gaussian modes are the hermite-gauss modes", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 8);
  for (int k = 0; k < 8; ++k) {
    const Eigen::VectorXd hg = hg_analytic_samples(ms.grid, 1.0, k);
    REQUIRE((ms.modes.col(k) - hg).lpNorm<Eigen::Infinity>() < 1e-6);
  }
  // first three carry the closed-form identification and much tighter error
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd hg = hg_analytic_samples(ms.grid, 1.0, k);
    REQUIRE((ms.modes.col(k) - hg).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  REQUIRE(std::abs(ms.grid.inner(ms.modes.col(1), ms.modes.col(2))) < 1e-10);
}

TEST_CASE("basis from sampled data agrees with the analytic one", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const Grid g = Grid::uniform(-8.0, 8.0, 4096);
  const Psf sampled = Psf::from_samples(g, Psf::gaussian(1.0, g).samples());
  const ModeSet ms = build_derivative_basis(sampled, 0.0, 6);
  REQUIRE(gram_error(ms) < 1e-5);
  const ModeSet ref = build_derivative_basis(psf, 0.0, 6);
  for (int k = 0; k < 3; ++k) {
    double e = 0.0;
    for (int i = 0; i < g.n; ++i) {
      if (std::abs(g.x(i)) > 6.0) continue;  // stencil edge padding region
      e = std::max(e, std::abs(ms.modes(i, k) - ref.modes(i, k)));
    }
    REQUIRE(e < 1e-5);
  }
}

TEST_CASE("mode count limits", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  REQUIRE_THROWS_AS(build_derivative_basis(psf, 0.0, 2), InvalidArgument);
  REQUIRE_THROWS_AS(build_derivative_basis(psf, 0.0, 13), Unsupported);
}

TEST_CASE("overlaps at zero displacement pick out mode 1", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 6);
  const Eigen::VectorXd c = overlaps(ms, psf, 0.0);
  REQUIRE_THAT(c(0), WithinAbs(1.0, 1e-8));
  for (int k = 1; k < 6; ++k) REQUIRE_THAT(c(k), WithinAbs(0.0, 1e-10));
}

TEST_CASE("coherent displacement law for the gaussian", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 6);

  // |c_1|^2 at d = 0.2: Q e^{-Q} at Q = 0.01
  const Eigen::VectorXd c = overlaps(ms, psf, 0.2);
  REQUIRE_THAT(c(1) * c(1), WithinAbs(0.009900498337491681, 1e-10));

  // law for n <= 3 out to d = 2 sigma needs the wide grid
  const Psf pw = Psf::gaussian(1.0, Grid::wide(1.0));
  const ModeSet mw = build_derivative_basis(pw, 0.0, 6);
  for (double d : {0.5, 1.0, 2.0}) {
    const Eigen::VectorXd cw = overlaps(mw, pw, d);
    const double q = d * d / 4.0;
    double fact = 1.0;
    for (int n = 0; n <= 3; ++n) {
      if (n > 0) fact *= n;
      const double want = std::exp(-q) * std::pow(q, n) / fact;
      REQUIRE_THAT(cw(n) * cw(n), WithinAbs(want, 1e-8));
    }
  }
}

TEST_CASE("overlap parity under displacement reversal", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 6);
  const Eigen::VectorXd cp = overlaps(ms, psf, 0.7);
  const Eigen::VectorXd cm = overlaps(ms, psf, -0.7);
  for (int k = 0; k < 6; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    REQUIRE_THAT(cm(k), WithinAbs(sign * cp(k), 1e-8));
  }
}

TEST_CASE("completeness of the truncated basis at small displacement",
          "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 8);
  const Eigen::VectorXd c = overlaps(ms, psf, 1.0);
  REQUIRE(std::abs(1.0 - c.squaredNorm()) < 1e-6);
}

TEST_CASE("overlaps require a matching grid", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 3);
  const Psf other = Psf::gaussian(1.0, Grid::uniform(-8.0, 8.0, 2048));
  REQUIRE_THROWS_AS(overlaps(ms, other, 0.1), InvalidArgument);
}

TEST_CASE("displacement overflow propagates through overlaps", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.0, 3);
  REQUIRE_THROWS_AS(overlaps(ms, psf, 3.0), SupportOverflow);
}

TEST_CASE("analytic hermite-gauss values", "[basis]") {
  REQUIRE_THAT(hg_analytic(0, 1.0, 0.0), WithinAbs(0.6316187777460647, 1e-14));
  REQUIRE(hg_analytic(1, 1.0, 0.0) == 0.0);

  const Grid g = Grid::standard(1.0);
  const Eigen::VectorXd hg2 = hg_analytic_samples(g, 1.0, 2);
  REQUIRE_THAT(g.integrate(hg2.cwiseAbs2()), WithinAbs(1.0, 1e-10));

  REQUIRE_THROWS_AS(hg_analytic(13, 1.0, 0.0), Unsupported);
  REQUIRE_THROWS_AS(hg_analytic(-1, 1.0, 0.0), Unsupported);
  REQUIRE_THROWS_AS(hg_analytic(2, -1.0, 0.0), InvalidArgument);
}

TEST_CASE("basis centered away from the origin", "[basis]") {
  const Psf psf = Psf::gaussian(1.0);
  const ModeSet ms = build_derivative_basis(psf, 0.5, 6);
  REQUIRE(gram_error(ms) < 1e-8);
  // mode 1 peaks at the center
  int imax = 0;
  ms.modes.col(0).maxCoeff(&imax);
  REQUIRE(std::abs(ms.grid.x(imax) - 0.5) <= ms.grid.h);
  // displacement law holds about the new center: overlap with Psi_{0.5 + d}
  const Eigen::VectorXd c = overlaps(ms, psf, 0.7);  // d - center = 0.2
  REQUIRE_THAT(c(1) * c(1), WithinAbs(0.009900498337491681, 1e-9));
}
