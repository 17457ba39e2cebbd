#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "spade/spade.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace spade;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& body) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

std::string gaussian_csv_body(double sigma, double lo, double hi, int n,
                              bool header = true) {
  std::string body;
  if (header) body += "x,amplitude\n# generated for tests\n";
  const Psf ref = Psf::gaussian(sigma, Grid::uniform(lo, hi, n));
  for (int i = 0; i < n; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", ref.grid().x(i),
                  ref.samples()(i));
    body += buf;
  }
  return body;
}

}  // namespace

TEST_CASE("gaussian momentum moments match analytic values", "[psf]") {
  for (double sigma : {0.5, 1.0, 2.0}) {
    const Psf psf = Psf::gaussian(sigma);
    const Moments m = psf.momentum_moments();
    REQUIRE_THAT(m.p2, WithinRel(1.0 / (4.0 * sigma * sigma), 1e-8));
    REQUIRE_THAT(m.p4, WithinRel(3.0 / (16.0 * std::pow(sigma, 4)), 1e-8));
    REQUIRE_THAT(m.p2 * sigma * sigma, WithinRel(0.25, 1e-6));
  }
}

TEST_CASE("gaussian amplitude evaluation", "[psf]") {
  const Psf psf = Psf::gaussian(1.0);
  REQUIRE_THAT(psf.evaluate(0.0), WithinAbs(0.6316187777460647, 1e-14));
  REQUIRE(psf.evaluate(0.7) == psf.evaluate(-0.7));

  const Grid g = Grid::uniform(-8.0, 8.0, 2048);
  const Psf sampled =
      Psf::from_samples(g, Psf::gaussian(1.0, g).samples());
  REQUIRE_THAT(sampled.evaluate(1.0), WithinAbs(psf.evaluate(1.0), 1e-6));
  REQUIRE_THROWS_AS(sampled.evaluate(9.0), OutOfRange);
}

TEST_CASE("displacement identity, shift, and overlap", "[psf]") {
  const Psf psf = Psf::gaussian(1.0);
  const Grid& g = psf.grid();

  REQUIRE((psf.displaced_samples(0.0) - psf.samples()).lpNorm<Eigen::Infinity>() ==
          0.0);

  const Eigen::VectorXd shifted = psf.displaced_samples(0.5);
  int imax = 0;
  shifted.maxCoeff(&imax);
  REQUIRE(std::abs(g.x(imax) - 0.5) <= g.h);

  REQUIRE_THAT(std::abs(g.integrate(shifted.cwiseAbs2()) - 1.0),
               WithinAbs(0.0, 1e-8));

  const double ov = g.inner(psf.samples(), psf.displaced_samples(1.0));
  REQUIRE_THAT(ov, WithinAbs(0.8824969025845955, 1e-6));
}

TEST_CASE("displacement beyond the grid support is rejected", "[psf]") {
  const Psf psf = Psf::gaussian(1.0);
  REQUIRE_THROWS_AS(psf.displaced_samples(3.0), SupportOverflow);

  const Grid g = Grid::uniform(-8.0, 8.0, 2048);
  const Psf sampled = Psf::from_samples(g, Psf::gaussian(1.0, g).samples());
  REQUIRE_THROWS_AS(sampled.displaced_samples(3.0), SupportOverflow);
}

TEST_CASE("overlap depends only on the displacement difference", "[psf]") {
  const Psf psf = Psf::gaussian(1.0);
  const Grid& g = psf.grid();
  const double pairs[][2] = {{0.3, -0.2}, {1.0, 0.5}, {-0.7, 0.3}};
  for (const auto& ab : pairs) {
    const double got =
        g.inner(psf.displaced_samples(ab[0]), psf.displaced_samples(ab[1]));
    const double want = std::exp(-(ab[0] - ab[1]) * (ab[0] - ab[1]) / 8.0);
    REQUIRE_THAT(got, WithinAbs(want, 1e-6));
  }
}

TEST_CASE("validate passes a gaussian and flags broken inputs", "[psf]") {
  const Psf psf = Psf::gaussian(1.0);
  const PsfDiagnostics ok = psf.validate();
  REQUIRE(ok.ok);
  REQUIRE(ok.failures.empty());

  const Grid& g = psf.grid();
  // odd perturbation: breaks symmetry, survives recentering
  Eigen::VectorXd bent = psf.samples() + 0.01 * g.x;
  const PsfDiagnostics asym = Psf::from_samples(g, bent).validate();
  REQUIRE_FALSE(asym.ok);
  REQUIRE(std::find(asym.failures.begin(), asym.failures.end(), "symmetry") !=
          asym.failures.end());
  REQUIRE(asym.asymmetry > tol::kAsymmetry);

  // doubled amplitude: integral of |Psi|^2 is 4, error 3
  const PsfDiagnostics unnorm =
      Psf::from_samples_raw(g, 2.0 * psf.samples()).validate();
  REQUIRE_FALSE(unnorm.ok);
  REQUIRE(std::find(unnorm.failures.begin(), unnorm.failures.end(),
                    "normalization") != unnorm.failures.end());
  REQUIRE_THAT(unnorm.norm_error, WithinAbs(3.0, 1e-6));
}

TEST_CASE("csv ingestion round trip", "[psf]") {
  const std::string path =
      write_temp_csv("psf_ok.csv", gaussian_csv_body(1.0, -8.0, 8.0, 2048));
  const Psf psf = Psf::from_csv(path);
  REQUIRE(psf.kind() == Psf::Kind::Sampled);
  const Moments m = psf.momentum_moments();
  REQUIRE_THAT(m.p2, WithinRel(0.25, 1e-6));
  REQUIRE_THAT(m.p4, WithinRel(0.1875, 1e-6));
  REQUIRE(psf.validate().ok);
}

TEST_CASE("csv format violations are rejected", "[psf]") {
  REQUIRE_THROWS_AS(Psf::from_csv("/tmp/definitely_missing_psf.csv"),
                    FileFormatError);

  std::string body = gaussian_csv_body(1.0, -8.0, 8.0, 128, false);
  body += "0.5,not_a_number\n";
  REQUIRE_THROWS_AS(Psf::from_csv(write_temp_csv("psf_junk.csv", body)),
                    FileFormatError);

  // non-uniform spacing: displace one x entry well past the 1e-9 tolerance
  std::string rows = gaussian_csv_body(1.0, -8.0, 8.0, 128, false);
  const auto pos = rows.find("\n", rows.size() / 2);
  std::string broken = rows.substr(0, pos + 1);
  broken += "3.1415,0.1\n";
  broken += rows.substr(pos + 1);
  REQUIRE_THROWS_AS(Psf::from_csv(write_temp_csv("psf_nonuniform.csv", broken)),
                    FileFormatError);

  std::string few;  // syntactically fine but too few rows
  for (int i = 0; i < 50; ++i) {
    few += std::to_string(-4.0 + i * 8.0 / 49.0) + ",0.1\n";
  }
  REQUIRE_THROWS_AS(Psf::from_csv(write_temp_csv("psf_short.csv", few)),
                    FileFormatError);
}

TEST_CASE("derivative samples match analytic forms", "[psf]") {
  const Psf psf = Psf::gaussian(1.0);
  const Grid& g = psf.grid();

  const Eigen::VectorXd d1 = psf.derivative_samples(1);
  const Eigen::VectorXd want1 = (-0.5 * g.x.array() * psf.samples().array());
  REQUIRE((d1 - want1.matrix()).lpNorm<Eigen::Infinity>() < 1e-12);

  // Sampled path: compare away from the grid edge, where the stencil's
  // zero padding dominates (the integrated moments are unaffected; see
  // the sampled-moments test below).
  const Grid gs = Grid::uniform(-8.0, 8.0, 4096);
  const Psf sampled = Psf::from_samples(gs, Psf::gaussian(1.0, gs).samples());
  const auto interior_err = [&](int order) {
    const Eigen::VectorXd got = sampled.derivative_samples(order);
    const Eigen::VectorXd want = psf.derivative_samples(order);
    double e = 0.0;
    for (int i = 0; i < gs.n; ++i) {
      if (std::abs(gs.x(i)) > 6.0) continue;
      e = std::max(e, std::abs(got(i) - want(i)));
    }
    return e;
  };
  REQUIRE(interior_err(1) < 1e-12);
  REQUIRE(interior_err(2) < 1e-9);
  // order three exercises the spectral path
  REQUIRE(interior_err(3) < 1e-4);
}

TEST_CASE("sampled momentum moments match analytic values", "[psf]") {
  const Grid g = Grid::uniform(-8.0, 8.0, 4096);
  const Psf sampled = Psf::from_samples(g, Psf::gaussian(1.0, g).samples());
  const Moments m = sampled.momentum_moments();
  REQUIRE_THAT(m.p2, WithinRel(0.25, 1e-6));
  REQUIRE_THAT(m.p4, WithinRel(0.1875, 2e-6));
}

TEST_CASE("grid constructor guards", "[psf]") {
  REQUIRE_THROWS_AS(Grid::uniform(0.0, 1.0, 32), InvalidArgument);
  REQUIRE_THROWS_AS(Grid::uniform(1.0, 0.0, 128), InvalidArgument);
  REQUIRE_THROWS_AS(Psf::gaussian(-1.0), InvalidArgument);
}
