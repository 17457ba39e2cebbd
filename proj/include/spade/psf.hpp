#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "spade/errors.hpp"
#include "spade/grid.hpp"

namespace spade {

// Even momentum moments of the PSF state: p2 = integral |Psi'|^2 dx,
// p4 = integral |Psi''|^2 dx (integration by parts for real Psi).
struct Moments {
  double p2 = 0.0;
  double p4 = 0.0;
};

struct PsfDiagnostics {
  double norm_error = 0.0;  // |integral Psi^2 dx - 1|
  double asymmetry = 0.0;   // max_x |Psi(c+u) - Psi(c-u)| about the center c
  double tail_mass = 0.0;   // intensity beyond the grid (exact for analytic,
                            // edge-amplitude estimate for sampled data)
  bool ok = false;
  std::vector<std::string> failures;  // names of violated invariants
};

namespace tol {
inline constexpr double kNormAnalytic = 1e-8;
inline constexpr double kNormSampled = 1e-6;
inline constexpr double kAsymmetry = 1e-6;
inline constexpr double kTailMass = 1e-10;
inline constexpr double kDisplaceTail = 1e-10;
inline constexpr double kCsvSpacingRel = 1e-9;
}  // namespace tol

// Amplitude point-spread function on a grid. Either analytic Gaussian of
// width sigma (evaluable everywhere, centered anywhere) or sampled data
// (evaluable on the grid by local interpolation). Immutable after
// construction; all operations are pure.
class Psf {
 public:
  enum class Kind { GaussianAnalytic, Sampled };

  static Psf gaussian(double sigma, const Grid& grid) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian psf requires sigma > 0");
    Psf p;
    p.kind_ = Kind::GaussianAnalytic;
    p.grid_ = grid;
    p.sigma_ = sigma;
    p.center_ = 0.0;
    p.samples_ = p.grid_.x.unaryExpr(
        [&](double x) { return gaussian_amplitude(sigma, x); });
    return p;
  }

  static Psf gaussian(double sigma) { return gaussian(sigma, Grid::standard(sigma)); }

  // Ingestion pipeline: recenters the intensity centroid to 0 and
  // renormalizes before any use (symmetry is then reported by validate()).
  static Psf from_samples(const Grid& grid, const Eigen::VectorXd& amplitudes) {
    if (amplitudes.size() != grid.n) {
      throw InvalidArgument("sample count does not match grid");
    }
    const double n0 = grid.integrate(amplitudes.cwiseAbs2());
    if (!(n0 > 1e-300)) throw PsfValidationError("sampled psf has zero norm");
    double xbar = grid.inner(grid.x, amplitudes.cwiseAbs2()) / n0;
    Eigen::VectorXd f = amplitudes;
    for (int pass = 0; pass < 2; ++pass) {
      if (std::abs(xbar) > 1e-13 * (grid.xmax - grid.xmin)) {
        Eigen::VectorXd g(grid.n);
        for (int i = 0; i < grid.n; ++i) g(i) = interp6(grid, f, grid.x(i) + xbar);
        f = g;
      }
      const double nf = grid.integrate(f.cwiseAbs2());
      if (!(nf > 1e-300)) throw PsfValidationError("sampled psf lost all mass while recentering");
      f /= std::sqrt(nf);
      xbar = grid.inner(grid.x, f.cwiseAbs2());
    }
    Psf p;
    p.kind_ = Kind::Sampled;
    p.grid_ = grid;
    p.center_ = 0.0;
    p.samples_ = f;
    p.sigma_ = std::sqrt(grid.inner(grid.x.cwiseAbs2(), f.cwiseAbs2()));
    if (!(p.sigma_ > 0.0)) throw PsfValidationError("sampled psf has zero width");
    return p;
  }

  // Stores samples exactly as given (no recentering, no renormalization);
  // intended for diagnostics on raw data via validate().
  static Psf from_samples_raw(const Grid& grid, const Eigen::VectorXd& amplitudes) {
    if (amplitudes.size() != grid.n) {
      throw InvalidArgument("sample count does not match grid");
    }
    Psf p;
    p.kind_ = Kind::Sampled;
    p.grid_ = grid;
    p.center_ = 0.0;
    p.samples_ = amplitudes;
    const double n0 = grid.integrate(amplitudes.cwiseAbs2());
    p.sigma_ = n0 > 1e-300
                   ? std::sqrt(grid.inner(grid.x.cwiseAbs2(), amplitudes.cwiseAbs2()) / n0)
                   : 0.0;
    return p;
  }

  // Two-column CSV "x,amplitude": strictly increasing uniformly spaced x
  // (relative tolerance 1e-9), optional header row, '#' comments allowed.
  static Psf from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open psf file: " + path);
    std::vector<double> xs, fs;
    std::string line;
    bool first_data_candidate = true;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#') continue;
      double x = 0.0, f = 0.0;
      if (!parse_pair(s, x, f)) {
        if (first_data_candidate) {  // optional header row
          first_data_candidate = false;
          continue;
        }
        throw FileFormatError("unparsable row at line " + std::to_string(lineno) +
                              " in " + path);
      }
      first_data_candidate = false;
      xs.push_back(x);
      fs.push_back(f);
    }
    if (xs.size() < 64) {
      throw FileFormatError("psf file needs at least 64 rows: " + path);
    }
    const int n = static_cast<int>(xs.size());
    const double hbar = (xs.back() - xs.front()) / (n - 1);
    if (!(hbar > 0.0)) throw FileFormatError("x column must be strictly increasing");
    for (int i = 1; i < n; ++i) {
      const double d = xs[i] - xs[i - 1];
      if (!(d > 0.0) || std::abs(d - hbar) > tol::kCsvSpacingRel * hbar) {
        throw FileFormatError("non-uniform x spacing at row " + std::to_string(i + 1));
      }
    }
    Grid g = Grid::uniform(xs.front(), xs.back(), n);
    Eigen::VectorXd amp = Eigen::Map<Eigen::VectorXd>(fs.data(), n);
    return from_samples(g, amp);
  }

  Kind kind() const { return kind_; }
  bool analytic() const { return kind_ == Kind::GaussianAnalytic; }
  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& samples() const { return samples_; }
  double center() const { return center_; }

  // Gaussian width for analytic PSFs; RMS intensity width for sampled ones
  // (identical for a Gaussian). Sets the natural unit for steps and grids.
  double length_scale() const { return sigma_; }

  // Amplitude at x. Sampled PSFs are interpolated and reject points beyond
  // the grid; the analytic Gaussian is defined everywhere.
  double evaluate(double x) const {
    if (kind_ == Kind::GaussianAnalytic) {
      return gaussian_amplitude(sigma_, x - center_);
    }
    if (!grid_.contains(x)) {
      throw OutOfRange("sampled psf queried outside its grid");
    }
    return interp6(grid_, samples_, x);
  }

  // Samples of the PSF displaced by d, i.e. Psi(x - d). Rejects displacements
  // whose intensity tail beyond the grid exceeds 1e-10 (norm is then
  // preserved within 1e-8 automatically).
  Eigen::VectorXd displaced_samples(double d) const {
    if (kind_ == Kind::GaussianAnalytic) {
      const double c = center_ + d;
      const double t = gaussian_tail_beyond(sigma_, c, grid_);
      if (t > tol::kDisplaceTail) {
        throw SupportOverflow("displacement pushes tail mass " + fmt(t) +
                              " beyond the grid");
      }
      return grid_.x.unaryExpr(
          [&](double x) { return gaussian_amplitude(sigma_, x - c); });
    }
    if (d == 0.0) return samples_;
    Eigen::VectorXd g(grid_.n);
    for (int i = 0; i < grid_.n; ++i) g(i) = interp6(grid_, samples_, grid_.x(i) - d);
    const double n0 = grid_.integrate(samples_.cwiseAbs2());
    const double n1 = grid_.integrate(g.cwiseAbs2());
    const double t = (n0 - n1) / (n0 > 0 ? n0 : 1.0);
    if (t > tol::kDisplaceTail) {
      throw SupportOverflow("displacement pushes tail mass " + fmt(t) +
                            " beyond the grid");
    }
    return g;
  }

  // Displaced PSF as a new value (same grid).
  Psf displaced(double d) const {
    Psf p = *this;
    if (kind_ == Kind::GaussianAnalytic) {
      const double t = gaussian_tail_beyond(sigma_, center_ + d, grid_);
      if (t > tol::kDisplaceTail) {
        throw SupportOverflow("displacement pushes tail mass " + fmt(t) +
                              " beyond the grid");
      }
      p.center_ = center_ + d;
      p.samples_ = grid_.x.unaryExpr(
          [&](double x) { return gaussian_amplitude(sigma_, x - p.center_); });
      return p;
    }
    p.samples_ = displaced_samples(d);
    p.center_ = center_ + d;
    return p;
  }

  // Samples of d^order Psi / dx^order. Analytic Gaussians use the Hermite
  // recursion; sampled PSFs use 7-point central stencils for orders 1-2 and
  // FFT spectral differentiation (with a noise-floor cutoff) for orders >= 3,
  // where repeated stenciling loses all accuracy.
  Eigen::VectorXd derivative_samples(int order) const {
    if (order < 0) throw InvalidArgument("derivative order must be >= 0");
    if (order == 0) return samples_;
    if (kind_ == Kind::GaussianAnalytic) return gaussian_derivative(order);
    if (order <= 2) return stencil_derivative(order);
    return spectral_derivative(order);
  }

  // (p2, p4) by quadrature of derivative samples.
  Moments momentum_moments() const {
    Moments m;
    const Eigen::VectorXd d1 = derivative_samples(1);
    const Eigen::VectorXd d2 = derivative_samples(2);
    m.p2 = grid_.integrate(d1.cwiseAbs2());
    m.p4 = grid_.integrate(d2.cwiseAbs2());
    const double l = sigma_ > 0 ? sigma_ : 1.0;
    if ((m.p4 - m.p2 * m.p2) * l * l * l * l <= 1e-12) {
      throw DegeneratePsf("p4 - p2^2 = " + fmt(m.p4 - m.p2 * m.p2) +
                          " is not positive definite");
    }
    return m;
  }

  // Reports normalization error, asymmetry about the center, and tail mass;
  // ok iff all are under tolerance. Never throws: failures are listed.
  PsfDiagnostics validate() const {
    PsfDiagnostics d;
    d.norm_error = std::abs(grid_.integrate(samples_.cwiseAbs2()) - 1.0);
    if (kind_ == Kind::GaussianAnalytic) {
      d.asymmetry = 0.0;  // exact by construction
      d.tail_mass = gaussian_tail_beyond(sigma_, center_, grid_);
    } else {
      double a = 0.0;
      for (int i = 0; i < grid_.n; ++i) {
        const double mirror = 2.0 * center_ - grid_.x(i);
        if (!grid_.contains(mirror)) continue;
        a = std::max(a, std::abs(samples_(i) - interp6(grid_, samples_, mirror)));
      }
      d.asymmetry = a;
      const double edge = samples_(0) * samples_(0) +
                          samples_(grid_.n - 1) * samples_(grid_.n - 1);
      d.tail_mass = edge * (sigma_ > 0 ? sigma_ : grid_.h);
    }
    const double norm_tol =
        kind_ == Kind::GaussianAnalytic ? tol::kNormAnalytic : tol::kNormSampled;
    if (d.norm_error > norm_tol) d.failures.push_back("normalization");
    if (d.asymmetry > tol::kAsymmetry) d.failures.push_back("symmetry");
    if (d.tail_mass > tol::kTailMass) d.failures.push_back("tail");
    d.ok = d.failures.empty();
    return d;
  }

 private:
  Kind kind_ = Kind::GaussianAnalytic;
  Grid grid_;
  Eigen::VectorXd samples_;
  double sigma_ = 1.0;
  double center_ = 0.0;

  static double gaussian_amplitude(double sigma, double u) {
    const double two_pi = 6.283185307179586476925286766559;
    return std::pow(two_pi * sigma * sigma, -0.25) *
           std::exp(-u * u / (4.0 * sigma * sigma));
  }

  // Intensity mass of N(c, sigma^2) outside [g.xmin, g.xmax].
  static double gaussian_tail_beyond(double sigma, double c, const Grid& g) {
    const double sq2 = 1.4142135623730951;
    const double hi = 0.5 * std::erfc((g.xmax - c) / (sigma * sq2));
    const double lo = 0.5 * std::erfc((c - g.xmin) / (sigma * sq2));
    return hi + lo;
  }

  // d^n/dx^n of the Gaussian amplitude via physicists' Hermite polynomials:
  // (-d/dx)^n Psi = (2 sigma)^{-n} H_n(u) Psi with u = (x - c) / (2 sigma).
  Eigen::VectorXd gaussian_derivative(int order) const {
    const Eigen::VectorXd u = (grid_.x.array() - center_).matrix() / (2.0 * sigma_);
    Eigen::VectorXd hprev = Eigen::VectorXd::Ones(grid_.n);
    Eigen::VectorXd h = 2.0 * u;
    if (order == 0) h = hprev;
    for (int k = 1; k < order; ++k) {
      Eigen::VectorXd hnext =
          2.0 * u.cwiseProduct(h) - 2.0 * static_cast<double>(k) * hprev;
      hprev = h;
      h = hnext;
    }
    const double sign = (order % 2 == 0) ? 1.0 : -1.0;
    const double scale = sign * std::pow(2.0 * sigma_, -order);
    return scale * h.cwiseProduct(samples_);
  }

  double padded(int i) const {
    return (i < 0 || i >= grid_.n) ? 0.0 : samples_(i);
  }

  Eigen::VectorXd stencil_derivative(int order) const {
    Eigen::VectorXd d(grid_.n);
    const double h = grid_.h;
    if (order == 1) {
      for (int i = 0; i < grid_.n; ++i) {
        d(i) = (-padded(i - 3) + 9.0 * padded(i - 2) - 45.0 * padded(i - 1) +
                45.0 * padded(i + 1) - 9.0 * padded(i + 2) + padded(i + 3)) /
               (60.0 * h);
      }
    } else {
      for (int i = 0; i < grid_.n; ++i) {
        d(i) = (2.0 * padded(i - 3) - 27.0 * padded(i - 2) +
                270.0 * padded(i - 1) - 490.0 * padded(i) +
                270.0 * padded(i + 1) - 27.0 * padded(i + 2) +
                2.0 * padded(i + 3)) /
               (180.0 * h * h);
      }
    }
    return d;
  }

  Eigen::VectorXd spectral_derivative(int order) const {
    const int n = grid_.n;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> time(n), freq(n);
    for (int i = 0; i < n; ++i) time[i] = samples_(i);
    fft.fwd(freq, time);
    double fmax = 0.0;
    for (const auto& c : freq) fmax = std::max(fmax, std::abs(c));
    const double cutoff = 1e-13 * fmax;
    const double two_pi = 6.283185307179586476925286766559;
    const double dk = two_pi / (n * grid_.h);
    for (int j = 0; j < n; ++j) {
      if (std::abs(freq[j]) < cutoff) {
        freq[j] = 0.0;
        continue;
      }
      const int m = (j <= n / 2) ? j : j - n;
      std::complex<double> ik(0.0, m * dk);
      std::complex<double> mult(1.0, 0.0);
      for (int q = 0; q < order; ++q) mult *= ik;
      freq[j] *= mult;
    }
    fft.inv(time, freq);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = time[i].real();
    return d;
  }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static bool parse_pair(const std::string& s, double& x, double& f) {
    std::string t = s;
    for (auto& ch : t) {
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    }
    std::istringstream is(t);
    std::string extra;
    if (!(is >> x >> f)) return false;
    if (is >> extra) return false;
    return true;
  }

  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  }
};

}  // namespace spade
