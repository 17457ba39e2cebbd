#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spade/basis.hpp"
#include "spade/errors.hpp"
#include "spade/fisher.hpp"
#include "spade/povm.hpp"
#include "spade/psf.hpp"

namespace spade {

struct Counts {
  long long n1 = 0;
  long long n2 = 0;
  long long n3 = 0;
  long long total() const { return n1 + n2 + n3; }
};

// One shot per draw, inverse-CDF over the three outcomes. The uniform variate
// is (eng() >> 11) * 2^-53 so the stream is pinned to the mt19937_64 output
// sequence and nothing else.
inline Counts sample_counts(const ProbVector& p, long long shots,
                            std::mt19937_64& eng) {
  if (shots < 0) throw InvalidArgument("shots must be >= 0");
  const double t1 = p.p1;
  const double t2 = p.p1 + p.p2;
  Counts c;
  for (long long i = 0; i < shots; ++i) {
    const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    if (u < t1) {
      ++c.n1;
    } else if (u < t2) {
      ++c.n2;
    } else {
      ++c.n3;
    }
  }
  return c;
}

inline Counts sample_counts(const ProbVector& p, long long shots,
                            std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  return sample_counts(p, shots, eng);
}

struct Bounds {
  double s0_lo = 0.0;
  double s0_hi = 0.0;
  double s_lo = 0.0;
  double s_hi = 0.0;
};

inline Bounds default_bounds(double s0_hat, double length_scale) {
  return Bounds{s0_hat - length_scale, s0_hat + length_scale,
                1e-6 * length_scale, 3.0 * length_scale};
}

// Precomputed overlap tables c_k(d) for the first three modes on a dense
// displacement grid, so likelihood evaluations cost six interpolations
// instead of six quadratures. The table spans +-2.6 length scales around the
// alignment center, which covers the default estimation box; the PSF grid
// must be wide enough to hold displacements that far out.
class LikelihoodModel {
 public:
  LikelihoodModel() = default;

  LikelihoodModel(const Psf& psf, const ModeSet& ms, const PovmCoeffs& c)
      : coeffs_(c), center_(ms.center), scale_(psf.length_scale()) {
    if (ms.num_modes() < 3) throw InvalidArgument("need at least 3 modes");
    const double half = 2.6 * scale_;
    table_grid_ = Grid::uniform(center_ - half, center_ + half, 2048);
    for (int k = 0; k < 3; ++k) ck_[k].resize(table_grid_.n);
    for (int i = 0; i < table_grid_.n; ++i) {
      const Eigen::VectorXd disp = psf.displaced_samples(table_grid_.x[i]);
      for (int k = 0; k < 3; ++k) {
        ck_[k](i) = ms.grid.inner(ms.modes.col(k), disp);
      }
    }
  }

  std::array<double, 3> probs(double s0, double s) const {
    const double dp = s0 + 0.5 * s;
    const double dm = s0 - 0.5 * s;
    std::array<double, 2> cp{}, cm{};
    double bp = 0.0, bm = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double vp = interp6(table_grid_, ck_[k], dp);
      const double vm = interp6(table_grid_, ck_[k], dm);
      if (k >= 1) {
        cp[k - 1] = vp;
        cm[k - 1] = vm;
      }
      const double b = (k == 0 ? coeffs_.b1 : (k == 1 ? coeffs_.b2 : coeffs_.b3));
      bp += b * vp;
      bm += b * vm;
    }
    const double ap = coeffs_.a2 * cp[0] + coeffs_.a3 * cp[1];
    const double am = coeffs_.a2 * cm[0] + coeffs_.a3 * cm[1];
    const double p1 = 0.5 * (ap * ap + am * am);
    const double p2 = 0.5 * (bp * bp + bm * bm);
    return {p1, p2, 1.0 - p1 - p2};
  }

  double loglik(const Counts& n, double s0, double s) const {
    const auto p = probs(s0, s);
    double ll = 0.0;
    const std::array<long long, 3> counts{n.n1, n.n2, n.n3};
    for (int i = 0; i < 3; ++i) {
      if (counts[i] == 0) continue;
      ll += static_cast<double>(counts[i]) * std::log(std::max(p[i], 1e-300));
    }
    return ll;
  }

  double center() const { return center_; }
  double length_scale() const { return scale_; }

 private:
  PovmCoeffs coeffs_;
  double center_ = 0.0;
  double scale_ = 1.0;
  Grid table_grid_;
  std::array<Eigen::VectorXd, 3> ck_;
};

struct EstimationResult {
  double s0_hat_ml = 0.0;
  double s_hat_ml = 0.0;
  double loglik = 0.0;
  bool converged = false;
};

// Maximum-likelihood fit: coarse 41x41 grid over the box, then Nelder-Mead
// refinement from the best cell. Candidates are projected into the box; a
// final point sitting on the boundary is reported with converged = false. A
// likelihood that is flat over the whole grid is not identifiable.
inline EstimationResult mle(const LikelihoodModel& model, const Counts& counts,
                            const Bounds& b) {
  if (!(b.s0_hi > b.s0_lo) || !(b.s_hi > b.s_lo)) {
    throw InvalidArgument("bounds must have positive extent");
  }
  if (!(b.s_lo >= 0.0)) throw InvalidArgument("separation bounds must be >= 0");

  constexpr int kGrid = 41;
  double best_f = -std::numeric_limits<double>::infinity();
  double worst_f = std::numeric_limits<double>::infinity();
  double best0 = b.s0_lo, best1 = b.s_lo;
  for (int i = 0; i < kGrid; ++i) {
    const double s0 = b.s0_lo + (b.s0_hi - b.s0_lo) * i / (kGrid - 1);
    for (int j = 0; j < kGrid; ++j) {
      const double s = b.s_lo + (b.s_hi - b.s_lo) * j / (kGrid - 1);
      const double f = model.loglik(counts, s0, s);
      if (f > best_f) {
        best_f = f;
        best0 = s0;
        best1 = s;
      }
      worst_f = std::min(worst_f, f);
    }
  }
  if (!(best_f - worst_f > 1e-12) || !std::isfinite(best_f)) {
    throw NonIdentifiable("likelihood is flat over the search box");
  }

  auto clamp0 = [&](double v) { return std::clamp(v, b.s0_lo, b.s0_hi); };
  auto clamp1 = [&](double v) { return std::clamp(v, b.s_lo, b.s_hi); };

  struct Vertex {
    double p0, p1, f;
  };
  auto make_vertex = [&](double p0, double p1) {
    p0 = clamp0(p0);
    p1 = clamp1(p1);
    return Vertex{p0, p1, model.loglik(counts, p0, p1)};
  };

  const double step0 = 0.5 * (b.s0_hi - b.s0_lo) / (kGrid - 1);
  const double step1 = 0.5 * (b.s_hi - b.s_lo) / (kGrid - 1);
  std::array<Vertex, 3> v{make_vertex(best0, best1),
                          make_vertex(best0 + step0, best1),
                          make_vertex(best0, best1 + step1)};

  const double tol = 1e-8 * model.length_scale();
  const int max_iter = 500;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::sort(v.begin(), v.end(),
              [](const Vertex& a, const Vertex& c) { return a.f > c.f; });
    const double diam =
        std::max(std::hypot(v[1].p0 - v[0].p0, v[1].p1 - v[0].p1),
                 std::hypot(v[2].p0 - v[0].p0, v[2].p1 - v[0].p1));
    if (diam < tol) break;

    const double c0 = 0.5 * (v[0].p0 + v[1].p0);
    const double c1 = 0.5 * (v[0].p1 + v[1].p1);
    const Vertex refl = make_vertex(c0 + (c0 - v[2].p0), c1 + (c1 - v[2].p1));
    if (refl.f > v[0].f) {
      const Vertex exp_v =
          make_vertex(c0 + 2.0 * (c0 - v[2].p0), c1 + 2.0 * (c1 - v[2].p1));
      v[2] = exp_v.f > refl.f ? exp_v : refl;
    } else if (refl.f > v[1].f) {
      v[2] = refl;
    } else {
      const Vertex con =
          make_vertex(c0 + 0.5 * (v[2].p0 - c0), c1 + 0.5 * (v[2].p1 - c1));
      if (con.f > v[2].f) {
        v[2] = con;
      } else {
        for (int k = 1; k < 3; ++k) {
          v[k] = make_vertex(0.5 * (v[0].p0 + v[k].p0),
                             0.5 * (v[0].p1 + v[k].p1));
        }
      }
    }
  }
  std::sort(v.begin(), v.end(),
            [](const Vertex& a, const Vertex& c) { return a.f > c.f; });

  EstimationResult res;
  res.s0_hat_ml = v[0].p0;
  res.s_hat_ml = v[0].p1;
  res.loglik = v[0].f;
  const double m0 = 1e-7 * (b.s0_hi - b.s0_lo);
  const double m1 = 1e-7 * (b.s_hi - b.s_lo);
  const bool at_boundary =
      res.s0_hat_ml - b.s0_lo <= m0 || b.s0_hi - res.s0_hat_ml <= m0 ||
      res.s_hat_ml - b.s_lo <= m1 || b.s_hi - res.s_hat_ml <= m1;
  res.converged = !at_boundary && iter < max_iter;
  return res;
}

inline EstimationResult mle(const Counts& counts, const Psf& psf,
                            const ModeSet& ms, const PovmCoeffs& c,
                            const Bounds& b) {
  return mle(LikelihoodModel(psf, ms, c), counts, b);
}

struct ExperimentConfig {
  long long shots = 0;
  SourceConfig truth;
  PovmCoeffs povm;
  std::uint64_t seed = 0;
  int repetitions = 1;
};

struct StudyResult {
  std::vector<EstimationResult> reps;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d bias = Eigen::Vector2d::Zero();
  Eigen::Matrix2d empirical_cov = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d crb = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d qcrb = Eigen::Matrix2d::Zero();
  double stat_tol = 0.0;
  bool covariance_available = false;
};

// Repeated simulate-and-fit experiment. Repetition r uses an mt19937_64
// seeded with seed ^ r, so repetition 0 reproduces a single run with the bare
// seed and the set is embarrassingly parallel in principle. The empirical
// covariance uses the R-1 divisor; crb and qcrb are the inverted information
// matrices at the truth divided by the shot count. stat_tol is a 3-sigma
// allowance 3 * lambda_max(emp) * sqrt(2 / (R - 1)) for eigenvalue
// comparisons against the bounds.
inline StudyResult covariance_study(const Psf& psf, const ModeSet& ms,
                                    const ExperimentConfig& cfg) {
  if (cfg.shots < 100) throw InvalidArgument("need at least 100 shots");
  if (cfg.repetitions < 1) throw InvalidArgument("need at least 1 repetition");

  const LikelihoodModel model(psf, ms, cfg.povm);
  const Bounds bounds = default_bounds(cfg.truth.s0_hat, psf.length_scale());
  const ProbVector p = outcome_probs(psf, ms, cfg.povm, cfg.truth);

  StudyResult out;
  out.reps.reserve(static_cast<std::size_t>(cfg.repetitions));
  Eigen::MatrixXd est(cfg.repetitions, 2);
  for (int r = 0; r < cfg.repetitions; ++r) {
    std::mt19937_64 eng(cfg.seed ^ static_cast<std::uint64_t>(r));
    const Counts counts = sample_counts(p, cfg.shots, eng);
    const EstimationResult fit = mle(model, counts, bounds);
    est(r, 0) = fit.s0_hat_ml;
    est(r, 1) = fit.s_hat_ml;
    out.reps.push_back(fit);
  }

  out.mean = est.colwise().mean().transpose();
  out.bias = out.mean - Eigen::Vector2d(cfg.truth.s0, cfg.truth.s);
  const int reps = cfg.repetitions;
  if (reps >= 2) {
    const Eigen::MatrixXd centered = est.rowwise() - est.colwise().mean();
    out.empirical_cov = centered.transpose() * centered / (reps - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(out.empirical_cov);
    out.stat_tol = 3.0 * es.eigenvalues().maxCoeff() * std::sqrt(2.0 / (reps - 1));
    out.covariance_available = true;
  }

  const Eigen::Matrix2d f = cfi_matrix(psf, ms, cfg.povm, cfg.truth);
  const ModeSet oracle_ms = build_derivative_basis(psf, ms.center, 8);
  const Eigen::Matrix2d q = qfi_matrix(psf, oracle_ms, cfg.truth);
  const double n = static_cast<double>(cfg.shots);
  out.crb = f.inverse() / n;
  out.qcrb = q.inverse() / n;
  return out;
}

}  // namespace spade
