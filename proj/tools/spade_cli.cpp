// spade: joint centroid/separation estimation for two incoherent point
// sources with a three-outcome spatial-mode measurement. Emits deterministic
// CSV; lengths are in units of sigma for Gaussian PSFs (raw units for sampled
// PSFs), Fisher entries scale accordingly. Exit codes: 0 success, 2
// validation failure, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "spade/spade.hpp"

namespace {

struct Opt {
  double sigma = 1.0;
  std::string psf_file;
  int grid_n = 0;         // 0: per-command default
  double grid_span = 0.0; // raw-unit half-width; 0: per-command default
  std::string alpha, beta, coeffs, alphas, betas, scan_s;
  double s = std::numeric_limits<double>::quiet_NaN();
  double s0 = 0.0;
  double s0_hat = 0.0;
  long long shots = 0;
  int reps = 1;
  unsigned long long seed = 0;
  int num_modes = 6;
  std::string out;
};

struct Emitter {
  std::string buf;
  void comment(const std::string& k, const std::string& v) {
    buf += "# " + k + "," + v + "\n";
  }
  void line(const std::string& s) {
    buf += s;
    buf += "\n";
  }
  void kv(const std::string& k, double v) { line(k + "," + spade::fmt_num(v)); }
  void kv(const std::string& k, const std::string& v) { line(k + "," + v); }
  int flush(const std::string& path) {
    if (path.empty()) {
      std::fputs(buf.c_str(), stdout);
      return 0;
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) {
      std::fprintf(stderr, "error: cannot open output file '%s'\n", path.c_str());
      return 2;
    }
    std::fwrite(buf.data(), 1, buf.size(), f);
    std::fclose(f);
    return 0;
  }
};

spade::Psf build_psf(const Opt& o, bool wide) {
  if (!o.psf_file.empty()) return spade::Psf::from_csv(o.psf_file);
  const double span =
      o.grid_span > 0.0 ? o.grid_span : (wide ? 12.0 : 8.0) * o.sigma;
  const int n = o.grid_n > 0 ? o.grid_n : (wide ? 6144 : 4096);
  return spade::Psf::gaussian(o.sigma, spade::Grid::uniform(-span, span, n));
}

// Unit of length for reporting: sigma for analytic Gaussians, 1 (raw) for
// sampled PSFs. Lengths on the command line are interpreted in the same unit.
double length_unit(const Opt& o, const spade::Psf& psf) {
  return psf.kind() == spade::Psf::Kind::GaussianAnalytic ? o.sigma : 1.0;
}

spade::PovmCoeffs make_povm(const Opt& o) {
  if (!o.coeffs.empty()) {
    if (!o.alpha.empty() || !o.beta.empty()) {
      throw spade::InvalidArgument("--coeffs excludes --alpha/--beta");
    }
    const auto parts = spade::split_csv_field(o.coeffs);
    if (parts.size() != 5) {
      throw spade::InvalidArgument("--coeffs needs exactly a2,a3,b1,b2,b3");
    }
    spade::PovmCoeffs c;
    c.a2 = spade::parse_double_strict(parts[0], "a2");
    c.a3 = spade::parse_double_strict(parts[1], "a3");
    c.b1 = spade::parse_double_strict(parts[2], "b1");
    c.b2 = spade::parse_double_strict(parts[3], "b2");
    c.b3 = spade::parse_double_strict(parts[4], "b3");
    return c;
  }
  if (!o.alpha.empty() && !o.beta.empty()) {
    return spade::from_angles(
        {spade::parse_angle(o.alpha), spade::parse_angle(o.beta)});
  }
  if (!o.alpha.empty() || !o.beta.empty()) {
    throw spade::InvalidArgument("povm angles need both --alpha and --beta");
  }
  throw spade::InvalidArgument(
      "a povm spec is required: --alpha/--beta or --coeffs");
}

std::string config_string(const std::string& cmd, const Opt& o) {
  std::string s = cmd;
  auto add = [&](const char* k, const std::string& v) {
    s += ";";
    s += k;
    s += "=";
    s += v;
  };
  add("sigma", spade::fmt_full(o.sigma));
  add("file", o.psf_file);
  add("grid_n", std::to_string(o.grid_n));
  add("grid_span", spade::fmt_full(o.grid_span));
  add("alpha", o.alpha);
  add("beta", o.beta);
  add("coeffs", o.coeffs);
  add("alphas", o.alphas);
  add("betas", o.betas);
  add("scan_s", o.scan_s);
  add("s", spade::fmt_full(o.s));
  add("s0", spade::fmt_full(o.s0));
  add("s0_hat", spade::fmt_full(o.s0_hat));
  add("shots", std::to_string(o.shots));
  add("reps", std::to_string(o.reps));
  add("seed", std::to_string(o.seed));
  add("num_modes", std::to_string(o.num_modes));
  return s;
}

void header(Emitter& e, const std::string& cmd, const Opt& o,
            const std::string& units) {
  e.comment("spade", spade::kVersion);
  e.comment("config", spade::hex64(spade::fnv1a64(config_string(cmd, o))));
  e.comment("seed", std::to_string(o.seed));
  e.comment("units", units);
}

double require_s(const Opt& o, double fallback = std::numeric_limits<double>::quiet_NaN()) {
  if (std::isnan(o.s)) {
    if (std::isnan(fallback)) throw spade::InvalidArgument("--s is required");
    return fallback;
  }
  return o.s;
}

spade::SourceConfig make_source(const Opt& o, double u, double s_units) {
  spade::SourceConfig src;
  src.s0 = o.s0 * u;
  src.s = s_units * u;
  src.s0_hat = o.s0_hat * u;
  return src;
}

int cmd_moments(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const auto diag = psf.validate();
  const auto m = psf.momentum_moments();
  Emitter e;
  header(e, "moments", o, "raw");
  e.line("key,value");
  e.kv("p2", m.p2);
  e.kv("p4", m.p4);
  e.kv("norm_error", diag.norm_error);
  e.kv("asymmetry", diag.asymmetry);
  e.kv("tail_mass", diag.tail_mass);
  e.kv("ok", diag.ok ? 1.0 : 0.0);
  const int rc = e.flush(o.out);
  if (rc != 0) return rc;
  return diag.ok ? 0 : 2;
}

int cmd_modes(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const double u = length_unit(o, psf);
  const spade::PovmCoeffs c = make_povm(o);
  const spade::ModeSet ms =
      spade::build_derivative_basis(psf, o.s0_hat * u, 3);
  const auto [f1, f2] = spade::mode_functions(c, ms);
  const double amp = std::sqrt(u);
  Emitter e;
  header(e, "modes", o, psf.kind() == spade::Psf::Kind::GaussianAnalytic
                            ? "sigma"
                            : "raw");
  e.line("x,pi1,pi2,phi1,phi2,phi3");
  const spade::Grid& g = ms.grid;
  for (int i = 0; i < g.n; ++i) {
    e.line(spade::fmt_num(g.x[i] / u) + "," + spade::fmt_num(f1(i) * amp) + "," +
           spade::fmt_num(f2(i) * amp) + "," +
           spade::fmt_num(ms.modes(i, 0) * amp) + "," +
           spade::fmt_num(ms.modes(i, 1) * amp) + "," +
           spade::fmt_num(ms.modes(i, 2) * amp));
  }
  return e.flush(o.out);
}

int cmd_povm_check(const Opt& o) {
  const spade::PovmCoeffs c = make_povm(o);
  const auto d = spade::validate(c);
  Emitter e;
  header(e, "povm-check", o, "none");
  e.line("key,value");
  e.kv("a2", c.a2);
  e.kv("a3", c.a3);
  e.kv("b1", c.b1);
  e.kv("b2", c.b2);
  e.kv("b3", c.b3);
  e.kv("overlap", spade::pi1_vector(c).dot(spade::pi2_vector(c)));
  e.kv("norm_pi1_sq", d.norm_pi1_sq);
  e.kv("norm_pi2_sq", d.norm_pi2_sq);
  e.kv("condition_value", d.condition_value);
  e.kv("min_eigenvalue", d.min_eigenvalue);
  e.kv("closed_form_valid", d.closed_form_valid ? 1.0 : 0.0);
  e.kv("eigen_valid", d.eigen_valid ? 1.0 : 0.0);
  e.kv("disagreement", d.disagreement ? 1.0 : 0.0);
  e.kv("valid", d.valid ? 1.0 : 0.0);
  const int rc = e.flush(o.out);
  if (rc != 0) return rc;
  return d.valid ? 0 : 2;
}

int cmd_probs(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const double u = length_unit(o, psf);
  const spade::PovmCoeffs c = make_povm(o);
  const spade::SourceConfig src = make_source(o, u, require_s(o));
  const spade::ModeSet ms = spade::build_derivative_basis(psf, src.s0_hat, 3);
  const spade::ProbVector p = spade::outcome_probs(psf, ms, c, src);
  Emitter e;
  header(e, "probs", o, "none");
  e.line("key,value");
  e.kv("p1", p.p1);
  e.kv("p2", p.p2);
  e.kv("p3", p.p3);
  return e.flush(o.out);
}

int cmd_cfi(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const double u = length_unit(o, psf);
  const spade::PovmCoeffs c = make_povm(o);
  const spade::SourceConfig src = make_source(o, u, require_s(o));
  const spade::ModeSet ms = spade::build_derivative_basis(psf, src.s0_hat, 3);
  const Eigen::Matrix2d f = spade::cfi_matrix(psf, ms, c, src) * (u * u);
  Emitter e;
  header(e, "cfi", o, psf.kind() == spade::Psf::Kind::GaussianAnalytic
                          ? "sigma"
                          : "raw");
  e.line("key,value");
  e.kv("F_s0s0", f(0, 0));
  e.kv("F_ss", f(1, 1));
  e.kv("F_s0s", f(0, 1));
  return e.flush(o.out);
}

int cmd_qfi(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const double u = length_unit(o, psf);
  const spade::SourceConfig src = make_source(o, u, require_s(o));
  const spade::ModeSet ms =
      spade::build_derivative_basis(psf, src.s0_hat, o.num_modes);
  const Eigen::Matrix2d q = spade::qfi_oracle(psf, ms, src) * (u * u);
  Emitter e;
  header(e, "qfi", o, psf.kind() == spade::Psf::Kind::GaussianAnalytic
                          ? "sigma"
                          : "raw");
  e.line("key,value");
  e.kv("Q_s0s0", q(0, 0));
  e.kv("Q_ss", q(1, 1));
  e.kv("Q_s0s", q(0, 1));
  e.kv("Q_s0s0_exact", spade::qfi_centroid_exact(psf, src.s) * u * u);
  return e.flush(o.out);
}

int cmd_tradeoff_scan(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const double u = length_unit(o, psf);
  std::vector<double> alphas;
  if (!o.alphas.empty()) {
    alphas = spade::parse_angle_list(o.alphas);
  } else {
    for (int k = 1; k <= 19; ++k) alphas.push_back(k * M_PI / 40.0);
  }
  std::sort(alphas.begin(), alphas.end());
  const double beta = o.beta.empty() ? M_PI / 6.0 : spade::parse_angle(o.beta);

  const double s_units = require_s(o, 1e-3);
  spade::SourceConfig src = make_source(o, u, s_units);
  src.s0 += src.s * 1e-3;  // slight misalignment keeps r finite

  const spade::ModeSet ms = spade::build_derivative_basis(psf, src.s0_hat, 3);
  const spade::ModeSet ms8 = spade::build_derivative_basis(psf, src.s0_hat, 8);
  const Eigen::Matrix2d q = spade::qfi_matrix(psf, ms8, src);

  Emitter e;
  header(e, "tradeoff-scan", o, "none");
  e.line("alpha,eps_s_sq,eps_s0_sq,regret_s_sq,regret_s0_sq,regret_sum");
  for (double a : alphas) {
    const spade::PovmCoeffs c = spade::from_angles({a, beta});
    const spade::EpsilonPair eps = spade::epsilons(c);
    const Eigen::Matrix2d f = spade::cfi_matrix(psf, ms, c, src);
    const Eigen::Vector2d reg = spade::regrets(f, q);
    e.line(spade::fmt_num(a) + "," + spade::fmt_num(eps.eps_s_sq) + "," +
           spade::fmt_num(eps.eps_s0_sq) + "," + spade::fmt_num(reg(1)) + "," +
           spade::fmt_num(reg(0)) + "," + spade::fmt_num(reg(0) + reg(1)));
  }
  return e.flush(o.out);
}

int cmd_fig2(const Opt& o) {
  const spade::Psf psf = build_psf(o, false);
  const double u = length_unit(o, psf);
  const spade::ScanRange scan =
      o.scan_s.empty() ? spade::ScanRange{0.01, 2.0, 100}
                       : spade::parse_scan(o.scan_s);
  std::vector<double> betas;
  if (!o.betas.empty()) {
    betas = spade::parse_angle_list(o.betas);
  } else {
    betas = {M_PI / 12.0, M_PI / 6.0, M_PI / 4.0, M_PI / 3.0};
  }
  std::sort(betas.begin(), betas.end());
  const double alpha = o.alpha.empty() ? M_PI / 4.0 : spade::parse_angle(o.alpha);

  const spade::ModeSet ms =
      spade::build_derivative_basis(psf, o.s0_hat * u, 3);
  const spade::ModeSet ms8 =
      spade::build_derivative_basis(psf, o.s0_hat * u, 8);

  Emitter e;
  header(e, "fig2", o, psf.kind() == spade::Psf::Kind::GaussianAnalytic
                           ? "sigma"
                           : "raw");
  e.line("s,beta,F_s0s0,F_ss,Q_s0s0,Q_ss");
  for (int i = 0; i < scan.n; ++i) {
    const double s_units = scan.at(i);
    spade::SourceConfig src = make_source(o, u, s_units);
    src.s0 += src.s * 1e-3;
    const Eigen::Matrix2d q = spade::qfi_matrix(psf, ms8, src) * (u * u);
    for (double b : betas) {
      const spade::PovmCoeffs c = spade::from_angles({alpha, b});
      const Eigen::Matrix2d f = spade::cfi_matrix(psf, ms, c, src) * (u * u);
      e.line(spade::fmt_num(s_units) + "," + spade::fmt_num(b) + "," +
             spade::fmt_num(f(0, 0)) + "," + spade::fmt_num(f(1, 1)) + "," +
             spade::fmt_num(q(0, 0)) + "," + spade::fmt_num(q(1, 1)));
    }
  }
  return e.flush(o.out);
}

int cmd_simulate(const Opt& o) {
  const spade::Psf psf = build_psf(o, true);
  const double u = length_unit(o, psf);
  spade::ExperimentConfig cfg;
  cfg.povm = make_povm(o);
  cfg.truth = make_source(o, u, require_s(o));
  cfg.shots = o.shots;
  cfg.seed = o.seed;
  cfg.repetitions = o.reps;
  const spade::ModeSet ms =
      spade::build_derivative_basis(psf, cfg.truth.s0_hat, 3);
  const spade::StudyResult st = spade::covariance_study(psf, ms, cfg);

  Emitter e;
  header(e, "simulate", o, psf.kind() == spade::Psf::Kind::GaussianAnalytic
                               ? "sigma"
                               : "raw");
  e.line("rep,s0_hat,s_hat,loglik,converged");
  for (std::size_t r = 0; r < st.reps.size(); ++r) {
    const auto& fit = st.reps[r];
    e.line(std::to_string(r) + "," + spade::fmt_num(fit.s0_hat_ml / u) + "," +
           spade::fmt_num(fit.s_hat_ml / u) + "," + spade::fmt_num(fit.loglik) +
           "," + (fit.converged ? "1" : "0"));
  }
  const double u2 = u * u;
  e.comment("mean_s0", spade::fmt_num(st.mean(0) / u));
  e.comment("mean_s", spade::fmt_num(st.mean(1) / u));
  e.comment("bias_s0", spade::fmt_num(st.bias(0) / u));
  e.comment("bias_s", spade::fmt_num(st.bias(1) / u));
  e.comment("var_s0", spade::fmt_num(st.empirical_cov(0, 0) / u2));
  e.comment("var_s", spade::fmt_num(st.empirical_cov(1, 1) / u2));
  e.comment("cov_s0_s", spade::fmt_num(st.empirical_cov(0, 1) / u2));
  e.comment("crb_s0", spade::fmt_num(st.crb(0, 0) / u2));
  e.comment("crb_s", spade::fmt_num(st.crb(1, 1) / u2));
  e.comment("qcrb_s0", spade::fmt_num(st.qcrb(0, 0) / u2));
  e.comment("qcrb_s", spade::fmt_num(st.qcrb(1, 1) / u2));
  e.comment("stat_tol", spade::fmt_num(st.stat_tol / u2));
  e.comment("covariance_available", st.covariance_available ? "1" : "0");
  return e.flush(o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-outcome spatial-mode measurement toolkit for two-source "
               "centroid/separation estimation"};
  app.require_subcommand(1);
  Opt o;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--sigma", o.sigma, "Gaussian PSF width (default 1)");
    s->add_option("--psf-file", o.psf_file, "sampled PSF CSV (x,amplitude)");
    s->add_option("--grid-n", o.grid_n, "grid point count override");
    s->add_option("--grid-span", o.grid_span,
                  "grid half-width override, raw units");
    s->add_option("--seed", o.seed, "rng seed, echoed in the header");
    s->add_option("--out", o.out, "write CSV to this file instead of stdout");
  };
  auto add_povm = [&](CLI::App* s) {
    s->add_option("--alpha", o.alpha, "povm angle alpha (radians or pi/<k>)");
    s->add_option("--beta", o.beta, "povm angle beta (radians or pi/<k>)");
    s->add_option("--coeffs", o.coeffs, "raw povm coefficients a2,a3,b1,b2,b3");
  };
  auto add_source = [&](CLI::App* s) {
    s->add_option("--s", o.s, "separation (sigma units for Gaussian)");
    s->add_option("--s0", o.s0, "true centroid (default 0)");
    s->add_option("--s0-hat", o.s0_hat, "alignment guess (default 0)");
  };

  CLI::App* moments = app.add_subcommand(
      "moments", "PSF momentum moments and validation diagnostics");
  add_common(moments);

  CLI::App* modes = app.add_subcommand(
      "modes", "measurement mode functions and basis modes on the grid");
  add_common(modes);
  add_povm(modes);
  modes->add_option("--s0-hat", o.s0_hat, "alignment guess (default 0)");

  CLI::App* povmcheck = app.add_subcommand(
      "povm-check", "validate a povm spec (exit 2 if invalid)");
  add_common(povmcheck);
  add_povm(povmcheck);

  CLI::App* probs =
      app.add_subcommand("probs", "three outcome probabilities");
  add_common(probs);
  add_povm(probs);
  add_source(probs);

  CLI::App* cfi = app.add_subcommand(
      "cfi", "classical Fisher information of the measurement");
  add_common(cfi);
  add_povm(cfi);
  add_source(cfi);

  CLI::App* qfi = app.add_subcommand("qfi", "quantum Fisher information");
  add_common(qfi);
  add_source(qfi);
  qfi->add_option("--num-modes", o.num_modes,
                  "basis size for the oracle (default 6)");

  CLI::App* tradeoff = app.add_subcommand(
      "tradeoff-scan", "information regrets across the povm family");
  add_common(tradeoff);
  add_povm(tradeoff);
  add_source(tradeoff);
  tradeoff->add_option("--alphas", o.alphas,
                       "comma list of alpha values (default 19 points)");

  CLI::App* fig2 = app.add_subcommand(
      "fig2", "CFI/QFI diagonals across a separation scan");
  add_common(fig2);
  add_povm(fig2);
  add_source(fig2);
  fig2->add_option("--scan-s", o.scan_s, "separation scan lo:hi:n");
  fig2->add_option("--betas", o.betas, "comma list of beta values");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "sample shots, fit by maximum likelihood, compare to bounds");
  add_common(simulate);
  add_povm(simulate);
  add_source(simulate);
  simulate->add_option("--shots", o.shots, "shots per repetition");
  simulate->add_option("--reps", o.reps, "number of repetitions (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (moments->parsed()) return cmd_moments(o);
    if (modes->parsed()) return cmd_modes(o);
    if (povmcheck->parsed()) return cmd_povm_check(o);
    if (probs->parsed()) return cmd_probs(o);
    if (cfi->parsed()) return cmd_cfi(o);
    if (qfi->parsed()) return cmd_qfi(o);
    if (tradeoff->parsed()) return cmd_tradeoff_scan(o);
    if (fig2->parsed()) return cmd_fig2(o);
    if (simulate->parsed()) return cmd_simulate(o);
  } catch (const spade::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const spade::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
