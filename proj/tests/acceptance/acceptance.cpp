// Acceptance suite. Each criterion runs in its own process:
//   aqcast_acceptance --criterion N
// and prints one line "criterion N (...): PASS|FAIL ..." plus indented detail.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "aqcast/alerts.hpp"
#include "aqcast/errors.hpp"
#include "aqcast/forecast.hpp"
#include "aqcast/linalg.hpp"
#include "aqcast/log.hpp"
#include "aqcast/sampler.hpp"
#include "aqcast/scoring.hpp"
#include "aqcast/spatial.hpp"
#include "aqcast/synthetic.hpp"
#include "config.hpp"
#include "support.hpp"

using namespace aqcast;

namespace {

// ---------------------------------------------------------------- tolerances

// 1: conditional correctness.
constexpr int kC1Draws = 50000;
constexpr double kC1MeanTol = 0.02;  // relative to max(|mean|, sd)
constexpr double kC1VarTol = 0.05;   // relative
constexpr double kC1QuadratureTol = 1e-6;
// 2: Geweke.
constexpr int kC2Iterations = 20000;
constexpr double kC2MaxZ = 4.0;
// 3: recovery.
constexpr int kC3MinCovered = 16;
// 4: scoring.
constexpr int kC4Cases = 1000;
constexpr double kC4Tol = 1e-12;
constexpr int kC4Replicates = 1000;
// 7: lag selection.
constexpr int kC7Seeds = 10;
constexpr int kC7MinWins = 8;
constexpr int kC7Stations = 24;
constexpr int kC7Hours = 1500;
// 8: calibration.
constexpr double kC8Lo = 0.86;
constexpr double kC8Hi = 0.94;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int report(int n, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %d (%s): %s  %s\n", n, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return pass ? 0 : 1;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------- reference model

/// Linear predictor of one outcome, written out from the model equation.
double ref_mean(const ModelState& s, const ModelData& d, int k, int i, int h, bool with_psi = true) {
  const auto kp = static_cast<Pollutant>(k);
  double m = s.beta[k](i, 0) + s.beta[k](i, 1) * d.tmp(i, h - 1) + s.beta[k](i, 2) * d.rh(i, h - 1);
  const auto& lags = d.lags.lags(kp);
  for (std::size_t j = 0; j < lags.size(); ++j) m += s.gamma[k](i, static_cast<Eigen::Index>(j)) * d.y[k](i, h - lags[j]);
  if (with_psi) {
    m += k == 0 ? s.a.a11 * s.v1(i) : s.a.a12 * s.v1(i) + s.a.a22 * s.v2(i);
  }
  return m;
}

double ref_weight(const ModelState& s, const ModelData& d, int k, int h) {
  const auto& v = s.sigma2[k];
  return 1.0 / (v.size() == 1 ? v(0) : v(d.hour_of_day[h]));
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

Moments gaussian(const Eigen::MatrixXd& precision, const Eigen::VectorXd& linear) {
  const Eigen::MatrixXd cov = precision.inverse();
  return {cov * linear, cov.diagonal()};
}

/// Column means and variances of draws [n x dim].
Moments empirical(const Eigen::MatrixXd& x) {
  Moments m;
  m.mean = x.colwise().mean().transpose();
  m.var = ((x.rowwise() - m.mean.transpose()).colwise().squaredNorm() / static_cast<double>(x.rows() - 1)).transpose();
  return m;
}

struct KernelResult {
  std::string name;
  double mean_err = 0.0;
  double var_err = 0.0;
  bool pass = false;
};

KernelResult compare(const std::string& name, const Eigen::MatrixXd& draws, const Moments& want) {
  const Moments got = empirical(draws);
  KernelResult r{name};
  for (Eigen::Index c = 0; c < got.mean.size(); ++c) {
    const double scale = std::max(std::abs(want.mean(c)), std::sqrt(want.var(c)));
    r.mean_err = std::max(r.mean_err, std::abs(got.mean(c) - want.mean(c)) / scale);
    r.var_err = std::max(r.var_err, std::abs(got.var(c) / want.var(c) - 1.0));
  }
  r.pass = r.mean_err <= kC1MeanTol && r.var_err <= kC1VarTol;
  return r;
}

/// Inverse-Wishart moments of the listed entries.
Moments iw_moments(const Eigen::MatrixXd& psi, double df, const std::vector<std::pair<int, int>>& entries) {
  const double p = static_cast<double>(psi.rows());
  Moments m;
  m.mean.resize(static_cast<Eigen::Index>(entries.size()));
  m.var.resize(m.mean.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [i, j] = entries[e];
    const auto ei = static_cast<Eigen::Index>(e);
    m.mean(ei) = psi(i, j) / (df - p - 1.0);
    m.var(ei) = ((df - p + 1.0) * psi(i, j) * psi(i, j) + (df - p - 1.0) * psi(i, i) * psi(j, j)) /
                ((df - p) * (df - p - 1.0) * (df - p - 1.0) * (df - p - 3.0));
  }
  return m;
}

/// Moments of t when t^2 has unnormalized log density `log_s` on (0, inf), by
/// trapezoidal quadrature in log t.
std::pair<double, double> sqrt_moments_by_quadrature(const std::function<double(double)>& log_s, double lo,
                                                     double hi) {
  const int n = 200001;
  const double a = std::log(lo);
  const double b = std::log(hi);
  const double du = (b - a) / (n - 1);
  std::vector<double> lp(n);
  double top = -std::numeric_limits<double>::infinity();
  for (int q = 0; q < n; ++q) {
    const double t = std::exp(a + q * du);
    // density of t = density of s at t^2 times 2t; times t for the log-t measure.
    lp[q] = log_s(t * t) + 2.0 * std::log(t);
    top = std::max(top, lp[q]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int q = 0; q < n; ++q) {
    const double t = std::exp(a + q * du);
    const double w = std::exp(lp[q] - top) * ((q == 0 || q == n - 1) ? 0.5 : 1.0);
    z += w;
    m1 += w * t;
    m2 += w * t * t;
  }
  m1 /= z;
  m2 /= z;
  return {m1, m2 - m1 * m1};
}

double log_inv_gamma(double s, double shape, double rate) { return -(shape + 1.0) * std::log(s) - rate / s; }

// ---------------------------------------------------------------- criterion 1

int criterion1() {
  const auto t0 = Clock::now();
  const LagConfig lags = LagConfig::symmetric({1, 2});
  SynthResult r = generate(default_synth_spec(3, 50, lags, 101));
  const int miss_station = 1;
  const int miss_hour = r.panel.warmup_hours + 20;
  r.panel.ozone(miss_station, miss_hour) = std::numeric_limits<double>::quiet_NaN();
  r.panel.refresh_missing();
  const ModelData data = prepare_model_data(r.panel, lags, TransformPair{});
  const Eigen::MatrixXd q = build_car(r.panel.stations).Q;

  // Light-tailed scalar conditionals so 50k-draw variance estimates are stable.
  PriorConfig prior;
  prior.mean_var = 10.0;
  prior.iw_scale = 1.0;
  prior.iw_df_offset = 20.0;
  prior.ig_shape = 10.0;
  prior.ig_rate = 1.0;

  ModelState s0 = r.truth;
  for (int k = 0; k < kNumPollutants; ++k) {
    s0.sigma_beta[k] << 0.5, 0.01, 0.0, 0.01, 0.01, 0.001, 0.0, 0.001, 0.01;
    s0.sigma_gamma[k] << 0.05, 0.01, 0.01, 0.05;
  }
  GibbsSampler g(data, q, prior);
  const ModelData& d = g.data();
  const int ns = d.n_stations;
  const double n = static_cast<double>(ns);
  Rng rng(1);
  std::vector<KernelResult> results;

  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    const std::string pol = k == 0 ? "o3" : "pm10";
    const int i = k == 0 ? 1 : 2;

    {  // beta site
      Eigen::MatrixXd p = s0.sigma_beta[k].inverse();
      Eigen::VectorXd b = p * s0.beta0[k];
      for (int h = d.warmup; h < d.n_hours; ++h) {
        const Eigen::Vector3d x(1.0, d.tmp(i, h - 1), d.rh(i, h - 1));
        const double w = ref_weight(s0, d, k, h);
        const double resid = d.y[k](i, h) - (ref_mean(s0, d, k, i, h) - s0.beta[k].row(i).dot(x));
        p += w * x * x.transpose();
        b += w * resid * x;
      }
      ModelState s = s0;
      Eigen::MatrixXd draws(kC1Draws, 3);
      for (int m = 0; m < kC1Draws; ++m) {
        g.update_beta_site(s, kp, i, rng);
        draws.row(m) = s.beta[k].row(i);
      }
      results.push_back(compare("beta site " + pol, draws, gaussian(p, b)));
    }
    {  // gamma site
      const auto& kl = lags.lags(kp);
      const auto nl = static_cast<Eigen::Index>(kl.size());
      Eigen::MatrixXd p = s0.sigma_gamma[k].inverse();
      Eigen::VectorXd b = p * s0.gamma0[k];
      for (int h = d.warmup; h < d.n_hours; ++h) {
        Eigen::VectorXd l(nl);
        for (Eigen::Index j = 0; j < nl; ++j) l(j) = d.y[k](i, h - kl[j]);
        const double w = ref_weight(s0, d, k, h);
        const double resid = d.y[k](i, h) - (ref_mean(s0, d, k, i, h) - s0.gamma[k].row(i).dot(l));
        p += w * l * l.transpose();
        b += w * resid * l;
      }
      ModelState s = s0;
      Eigen::MatrixXd draws(kC1Draws, nl);
      for (int m = 0; m < kC1Draws; ++m) {
        g.update_gamma_site(s, kp, i, rng);
        draws.row(m) = s.gamma[k].row(i);
      }
      results.push_back(compare("gamma site " + pol, draws, gaussian(p, b)));
    }
    // Hierarchical means (first half of each hyper kernel) and the
    // inverse-Wishart covariance step.
    for (int which = 0; which < 2; ++which) {
      const bool beta = which == 0;
      const Eigen::MatrixXd& site = beta ? s0.beta[k] : s0.gamma[k];
      const Eigen::MatrixXd& cov = beta ? s0.sigma_beta[k] : s0.sigma_gamma[k];
      const Eigen::VectorXd& mean0 = beta ? s0.beta0[k] : s0.gamma0[k];
      const Eigen::Index dim = site.cols();
      const Eigen::MatrixXd cinv = cov.inverse();
      const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(dim, dim) / prior.mean_var + n * cinv;
      const Eigen::VectorXd b = cinv * site.colwise().sum().transpose();
      Eigen::MatrixXd draws(kC1Draws, dim);
      for (int m = 0; m < kC1Draws; ++m) {
        ModelState s = s0;
        if (beta) g.update_beta_hyper(s, kp, rng);
        else g.update_gamma_hyper(s, kp, rng);
        draws.row(m) = (beta ? s.beta0[k] : s.gamma0[k]).transpose();
      }
      const std::string what = beta ? "beta" : "gamma";
      results.push_back(compare(what + " mean " + pol, draws, gaussian(p, b)));

      Eigen::MatrixXd psi = prior.iw_scale * Eigen::MatrixXd::Identity(dim, dim);
      for (int st = 0; st < ns; ++st) {
        const Eigen::VectorXd dev = site.row(st).transpose() - mean0;
        psi += dev * dev.transpose();
      }
      const double df = n + static_cast<double>(dim) + prior.iw_df_offset;
      const auto lib = beta ? beta_cov_conditional(s0, prior, kp) : gamma_cov_conditional(s0, prior, kp);
      const bool params_ok = lib.df == df && (lib.scale - psi).cwiseAbs().maxCoeff() <= 1e-12 * psi.norm();
      std::vector<std::pair<int, int>> entries;
      for (int a = 0; a < dim; ++a) entries.emplace_back(a, a);
      entries.emplace_back(0, 1);
      Eigen::MatrixXd iw(kC1Draws, static_cast<Eigen::Index>(entries.size()));
      for (int m = 0; m < kC1Draws; ++m) {
        const Eigen::MatrixXd w = draw_inverse_wishart(lib.scale, lib.df, rng);
        for (std::size_t e = 0; e < entries.size(); ++e) {
          iw(m, static_cast<Eigen::Index>(e)) = w(entries[e].first, entries[e].second);
        }
      }
      KernelResult kr = compare(what + " covariance " + pol, iw, iw_moments(psi, df, entries));
      kr.pass = kr.pass && params_ok;
      results.push_back(kr);
    }
    {  // sigma^2, both variants
      for (int variant = 0; variant < 2; ++variant) {
        ModelState s = s0;
        if (variant == 1) {
          for (int kk = 0; kk < kNumPollutants; ++kk) {
            s.sigma2[kk].resize(kHoursPerDay);
            for (int h = 0; h < kHoursPerDay; ++h) s.sigma2[kk](h) = s0.sigma2[kk](0) * (1.0 + 0.5 * std::sin(h));
          }
        }
        const int nb = variant == 0 ? 1 : kHoursPerDay;
        Eigen::VectorXd ssr = Eigen::VectorXd::Zero(nb);
        Eigen::VectorXd cnt = Eigen::VectorXd::Zero(nb);
        for (int st = 0; st < ns; ++st) {
          for (int h = d.warmup; h < d.n_hours; ++h) {
            const int bin = variant == 0 ? 0 : d.hour_of_day[h];
            const double e = d.y[k](st, h) - ref_mean(s, d, k, st, h);
            ssr(bin) += e * e;
            cnt(bin) += 1.0;
          }
        }
        Moments want{Eigen::VectorXd(nb), Eigen::VectorXd(nb)};
        for (int bin = 0; bin < nb; ++bin) {
          const double a = prior.ig_shape + 0.5 * cnt(bin);
          const double b = prior.ig_rate + 0.5 * ssr(bin);
          want.mean(bin) = b / (a - 1.0);
          want.var(bin) = b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
        }
        Eigen::MatrixXd draws(kC1Draws, nb);
        for (int m = 0; m < kC1Draws; ++m) {
          ModelState t = s;
          g.update_sigma(t, kp, rng);
          draws.row(m) = t.sigma2[k].transpose();
        }
        results.push_back(compare(std::string("sigma2 ") + (variant ? "hourly " : "") + pol, draws, want));
      }
    }
  }

  // Spatial factors: dense regression of every outcome on the factor.
  for (int f = 0; f < 2; ++f) {
    Eigen::MatrixXd p = q;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(ns);
    for (int k = 0; k < kNumPollutants; ++k) {
      for (int st = 0; st < ns; ++st) {
        double coef = 0.0;
        double offset = 0.0;
        if (f == 0) {
          coef = k == 0 ? s0.a.a11 : s0.a.a12;
          offset = k == 0 ? 0.0 : s0.a.a22 * s0.v2(st);
        } else {
          if (k == 0) continue;
          coef = s0.a.a22;
          offset = s0.a.a12 * s0.v1(st);
        }
        for (int h = d.warmup; h < d.n_hours; ++h) {
          const double w = ref_weight(s0, d, k, h);
          const double resid = d.y[k](st, h) - ref_mean(s0, d, k, st, h, false) - offset;
          p(st, st) += w * coef * coef;
          b(st) += w * coef * resid;
        }
      }
    }
    ModelState s = s0;
    Eigen::MatrixXd draws(kC1Draws, ns);
    for (int m = 0; m < kC1Draws; ++m) {
      if (f == 0) g.update_v1(s, rng);
      else g.update_v2(s, rng);
      draws.row(m) = (f == 0 ? s.v1 : s.v2).transpose();
    }
    results.push_back(compare(f == 0 ? "V1" : "V2", draws, gaussian(p, b)));
  }

  const Eigen::VectorXd psi1 = s0.a.a11 * s0.v1;
  const Eigen::VectorXd psi2 = s0.a.a12 * s0.v1 + s0.a.a22 * s0.v2;
  double quad_gap = 0.0;
  {  // a22: closed form, cross-checked by quadrature
    const Eigen::VectorXd eta = psi2 - (s0.a.a12 / s0.a.a11) * psi1;
    const double a = prior.ig_shape + 0.5 * n;
    const double b = prior.ig_rate + 0.5 * eta.dot(q * eta);
    const double m1 = std::sqrt(b) * std::exp(std::lgamma(a - 0.5) - std::lgamma(a));
    Moments want{Eigen::VectorXd::Constant(1, m1), Eigen::VectorXd::Constant(1, b / (a - 1.0) - m1 * m1)};
    const auto [qm, qv] = sqrt_moments_by_quadrature([&](double s) { return log_inv_gamma(s, a, b); }, 1e-4, 1e3);
    quad_gap = std::max(std::abs(qm / m1 - 1.0), std::abs(qv / want.var(0) - 1.0));
    ModelState s = s0;
    Eigen::MatrixXd draws(kC1Draws, 1);
    for (int m = 0; m < kC1Draws; ++m) {
      g.update_a22(s, rng);
      draws(m, 0) = s.a.a22;
    }
    KernelResult kr = compare("a22", draws, want);
    kr.pass = kr.pass && quad_gap <= kC1QuadratureTol;
    results.push_back(kr);
  }
  {  // a11: Metropolis kernel against the quadrature target
    const double a = prior.ig_shape + 0.5 * n;
    const double b = prior.ig_rate + 0.5 * psi1.dot(q * psi1);
    const double a22sq = s0.a.a22 * s0.a.a22;
    const auto log_s = [&](double s) {
      const Eigen::VectorXd eta = psi2 - (s0.a.a12 / std::sqrt(s)) * psi1;
      return log_inv_gamma(s, a, b) - eta.dot(q * eta) / (2.0 * a22sq);
    };
    const auto [qm, qv] = sqrt_moments_by_quadrature(log_s, 1e-4, 1e3);
    ModelState s = s0;
    Eigen::MatrixXd draws(kC1Draws, 1);
    long accepted = 0;
    for (int m = 0; m < kC1Draws; ++m) {
      accepted += g.update_a11(s, rng);
      draws(m, 0) = s.a.a11;
    }
    KernelResult kr = compare("a11 (acceptance " + fmt("%.2f", static_cast<double>(accepted) / kC1Draws) + ")", draws,
                              {Eigen::VectorXd::Constant(1, qm), Eigen::VectorXd::Constant(1, qv)});
    results.push_back(kr);
  }
  {  // a12 given V1, V2 and the PM10 data
    double p = 1.0 / prior.mean_var;
    double b = 0.0;
    for (int st = 0; st < ns; ++st) {
      for (int h = d.warmup; h < d.n_hours; ++h) {
        const double w = ref_weight(s0, d, 1, h);
        const double resid = d.y[1](st, h) - ref_mean(s0, d, 1, st, h, false) - s0.a.a22 * s0.v2(st);
        p += w * s0.v1(st) * s0.v1(st);
        b += w * s0.v1(st) * resid;
      }
    }
    ModelState s = s0;
    Eigen::MatrixXd draws(kC1Draws, 1);
    for (int m = 0; m < kC1Draws; ++m) {
      g.update_a12(s, rng);
      draws(m, 0) = s.a.a12;
    }
    results.push_back(compare("a12", draws, {Eigen::VectorXd::Constant(1, b / p), Eigen::VectorXd::Constant(1, 1.0 / p)}));
  }
  {  // a12 given psi
    const double a22sq = s0.a.a22 * s0.a.a22;
    const double p = 1.0 / prior.mean_var + s0.v1.dot(q * s0.v1) / a22sq;
    const double b = s0.v1.dot(q * psi2) / a22sq;
    ModelState s = s0;
    Eigen::MatrixXd draws(kC1Draws, 1);
    for (int m = 0; m < kC1Draws; ++m) {
      g.update_a12_psi(s, rng);
      draws(m, 0) = s.a.a12;
    }
    results.push_back(
        compare("a12 at fixed psi", draws, {Eigen::VectorXd::Constant(1, b / p), Eigen::VectorXd::Constant(1, 1.0 / p)}));
  }
  {  // missing cell: the log density is quadratic in the cell; read it off three points
    ModelData probe = d;
    const auto log_density = [&](double v) {
      probe.y[0](miss_station, miss_hour) = v;
      double lp = 0.0;
      for (int h = miss_hour; h < probe.n_hours; ++h) {
        const double e = probe.y[0](miss_station, h) - ref_mean(s0, probe, 0, miss_station, h);
        lp -= 0.5 * ref_weight(s0, probe, 0, h) * e * e;
      }
      return lp;
    };
    const double fm = log_density(-1.0), f0 = log_density(0.0), fp = log_density(1.0);
    const double p = -(fp + fm - 2.0 * f0);
    const double b = 0.5 * (fp - fm);
    ModelState s = s0;
    Eigen::MatrixXd draws(kC1Draws, 1);
    for (int m = 0; m < kC1Draws; ++m) {
      g.update_missing(s, Pollutant::Ozone, 77, m + 1);
      draws(m, 0) = g.data().y[0](miss_station, miss_hour);
    }
    results.push_back(
        compare("missing cell", draws, {Eigen::VectorXd::Constant(1, b / p), Eigen::VectorXd::Constant(1, 1.0 / p)}));
  }

  bool pass = true;
  double worst_mean = 0.0, worst_var = 0.0;
  for (const auto& kr : results) {
    std::printf("    %-28s mean err %.4f  var err %.4f  %s\n", kr.name.c_str(), kr.mean_err, kr.var_err,
                kr.pass ? "ok" : "FAIL");
    pass = pass && kr.pass;
    worst_mean = std::max(worst_mean, kr.mean_err);
    worst_var = std::max(worst_var, kr.var_err);
  }
  std::printf("    a22 quadrature vs closed form: %.2e\n", quad_gap);
  const double secs = seconds_since(t0);
  pass = pass && secs < 300.0;
  return report(1, "conditional correctness", pass,
                std::to_string(results.size()) + " kernels, worst mean err " + fmt("%.4f", worst_mean) +
                    " (tol 0.02), worst var err " + fmt("%.4f", worst_var) + " (tol 0.05), " + fmt("%.0f s", secs));
}

// ---------------------------------------------------------------- criterion 2

struct GewekeSetup {
  ModelData data;
  Eigen::MatrixXd precision;
  PriorConfig prior;
};

GewekeSetup geweke_setup() {
  GewekeSetup g;
  const int ns = 3;
  const int warm = 2;
  const int nt = 12;
  Rng rng(2024);
  ModelData& d = g.data;
  d.n_stations = ns;
  d.warmup = warm;
  d.n_hours = warm + nt;
  d.start = parse_timestamp("2017-01-01T00");
  d.lags = LagConfig{{1}, {1, 2}};
  d.transforms = TransformPair::identity();
  d.tmp = SeriesMatrix::NullaryExpr(ns, d.n_hours, [&] { return rng.normal(); });
  d.rh = SeriesMatrix::NullaryExpr(ns, d.n_hours, [&] { return rng.normal(); });
  for (auto& y : d.y) y = SeriesMatrix::Constant(ns, d.n_hours, 0.5);
  d.hour_of_day.resize(d.n_hours);
  for (int h = 0; h < d.n_hours; ++h) d.hour_of_day[h] = h % 24;
  // A proper spatial prior so the joint distribution exists.
  g.precision = build_car(testing::grid_stations(ns)).Q + Eigen::MatrixXd::Identity(ns, ns);
  g.prior.mean_var = 0.25;
  g.prior.iw_scale = 0.3;
  g.prior.iw_df_offset = 4.0;
  g.prior.ig_shape = 6.0;
  g.prior.ig_rate = 5.0;
  return g;
}

Eigen::VectorXd mvn(const Eigen::MatrixXd& cov, Rng& rng) {
  const Eigen::MatrixXd l = cov.llt().matrixL();
  Eigen::VectorXd z(cov.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return l * z;
}

/// Inverse-Wishart by inverting a Wishart built from Gaussian outer products
/// (integer degrees of freedom).
Eigen::MatrixXd iw_by_sums(const Eigen::MatrixXd& scale, int df, Rng& rng) {
  const Eigen::MatrixXd sinv = scale.inverse();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(scale.rows(), scale.cols());
  for (int r = 0; r < df; ++r) {
    const Eigen::VectorXd z = mvn(sinv, rng);
    w += z * z.transpose();
  }
  return w.inverse();
}

ModelState prior_draw(const GewekeSetup& g, Rng& rng) {
  const int ns = g.data.n_stations;
  const PriorConfig& p = g.prior;
  ModelState s = ModelState::zeros(ns, g.data.lags, Variance::Homoscedastic);
  for (int k = 0; k < kNumPollutants; ++k) {
    for (int which = 0; which < 2; ++which) {
      Eigen::VectorXd& mean = which == 0 ? s.beta0[k] : s.gamma0[k];
      Eigen::MatrixXd& cov = which == 0 ? s.sigma_beta[k] : s.sigma_gamma[k];
      Eigen::MatrixXd& site = which == 0 ? s.beta[k] : s.gamma[k];
      const auto dim = mean.size();
      mean = std::sqrt(p.mean_var) * mvn(Eigen::MatrixXd::Identity(dim, dim), rng);
      cov = iw_by_sums(p.iw_scale * Eigen::MatrixXd::Identity(dim, dim),
                       static_cast<int>(dim + static_cast<Eigen::Index>(p.iw_df_offset)), rng);
      for (int i = 0; i < ns; ++i) site.row(i) = (mean + mvn(cov, rng)).transpose();
    }
    s.sigma2[k](0) = rng.inv_gamma(p.ig_shape, p.ig_rate);
  }
  const Eigen::MatrixXd vcov = g.precision.inverse();
  s.v1 = mvn(vcov, rng);
  s.v2 = mvn(vcov, rng);
  s.a.a11 = std::sqrt(rng.inv_gamma(p.ig_shape, p.ig_rate));
  s.a.a22 = std::sqrt(rng.inv_gamma(p.ig_shape, p.ig_rate));
  s.a.a12 = std::sqrt(p.mean_var) * rng.normal();
  return s;
}

void simulate_outcomes(const ModelState& s, ModelData& d, Rng& rng) {
  for (int k = 0; k < kNumPollutants; ++k) {
    for (int h = d.warmup; h < d.n_hours; ++h) {
      for (int i = 0; i < d.n_stations; ++i) {
        d.y[k](i, h) = ref_mean(s, d, k, i, h) + std::sqrt(s.sigma2[k](0)) * rng.normal();
      }
    }
  }
}

std::vector<std::pair<std::string, std::function<double(const ModelState&)>>> geweke_functions() {
  return {
      {"log sigma2 o3", [](const ModelState& s) { return std::log(s.sigma2[0](0)); }},
      {"log sigma2 pm10", [](const ModelState& s) { return std::log(s.sigma2[1](0)); }},
      {"beta o3 s0 tmp", [](const ModelState& s) { return s.beta[0](0, 1); }},
      {"beta0 pm10 int", [](const ModelState& s) { return s.beta0[1](0); }},
      {"gamma pm10 s1 lag2", [](const ModelState& s) { return s.gamma[1](1, 1); }},
      {"log sigma_gamma pm10", [](const ModelState& s) { return std::log(s.sigma_gamma[1](0, 0)); }},
      {"psi1 s0", [](const ModelState& s) { return s.a.a11 * s.v1(0); }},
      {"log a11", [](const ModelState& s) { return std::log(s.a.a11); }},
      {"a12", [](const ModelState& s) { return s.a.a12; }},
      {"log a22", [](const ModelState& s) { return std::log(s.a.a22); }},
  };
}

int criterion2() {
  const auto t0 = Clock::now();
  const GewekeSetup setup = geweke_setup();
  const auto fns = geweke_functions();
  const auto nf = fns.size();
  const int n = kC2Iterations;

  // Marginal-conditional: independent prior draws.
  Rng rng(7);
  std::vector<std::vector<double>> mc(nf, std::vector<double>(n));
  for (int m = 0; m < n; ++m) {
    const ModelState s = prior_draw(setup, rng);
    for (std::size_t f = 0; f < nf; ++f) mc[f][m] = fns[f].second(s);
  }

  // Successive-conditional: alternate one sweep with fresh outcomes.
  GibbsSampler g(setup.data, setup.precision, setup.prior);
  ModelState s = prior_draw(setup, rng);
  simulate_outcomes(s, g.data(), rng);
  std::vector<std::vector<double>> sc(nf, std::vector<double>(n));
  for (int m = 0; m < n; ++m) {
    g.sweep(s, 99, m + 1);
    simulate_outcomes(s, g.data(), rng);
    for (std::size_t f = 0; f < nf; ++f) sc[f][m] = fns[f].second(s);
  }

  bool pass = true;
  double worst = 0.0;
  const int batches = 50;
  const int bs = n / batches;
  for (std::size_t f = 0; f < nf; ++f) {
    const auto a = testing::moments(mc[f]);
    const auto b = testing::moments(sc[f]);
    // Batch means for the autocorrelated chain.
    std::vector<double> bm(batches);
    for (int c = 0; c < batches; ++c) {
      double acc = 0.0;
      for (int t = c * bs; t < (c + 1) * bs; ++t) acc += sc[f][t];
      bm[c] = acc / bs;
    }
    const double se_b = std::sqrt(testing::moments(bm).var / batches);
    const double se_a = std::sqrt(a.var / n);
    const double z = (a.mean - b.mean) / std::sqrt(se_a * se_a + se_b * se_b);
    std::printf("    %-22s prior %+9.4f  sampler %+9.4f  z %+6.2f\n", fns[f].first.c_str(), a.mean, b.mean, z);
    worst = std::max(worst, std::abs(z));
    pass = pass && std::abs(z) < kC2MaxZ;
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 600.0;
  return report(2, "Geweke joint distribution", pass,
                std::to_string(nf) + " functions, max |z| " + fmt("%.2f", worst) + " (limit 4), " + fmt("%.0f s", secs));
}

// ---------------------------------------------------------------- criterion 3

int criterion3() {
  const auto t0 = Clock::now();
  const LagConfig lags = LagConfig::symmetric({1, 2, 24});
  const SynthResult r = generate(default_synth_spec(5, 2000, lags, 2017));
  const ChainOutput chain = run_chain(r.panel, lags, TransformPair{}, ChainConfig::desk());
  const ModelState& t = r.truth;

  struct Tracked {
    std::string name;
    double truth;
    std::function<double(const ModelState&)> get;
  };
  std::vector<Tracked> tracked;
  for (int k = 0; k < kNumPollutants; ++k) {
    const std::string p = k == 0 ? "o3" : "pm10";
    tracked.push_back({"sigma2_" + p, t.sigma2[k](0), [k](const ModelState& s) { return s.sigma2[k](0); }});
    for (int i = 0; i < 5; ++i) {
      tracked.push_back({"gamma_" + p + "_s" + std::to_string(i) + "_lag1", t.gamma[k](i, 0),
                         [k, i](const ModelState& s) { return s.gamma[k](i, 0); }});
    }
  }
  for (int i = 0; i < 5; ++i) {
    tracked.push_back({"beta_o3_s" + std::to_string(i) + "_tmp", t.beta[0](i, 1),
                       [i](const ModelState& s) { return s.beta[0](i, 1); }});
  }
  tracked.push_back({"a11", t.a.a11, [](const ModelState& s) { return s.a.a11; }});
  tracked.push_back({"a12", t.a.a12, [](const ModelState& s) { return s.a.a12; }});
  tracked.push_back({"a22", t.a.a22, [](const ModelState& s) { return s.a.a22; }});

  int covered = 0;
  for (const auto& p : tracked) {
    std::vector<double> v;
    v.reserve(chain.draws.size());
    for (const auto& s : chain.draws) v.push_back(p.get(s));
    const double lo = quantile(v, 0.025);
    const double hi = quantile(v, 0.975);
    const bool in = lo <= p.truth && p.truth <= hi;
    covered += in;
    std::printf("    %-22s truth %+10.5f  95%% [%+10.5f, %+10.5f]  %s\n", p.name.c_str(), p.truth, lo, hi,
                in ? "covered" : "MISSED");
  }
  const double secs = seconds_since(t0);
  const bool pass = covered >= kC3MinCovered && secs < 600.0;
  return report(3, "parameter recovery", pass,
                std::to_string(covered) + "/" + std::to_string(tracked.size()) + " intervals cover the truth (need " +
                    std::to_string(kC3MinCovered) + "), " + std::to_string(chain.draws.size()) + " draws, " +
                    fmt("%.0f s", secs));
}

// ---------------------------------------------------------------- criterion 4

double naive_crps(const std::vector<double>& x, double y) {
  const double m = static_cast<double>(x.size());
  double a = 0.0, b = 0.0;
  for (double u : x) {
    a += std::abs(u - y);
    for (double v : x) b += std::abs(u - v);
  }
  return a / m - b / (2.0 * m * m);
}

double naive_es(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const double m = static_cast<double>(x.rows());
  double a = 0.0, b = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    a += (x.row(i).transpose() - y).norm();
    for (Eigen::Index j = 0; j < x.rows(); ++j) b += (x.row(i) - x.row(j)).norm();
  }
  return a / m - b / (2.0 * m * m);
}

int criterion4() {
  Rng rng(4);
  double crps_gap = 0.0, es_gap = 0.0, dim1_gap = 0.0;
  for (int c = 0; c < kC4Cases; ++c) {
    const int m = 1 + static_cast<int>(rng() % 100);
    const double scale = std::exp(2.0 * rng.normal());
    std::vector<double> x(m);
    for (auto& v : x) v = scale * rng.normal();
    const double y = scale * 1.5 * rng.normal();
    const double ref = naive_crps(x, y);
    crps_gap = std::max(crps_gap, std::abs(crps_ecdf(x, y) - ref) / std::max(1.0, std::abs(ref)));

    Eigen::MatrixXd xs(m, 2);
    for (int r = 0; r < m; ++r) xs.row(r) << rng.normal(), 3.0 * rng.normal();
    const Eigen::Vector2d ys(rng.normal(), rng.normal());
    Standardizer z{Eigen::Vector2d(0.5, -1.0), Eigen::Vector2d(1.0, 3.0)};
    Eigen::MatrixXd std_x = xs;
    for (int r = 0; r < m; ++r) std_x.row(r) = ((xs.row(r).transpose() - z.mean).cwiseQuotient(z.sd)).transpose();
    const double es_ref = naive_es(std_x, (ys - z.mean).cwiseQuotient(z.sd));
    es_gap = std::max(es_gap, std::abs(energy_score(xs, ys, z) - es_ref) / std::max(1.0, es_ref));

    Eigen::MatrixXd col(m, 1);
    for (int r = 0; r < m; ++r) col(r, 0) = x[r];
    dim1_gap = std::max(dim1_gap, std::abs(energy_score(col, Eigen::VectorXd::Constant(1, y), Standardizer::identity(1)) -
                                           crps_ecdf(x, y)) /
                                      std::max(1.0, std::abs(ref)));
  }
  double truth = 0.0, shifted = 0.0;
  for (int rep = 0; rep < kC4Replicates; ++rep) {
    const double y = rng.normal();
    std::vector<double> a(200), b(200);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal() + 1.0;
    truth += crps_ecdf(a, y);
    shifted += crps_ecdf(b, y);
  }
  truth /= kC4Replicates;
  shifted /= kC4Replicates;
  const bool pass = crps_gap <= kC4Tol && es_gap <= kC4Tol && dim1_gap <= kC4Tol && truth < shifted;
  return report(4, "scoring oracles", pass,
                "CRPS gap " + fmt("%.1e", crps_gap) + ", ES gap " + fmt("%.1e", es_gap) + ", ES=CRPS gap " +
                    fmt("%.1e", dim1_gap) + " (tol 1e-12), mean CRPS true " + fmt("%.4f", truth) + " vs shifted " +
                    fmt("%.4f", shifted));
}

// ---------------------------------------------------------------- criterion 5

/// Table 1 as a list of independent rules; a region's phase is the highest
/// rule that fires for it.
RegionPhases brute_force_phase(const std::array<int, kNumRegions>& ozone, const std::array<int, kNumRegions>& pm) {
  const int o_max = *std::max_element(ozone.begin(), ozone.end());
  const int pm_ge1 = static_cast<int>(std::count_if(pm.begin(), pm.end(), [](int v) { return v >= 1; }));
  const int pm_ge2 = static_cast<int>(std::count_if(pm.begin(), pm.end(), [](int v) { return v >= 2; }));
  RegionPhases out{};
  for (int j = 0; j < kNumRegions; ++j) {
    int s = 0;
    if (pm[j] >= 1) s = std::max(s, 1);  // phase I, regional PM10
    if (o_max >= 1) s = std::max(s, 1);  // phase I, any region's ozone
    if (pm_ge1 >= 2) s = std::max(s, 1); // phase I, PM10 in two or more regions
    if (pm[j] >= 2) s = std::max(s, 2);  // phase II, regional PM10
    if (o_max >= 2) s = std::max(s, 2);
    if (pm_ge2 >= 2) s = std::max(s, 2);
    out[j] = s;
  }
  return out;
}

int criterion5() {
  const Thresholds th;
  // Representative values per level, including the exact thresholds.
  const double o_vals[3][2] = {{0.0, 153.9}, {154.0, 203.9}, {204.0, 500.0}};
  const double p_vals[3][2] = {{0.0, 213.9}, {214.0, 353.9}, {354.0, 900.0}};
  long cases = 0, mismatches = 0;
  std::array<int, kNumRegions> ol{}, pl{};
  int total = 1;
  for (int j = 0; j < 2 * kNumRegions; ++j) total *= 3;
  for (int code = 0; code < total; ++code) {
    int c = code;
    for (int j = 0; j < kNumRegions; ++j) {
      ol[j] = c % 3;
      c /= 3;
      pl[j] = c % 3;
      c /= 3;
    }
    const RegionPhases want = brute_force_phase(ol, pl);
    for (int variant = 0; variant < 2; ++variant) {
      RegionValues zo, zp;
      for (int j = 0; j < kNumRegions; ++j) {
        zo[j] = o_vals[ol[j]][(variant + j) % 2];
        zp[j] = p_vals[pl[j]][(variant + j + 1) % 2];
      }
      ++cases;
      mismatches += classify_phase(zo, zp, th) != want;
    }
  }
  return report(5, "phase truth table", mismatches == 0,
                std::to_string(cases) + " region-level combinations, " + std::to_string(mismatches) + " mismatches");
}

// ---------------------------------------------------------------- criterion 6

int criterion6() {
  const auto t0 = Clock::now();
  const LagConfig lags = LagConfig::symmetric({1});
  const SynthResult r = generate(default_synth_spec(5, 8760, lags, 6));
  const auto targets = evaluation_hours(r.panel);

  ExceedanceAccumulator acc(r.panel.stations, {});
  long hours = 0;
  prospective_driver(r.panel, lags, TransformPair{}, {2, 1, 1, Variance::Homoscedastic, 1}, {},
                     [&](const HourDraws& h) {
                       ++hours;
                       acc.add(h);
                     });
  acc.finish();
  const auto table = acc.ozone();
  const long retained = cli::default_config(false).chain.retained();
  const bool pass = targets.size() == 1095 && hours == 8016 && table.n_hours == 8016 && table.n_days == 334 &&
                    retained == 10000 && ChainConfig::paper().retained() == 10000;
  return report(6, "structural constants", pass,
                std::to_string(targets.size()) + " retrospective hours (1095), " + std::to_string(table.n_hours) +
                    " prospective hours (8016) over " + std::to_string(table.n_days) + " days (334), " +
                    std::to_string(retained) + " retained draws (10000), " + fmt("%.0f s", seconds_since(t0)));
}

// ---------------------------------------------------------------- criterion 7

int criterion7(int workers) {
  const auto t0 = Clock::now();
  const LagConfig truth = LagConfig::symmetric({1, 2, 24, 168});
  const auto candidates = default_candidates();
  const std::size_t want = 2;  // (1,2,24,168)
  int wins = 0;
  for (int seed = 1; seed <= kC7Seeds; ++seed) {
    const auto ts = Clock::now();
    const SynthResult r = generate(default_synth_spec(kC7Stations, kC7Hours, truth, 700 + seed));
    const auto rows = holdout_experiment(r.panel, candidates, TransformPair{}, ChainConfig::desk(), {},
                                         {0.1, static_cast<std::uint64_t>(seed), workers});
    const std::size_t best = best_by_es(rows);
    wins += best == want;
    std::string line;
    for (const auto& row : rows) line += " " + fmt("%.5f", row.es);
    std::printf("    seed %2d: ES%s  best %s %s  (%.0f s)\n", seed, line.c_str(), rows[best].lags.c_str(),
                best == want ? "ok" : "MISS", seconds_since(ts));
    std::fflush(stdout);
  }
  const double secs = seconds_since(t0);
  const bool pass = wins >= kC7MinWins && secs < 3600.0;
  return report(7, "lag selection", pass,
                "true lags best in " + std::to_string(wins) + "/" + std::to_string(kC7Seeds) + " seeds (need " +
                    std::to_string(kC7MinWins) + "), " + fmt("%.0f s", secs));
}

// ---------------------------------------------------------------- criterion 8

int criterion8() {
  const auto t0 = Clock::now();
  const LagConfig lags = LagConfig::symmetric({1, 2, 24});
  const SynthResult r = generate(default_synth_spec(10, 1000, lags, 88));
  const auto rows =
      holdout_experiment(r.panel, {Candidate{"truth", lags}}, TransformPair{}, ChainConfig::desk(), {}, {0.1, 8, 1});
  const ScoreRow& row = rows.at(0);
  const bool pass = row.cov90_o3 >= kC8Lo && row.cov90_o3 <= kC8Hi && row.cov90_pm >= kC8Lo && row.cov90_pm <= kC8Hi;
  return report(8, "interval calibration", pass,
                "90% coverage ozone " + fmt("%.4f", row.cov90_o3) + ", PM10 " + fmt("%.4f", row.cov90_pm) +
                    " over " + std::to_string(row.n_holdout) + " held-out pairs (band [0.86, 0.94]), " +
                    fmt("%.0f s", seconds_since(t0)));
}

// ---------------------------------------------------------------- criterion 9

int criterion9() {
  const LagConfig lags = LagConfig::symmetric({1, 2, 24});
  const SynthResult r = generate(default_synth_spec(5, 400, lags, 9));
  const ChainOutput chain = run_chain(r.panel, lags, TransformPair{}, {200, 100, 5, Variance::Homoscedastic, 3});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Rng rng(9);
  int checked = 0, changed = 0;
  for (int rep = 0; rep < 25; ++rep) {
    const int target = r.panel.warmup_hours + static_cast<int>(rng() % static_cast<std::uint64_t>(r.panel.analysis_hours()));
    const HourDraws clean = predict_hour(chain.draws, r.panel, target, lags, TransformPair{}, 5);
    HourlyPanel poisoned = r.panel;
    const int tail = poisoned.n_hours - target;
    for (auto* m : {&poisoned.ozone, &poisoned.pm10, &poisoned.tmp, &poisoned.rh}) m->rightCols(tail).setConstant(nan);
    const HourDraws dirty = predict_hour(chain.draws, poisoned, target, lags, TransformPair{}, 5);
    ++checked;
    const bool same = clean.o3 == dirty.o3 && clean.pm10 == dirty.pm10 && clean.pm24 == dirty.pm24 &&
                      clean.o3_8h == dirty.o3_8h && clean.o3_model == dirty.o3_model &&
                      clean.pm10_model == dirty.pm10_model;
    changed += !same;
  }
  return report(9, "future blindness", changed == 0 && checked > 0,
                std::to_string(checked) + " target hours, " + std::to_string(changed) +
                    " changed after poisoning every later cell");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aqcast acceptance suite"};
  int criterion = 0;
  int workers = 1;
  app.add_option("--criterion", criterion, "criterion number 1-9")->required()->check(CLI::Range(1, 9));
  app.add_option("--workers", workers, "parallel candidate chains for criterion 7");
  CLI11_PARSE(app, argc, argv);
  set_warning_handler([](const std::string&) {});
  try {
    switch (criterion) {
      case 1: return criterion1();
      case 2: return criterion2();
      case 3: return criterion3();
      case 4: return criterion4();
      case 5: return criterion5();
      case 6: return criterion6();
      case 7: return criterion7(workers);
      case 8: return criterion8();
      case 9: return criterion9();
    }
  } catch (const std::exception& e) {
    std::printf("criterion %d: FAIL  error: %s\n", criterion, e.what());
    return 1;
  }
  return 1;
}
