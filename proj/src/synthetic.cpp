#include "aqcast/synthetic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "aqcast/errors.hpp"
#include "aqcast/log.hpp"
#include "aqcast/spatial.hpp"

namespace aqcast {

Eigen::VectorXd draw_car(const Eigen::MatrixXd& q, Rng& rng) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  if (eig.info() != Eigen::Success) throw NumericalError("CAR precision eigendecomposition failed");
  const Eigen::Index n = q.rows();
  const double tol = 1e-9 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double z = rng.normal();
    const double lambda = eig.eigenvalues()(k);
    if (lambda > tol) v += (z / std::sqrt(lambda)) * eig.eigenvectors().col(k);
  }
  // The null space of an intrinsic CAR precision is the constant vector.
  v.array() -= v.mean();
  return v;
}

double lag_spectral_radius(const std::vector<int>& lags, const Eigen::VectorXd& gamma) {
  if (lags.empty()) return 0.0;
  const int p = *std::max_element(lags.begin(), lags.end());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < lags.size(); ++j) c(0, lags[j] - 1) = gamma(static_cast<Eigen::Index>(j));
  for (int r = 1; r < p; ++r) c(r, r - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(c, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

SynthResult generate(const SynthSpec& spec) {
  const int ns = static_cast<int>(spec.stations.size());
  if (ns < 2) throw DataError("synthetic panel needs at least two stations");
  if (spec.analysis_hours < 1) throw DataError("synthetic panel needs analysis hours");
  spec.lags.validate();
  const int max_lag = spec.lags.max_lag();
  if (spec.warmup_hours < std::max(max_lag, 1)) throw DataError("synthetic warm-up shorter than the deepest lag");
  const ModelState& t = spec.truth;
  if (t.n_stations() != ns) throw DataError("true state does not match the station count");
  for (int k = 0; k < kNumPollutants; ++k) {
    if (t.n_lags(static_cast<Pollutant>(k)) != static_cast<int>(spec.lags.lags(static_cast<Pollutant>(k)).size())) {
      throw DataError("true lag coefficients do not match the lag sets");
    }
  }
  if (!t.a.valid()) throw DataError("true coregionalization needs positive a11 and a22");

  SynthResult out;
  out.truth = t;
  const int stored = spec.warmup_hours + spec.analysis_hours;
  const int pre = std::max(spec.preroll_hours, max_lag);
  const int total = pre + stored;

  if (spec.draw_spatial) {
    const SpatialStructure s = build_car(spec.stations);
    Rng rv = Rng::stream(spec.seed, {key(StreamId::Synthetic), 0});
    out.truth.v1 = draw_car(s.Q, rv);
    out.truth.v2 = draw_car(s.Q, rv);
  }

  // Covariates over the whole simulated span.
  const bool supplied = spec.tmp_supplied.size() > 0;
  if (supplied && (spec.tmp_supplied.rows() != ns || spec.tmp_supplied.cols() != stored ||
                   spec.rh_supplied.rows() != ns || spec.rh_supplied.cols() != stored)) {
    throw DataError("supplied covariates must be [station x (warm-up + analysis hours)]");
  }
  SeriesMatrix tmp(ns, total);
  SeriesMatrix rh(ns, total);
  for (int i = 0; i < ns; ++i) {
    Rng rc = Rng::stream(spec.seed, {key(StreamId::Synthetic), 1, static_cast<std::uint64_t>(i)});
    for (int h = 0; h < total; ++h) {
      if (supplied) {
        const int src = std::max(0, h - pre);
        tmp(i, h) = spec.tmp_supplied(i, src);
        rh(i, h) = spec.rh_supplied(i, src);
      } else {
        tmp(i, h) = spec.tmp_mean + spec.tmp_sd * rc.normal();
        rh(i, h) = spec.rh_mean + spec.rh_sd * rc.normal();
      }
    }
  }

  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    const auto& lags = spec.lags.lags(kp);
    SeriesMatrix y(ns, total);
    for (int i = 0; i < ns; ++i) {
      const Eigen::VectorXd g = out.truth.gamma[k].row(i).transpose();
      const double radius = lag_spectral_radius(lags, g);
      if (radius >= 1.0) {
        out.explosive = true;
        warn("synthetic lag polynomial for station " + spec.stations[i].id + " is not stationary (radius " +
             std::to_string(radius) + ")");
      }
      const double psi = out.truth.psi(kp, i);
      const auto& b = out.truth.beta[k];
      const double xbar = b(i, 0) + b(i, 1) * spec.tmp_mean + b(i, 2) * spec.rh_mean + psi;
      const double gsum = g.sum();
      const double start = std::abs(1.0 - gsum) > 1e-6 ? xbar / (1.0 - gsum) : xbar;
      Rng re = Rng::stream(spec.seed, {key(StreamId::Synthetic), 2, static_cast<std::uint64_t>(k),
                                       static_cast<std::uint64_t>(i)});
      for (int h = 0; h < total; ++h) {
        if (h < std::max(max_lag, 1)) {
          y(i, h) = start;
          continue;
        }
        double m = b(i, 0) + b(i, 1) * tmp(i, h - 1) + b(i, 2) * rh(i, h - 1) + psi;
        for (std::size_t j = 0; j < lags.size(); ++j) m += g(static_cast<Eigen::Index>(j)) * y(i, h - lags[j]);
        const int hod = hour_of_day(spec.start + (h - pre));
        y(i, h) = m + std::sqrt(out.truth.error_variance(kp, hod)) * re.normal();
      }
    }
    out.model_scale[k] = y.rightCols(stored);
  }

  out.panel = HourlyPanel::empty(spec.start, stored, spec.warmup_hours, spec.stations);
  out.panel.tmp = tmp.rightCols(stored);
  out.panel.rh = rh.rightCols(stored);
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    auto& dst = out.panel.pollutant(kp);
    for (int i = 0; i < ns; ++i) {
      for (int h = 0; h < stored; ++h) dst(i, h) = inverse(out.model_scale[k](i, h), kp, spec.transforms);
    }
  }
  out.panel.refresh_missing();
  return out;
}

namespace {

double lag_weight(int lag) {
  switch (lag) {
    case 1: return 0.4;
    case 2: return 0.1;
    case 24: return 0.1;
    case 168: return 0.05;
    default: return 0.04;
  }
}

}  // namespace

SynthSpec default_synth_spec(int n_stations, int analysis_hours, const LagConfig& lags, std::uint64_t seed) {
  if (n_stations < 2) throw DataError("synthetic panel needs at least two stations");
  lags.validate();
  SynthSpec spec;
  spec.seed = seed;
  spec.lags = lags;
  spec.analysis_hours = analysis_hours;
  spec.warmup_hours = std::max(168, lags.max_lag());
  spec.start = parse_timestamp("2017-01-01T00") - spec.warmup_hours;

  Rng rs = Rng::stream(seed, {key(StreamId::Synthetic), 3});
  for (int i = 0; i < n_stations; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", i + 1);
    StationMeta s;
    s.id = id;
    s.name = std::string("Station ") + (id + 1);
    s.region = static_cast<Region>(i % kNumRegions);
    s.lat = 19.4 + 0.3 * (rs.uniform() - 0.5);
    s.lon = -99.1 + 0.3 * (rs.uniform() - 0.5);
    spec.stations.push_back(s);
  }

  ModelState t = ModelState::zeros(n_stations, lags, Variance::Homoscedastic);
  // Long-run means on the modeling scale: sqrt(ppb) for ozone, log(ug/m3) for PM10.
  const double target[kNumPollutants] = {6.0, 3.8};
  const double b_tmp[kNumPollutants] = {0.03, -0.01};
  const double b_rh[kNumPollutants] = {-0.01, -0.004};
  const double sigma2[kNumPollutants] = {0.09, 0.0225};
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    const auto& kl = lags.lags(kp);
    const auto nl = static_cast<Eigen::Index>(kl.size());
    double gsum = 0.0;
    for (Eigen::Index j = 0; j < nl; ++j) {
      t.gamma0[k](j) = lag_weight(kl[j]);
      gsum += t.gamma0[k](j);
    }
    if (gsum >= 0.95) {
      t.gamma0[k] *= 0.9 / gsum;
      gsum = 0.9;
    }
    const double intercept = target[k] * (1.0 - gsum) - b_tmp[k] * spec.tmp_mean - b_rh[k] * spec.rh_mean;
    t.beta0[k] << intercept, b_tmp[k], b_rh[k];
    t.sigma_beta[k] = Eigen::Vector3d(0.0025, 1e-5, 1e-6).asDiagonal();
    t.sigma_gamma[k] = 1e-4 * Eigen::MatrixXd::Identity(nl, nl);
    for (int i = 0; i < n_stations; ++i) {
      for (int c = 0; c < kNumRegressors; ++c) {
        t.beta[k](i, c) = t.beta0[k](c) + std::sqrt(t.sigma_beta[k](c, c)) * rs.normal();
      }
      for (Eigen::Index j = 0; j < nl; ++j) t.gamma[k](i, j) = t.gamma0[k](j) + 0.01 * rs.normal();
    }
    t.sigma2[k](0) = sigma2[k];
  }
  t.a = {1.0, 0.3, 0.8};
  spec.truth = t;
  return spec;
}

}  // namespace aqcast
