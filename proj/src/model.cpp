#include "aqcast/model.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "aqcast/errors.hpp"
#include "aqcast/log.hpp"

namespace aqcast {

// ---------------------------------------------------------------------------
// Transforms

double forward(double value, OzoneScale scale) {
  if (std::isnan(value) || scale == OzoneScale::Identity) return value;
  if (value < 0.0) throw DataError("sqrt transform of negative ozone value " + std::to_string(value));
  return std::sqrt(value);
}

double forward(double value, PmScale scale) {
  if (std::isnan(value) || scale == PmScale::Identity) return value;
  if (value <= 0.0) throw DataError("log transform of nonpositive PM10 value " + std::to_string(value));
  return std::log(value);
}

double forward(double value, Pollutant k, const TransformPair& t) {
  return k == Pollutant::Ozone ? forward(value, t.ozone) : forward(value, t.pm10);
}

double inverse(double value, OzoneScale scale) {
  if (scale == OzoneScale::Identity) return value;
  const double clamped = std::max(value, 0.0);
  return clamped * clamped;
}

double inverse(double value, PmScale scale) {
  return scale == PmScale::Identity ? value : std::exp(value);
}

double inverse(double value, Pollutant k, const TransformPair& t) {
  return k == Pollutant::Ozone ? inverse(value, t.ozone) : inverse(value, t.pm10);
}

// ---------------------------------------------------------------------------
// Priors and state

void PriorConfig::validate() const {
  if (!(mean_var > 0 && iw_scale > 0 && iw_df_offset > 0 && ig_shape > 0 && ig_rate > 0)) {
    throw DataError("prior hyperparameters must all be positive");
  }
}

std::string variance_name(Variance v) {
  return v == Variance::Homoscedastic ? "homoscedastic" : "heteroscedastic_hourly";
}

Variance parse_variance(const std::string& text) {
  if (text == "homoscedastic") return Variance::Homoscedastic;
  if (text == "heteroscedastic_hourly") return Variance::HeteroscedasticHourly;
  throw DataError("unknown variance variant '" + text + "'");
}

ModelState ModelState::zeros(int n_stations, const LagConfig& lags, Variance variance) {
  ModelState s;
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto nl = static_cast<Eigen::Index>(lags.lags(static_cast<Pollutant>(k)).size());
    s.beta[k] = Eigen::MatrixXd::Zero(n_stations, kNumRegressors);
    s.beta0[k] = Eigen::VectorXd::Zero(kNumRegressors);
    s.sigma_beta[k] = Eigen::MatrixXd::Identity(kNumRegressors, kNumRegressors);
    s.gamma[k] = Eigen::MatrixXd::Zero(n_stations, nl);
    s.gamma0[k] = Eigen::VectorXd::Zero(nl);
    s.sigma_gamma[k] = Eigen::MatrixXd::Identity(nl, nl);
    s.sigma2[k] = Eigen::VectorXd::Ones(variance == Variance::Homoscedastic ? 1 : kHoursPerDay);
  }
  s.v1 = Eigen::VectorXd::Zero(n_stations);
  s.v2 = Eigen::VectorXd::Zero(n_stations);
  return s;
}

bool ModelState::all_finite() const {
  for (int k = 0; k < kNumPollutants; ++k) {
    if (!beta[k].allFinite() || !beta0[k].allFinite() || !sigma_beta[k].allFinite() || !gamma[k].allFinite() ||
        !gamma0[k].allFinite() || !sigma_gamma[k].allFinite() || !sigma2[k].allFinite()) {
      return false;
    }
  }
  return v1.allFinite() && v2.allFinite() && std::isfinite(a.a11) && std::isfinite(a.a12) && std::isfinite(a.a22);
}

bool ModelState::operator==(const ModelState& o) const {
  for (int k = 0; k < kNumPollutants; ++k) {
    if (beta[k] != o.beta[k] || beta0[k] != o.beta0[k] || sigma_beta[k] != o.sigma_beta[k] ||
        gamma[k] != o.gamma[k] || gamma0[k] != o.gamma0[k] || sigma_gamma[k] != o.sigma_gamma[k] ||
        sigma2[k] != o.sigma2[k]) {
      return false;
    }
  }
  return v1 == o.v1 && v2 == o.v2 && a.a11 == o.a.a11 && a.a12 == o.a.a12 && a.a22 == o.a.a22;
}

// ---------------------------------------------------------------------------
// Modeling-scale data

std::array<int, kHoursPerDay> ModelData::hours_per_hour_of_day() const {
  std::array<int, kHoursPerDay> counts{};
  for (int h = warmup; h < n_hours; ++h) ++counts[hour_of_day[h]];
  return counts;
}

ModelData prepare_model_data(const HourlyPanel& panel, const LagConfig& lags, const TransformPair& transforms) {
  lags.validate();
  const int needed = std::max(lags.max_lag(), 1);
  if (panel.warmup_hours < needed) {
    throw DataError("fitting needs " + std::to_string(needed) + " warm-up hours, panel has " +
                    std::to_string(panel.warmup_hours));
  }
  ModelData d;
  d.n_stations = panel.n_stations();
  d.n_hours = panel.n_hours;
  d.warmup = panel.warmup_hours;
  d.start = panel.start;
  d.lags = lags;
  d.transforms = transforms;
  d.tmp = panel.tmp;
  d.rh = panel.rh;
  d.hour_of_day.resize(panel.n_hours);
  for (int h = 0; h < panel.n_hours; ++h) d.hour_of_day[h] = hour_of_day(panel.stamp(h));

  for (int i = 0; i < d.n_stations; ++i) {
    for (int h = d.warmup - 1; h < d.n_hours - 1; ++h) {
      if (std::isnan(d.tmp(i, h)) || std::isnan(d.rh(i, h))) {
        throw DataError("missing covariate at station " + panel.stations[i].id + ", " +
                        format_timestamp(panel.stamp(h)) + "; impute covariates before fitting");
      }
    }
  }

  for (int k = 0; k < kNumPollutants; ++k) {
    const auto pk = static_cast<Pollutant>(k);
    const SeriesMatrix& raw = panel.pollutant(pk);
    SeriesMatrix& y = d.y[k];
    y.resize(d.n_stations, d.n_hours);
    for (int i = 0; i < d.n_stations; ++i) {
      double sum = 0.0;
      int count = 0;
      for (int h = 0; h < d.n_hours; ++h) {
        const double v = forward(raw(i, h), pk, transforms);
        y(i, h) = v;
        if (std::isnan(v)) {
          if (h < d.warmup) {
            throw DataError("missing warm-up " + std::string(series_name(static_cast<Series>(k))) +
                            " at station " + panel.stations[i].id + ", " + format_timestamp(panel.stamp(h)) +
                            "; run nearest-station imputation first");
          }
          d.missing[k].emplace_back(i, h);
        } else if (h >= d.warmup) {
          sum += v;
          ++count;
        }
      }
      const double fill = count > 0 ? sum / count : 0.0;
      for (int h = d.warmup; h < d.n_hours; ++h) {
        if (std::isnan(y(i, h))) y(i, h) = fill;
      }
    }
    std::sort(d.missing[k].begin(), d.missing[k].end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
  }
  return d;
}

// ---------------------------------------------------------------------------
// Initialization

ModelState init_state(const ModelData& data, Variance variance) {
  ModelState s = ModelState::zeros(data.n_stations, data.lags, variance);
  const int nt = data.analysis_hours();
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto pk = static_cast<Pollutant>(k);
    const int nl = data.n_lags(pk);
    const int q = kNumRegressors + nl;
    double ssr = 0.0;
    long count = 0;
    for (int i = 0; i < data.n_stations; ++i) {
      Eigen::MatrixXd design(nt, q);
      Eigen::VectorXd response(nt);
      for (int t = 0; t < nt; ++t) {
        const int h = data.warmup + t;
        design.row(t).head<kNumRegressors>() = data.design(i, h).transpose();
        for (int j = 0; j < nl; ++j) design(t, kNumRegressors + j) = data.lagged(pk, i, h, j);
        response(t) = data.y[k](i, h);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
      Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
      if (qr.rank() < q) {
        // A constant response still has a well-defined intercept-only fit.
        if ((response.array() == response(0)).all()) {
          coef(0) = response(0);
        } else {
          warn("singular design for " + std::string(series_name(static_cast<Series>(k))) + " at station " +
               std::to_string(i) + "; starting coefficients at zero");
        }
      } else {
        coef = qr.solve(response);
      }
      s.beta[k].row(i) = coef.head<kNumRegressors>().transpose();
      if (nl > 0) s.gamma[k].row(i) = coef.tail(nl).transpose();
      ssr += (response - design * coef).squaredNorm();
      count += nt;
    }
    s.beta0[k] = s.beta[k].colwise().mean().transpose();
    if (nl > 0) s.gamma0[k] = s.gamma[k].colwise().mean().transpose();
    double var = count > 0 ? ssr / static_cast<double>(count) : 1.0;
    if (!(var > 1e-12) || !std::isfinite(var)) var = 1.0;
    s.sigma2[k].setConstant(var);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Checkpoint format

namespace {

constexpr const char* kStateTag = "aqcast-state";
constexpr int kStateVersion = 1;

void put_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << std::hexfloat << m(r, c) << std::defaultfloat;
  }
  out << '\n';
}

Eigen::MatrixXd get_matrix(std::istream& in, const std::string& name) {
  std::string tag;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> tag >> rows >> cols) || tag != name || rows < 0 || cols < 0) {
    throw DataError("checkpoint: expected field '" + name + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(in >> tok)) throw DataError("checkpoint: truncated field '" + name + "'");
      char* end = nullptr;
      m(r, c) = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw DataError("checkpoint: bad number in '" + name + "'");
    }
  }
  return m;
}

}  // namespace

void write_state(std::ostream& out, const ModelState& s) {
  out << kStateTag << ' ' << kStateVersion << '\n';
  const char* names[] = {"o3", "pm10"};
  for (int k = 0; k < kNumPollutants; ++k) {
    const std::string p = names[k];
    put_matrix(out, "beta_" + p, s.beta[k]);
    put_matrix(out, "beta0_" + p, s.beta0[k]);
    put_matrix(out, "sigma_beta_" + p, s.sigma_beta[k]);
    put_matrix(out, "gamma_" + p, s.gamma[k]);
    put_matrix(out, "gamma0_" + p, s.gamma0[k]);
    put_matrix(out, "sigma_gamma_" + p, s.sigma_gamma[k]);
    put_matrix(out, "sigma2_" + p, s.sigma2[k]);
  }
  put_matrix(out, "v1", s.v1);
  put_matrix(out, "v2", s.v2);
  Eigen::MatrixXd a(1, 3);
  a << s.a.a11, s.a.a12, s.a.a22;
  put_matrix(out, "coreg", a);
}

ModelState read_state(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != kStateTag) throw DataError("checkpoint: missing state header");
  if (version != kStateVersion) throw DataError("checkpoint: unsupported state version " + std::to_string(version));
  ModelState s;
  const char* names[] = {"o3", "pm10"};
  for (int k = 0; k < kNumPollutants; ++k) {
    const std::string p = names[k];
    s.beta[k] = get_matrix(in, "beta_" + p);
    s.beta0[k] = get_matrix(in, "beta0_" + p);
    s.sigma_beta[k] = get_matrix(in, "sigma_beta_" + p);
    s.gamma[k] = get_matrix(in, "gamma_" + p);
    s.gamma0[k] = get_matrix(in, "gamma0_" + p);
    s.sigma_gamma[k] = get_matrix(in, "sigma_gamma_" + p);
    s.sigma2[k] = get_matrix(in, "sigma2_" + p);
  }
  s.v1 = get_matrix(in, "v1");
  s.v2 = get_matrix(in, "v2");
  const Eigen::MatrixXd a = get_matrix(in, "coreg");
  if (a.size() != 3) throw DataError("checkpoint: coregionalization needs 3 entries");
  s.a = {a(0, 0), a(0, 1), a(0, 2)};
  return s;
}

std::vector<std::pair<std::string, double>> flatten(const ModelState& s, const LagConfig& lags) {
  std::vector<std::pair<std::string, double>> out;
  const char* pol[] = {"o3", "pm10"};
  const char* reg[] = {"int", "tmp", "rh"};
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto& lk = lags.lags(static_cast<Pollutant>(k));
    const std::string p = pol[k];
    for (int i = 0; i < s.beta[k].rows(); ++i) {
      for (int r = 0; r < kNumRegressors; ++r) {
        out.emplace_back("beta_" + p + "_s" + std::to_string(i) + "_" + reg[r], s.beta[k](i, r));
      }
    }
    for (int r = 0; r < kNumRegressors; ++r) out.emplace_back("beta0_" + p + "_" + reg[r], s.beta0[k](r));
    for (int r = 0; r < kNumRegressors; ++r) {
      for (int c = r; c < kNumRegressors; ++c) {
        out.emplace_back("Sigma_beta_" + p + "_" + reg[r] + "_" + reg[c], s.sigma_beta[k](r, c));
      }
    }
    for (int i = 0; i < s.gamma[k].rows(); ++i) {
      for (int j = 0; j < s.gamma[k].cols(); ++j) {
        out.emplace_back("gamma_" + p + "_s" + std::to_string(i) + "_l" + std::to_string(lk[j]), s.gamma[k](i, j));
      }
    }
    for (int j = 0; j < s.gamma0[k].size(); ++j) out.emplace_back("gamma0_" + p + "_l" + std::to_string(lk[j]), s.gamma0[k](j));
    for (int r = 0; r < s.sigma_gamma[k].rows(); ++r) {
      for (int c = r; c < s.sigma_gamma[k].cols(); ++c) {
        out.emplace_back("Sigma_gamma_" + p + "_l" + std::to_string(lk[r]) + "_l" + std::to_string(lk[c]),
                         s.sigma_gamma[k](r, c));
      }
    }
    if (s.sigma2[k].size() == 1) {
      out.emplace_back("sigma2_" + p, s.sigma2[k](0));
    } else {
      for (int q = 0; q < s.sigma2[k].size(); ++q) out.emplace_back("sigma2_" + p + "_h" + std::to_string(q), s.sigma2[k](q));
    }
  }
  for (int i = 0; i < s.v1.size(); ++i) out.emplace_back("V1_s" + std::to_string(i), s.v1(i));
  for (int i = 0; i < s.v2.size(); ++i) out.emplace_back("V2_s" + std::to_string(i), s.v2(i));
  out.emplace_back("a11", s.a.a11);
  out.emplace_back("a12", s.a.a12);
  out.emplace_back("a22", s.a.a22);
  return out;
}

}  // namespace aqcast
