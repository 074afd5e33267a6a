#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aqcast/panel.hpp"
#include "aqcast/spatial.hpp"
#include "aqcast/transform.hpp"

namespace aqcast {

/// Regressors per station and pollutant: intercept, temperature and relative
/// humidity, both taken from the previous hour.
inline constexpr int kNumRegressors = 3;
inline constexpr int kHoursPerDay = 24;

/// Fixed prior hyperparameters.
struct PriorConfig {
  /// Prior variance of the hierarchical means beta0, gamma0 and of a12.
  double mean_var = 1e3;
  /// Inverse-Wishart scale multiplier (scale = iw_scale * I).
  double iw_scale = 1e3;
  /// Inverse-Wishart degrees of freedom = dimension + iw_df_offset.
  double iw_df_offset = 1.0;
  /// Inverse-gamma prior for sigma^2, a11^2 and a22^2.
  double ig_shape = 1.0;
  double ig_rate = 1.0;

  void validate() const;
};

enum class Variance { Homoscedastic, HeteroscedasticHourly };

std::string variance_name(Variance v);
Variance parse_variance(const std::string& text);

/// Every sampled quantity of the bivariate model. Arrays are indexed by pollutant
/// (0 = ozone, 1 = PM10).
struct ModelState {
  std::array<Eigen::MatrixXd, kNumPollutants> beta;         // [station x p]
  std::array<Eigen::VectorXd, kNumPollutants> beta0;        // p
  std::array<Eigen::MatrixXd, kNumPollutants> sigma_beta;   // p x p
  std::array<Eigen::MatrixXd, kNumPollutants> gamma;        // [station x n_lags(k)]
  std::array<Eigen::VectorXd, kNumPollutants> gamma0;       // n_lags(k)
  std::array<Eigen::MatrixXd, kNumPollutants> sigma_gamma;  // n_lags(k) x n_lags(k)
  /// Length 1 (homoscedastic) or 24 (indexed by hour of day).
  std::array<Eigen::VectorXd, kNumPollutants> sigma2;
  Eigen::VectorXd v1;
  Eigen::VectorXd v2;
  Coregionalization a;

  int n_stations() const { return static_cast<int>(v1.size()); }
  int n_lags(Pollutant k) const { return static_cast<int>(gamma[static_cast<int>(k)].cols()); }
  Variance variance() const {
    return sigma2[0].size() == 1 ? Variance::Homoscedastic : Variance::HeteroscedasticHourly;
  }
  double error_variance(Pollutant k, int hour_of_day) const {
    const auto& s = sigma2[static_cast<int>(k)];
    return s.size() == 1 ? s(0) : s(hour_of_day);
  }
  /// Spatial effects (psi1, psi2) = A (V1, V2).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> psi() const { return coregionalize(v1, v2, a); }
  double psi(Pollutant k, int station) const {
    return k == Pollutant::Ozone ? a.a11 * v1(station) : a.a12 * v1(station) + a.a22 * v2(station);
  }

  /// Zero-initialized state of the given shape (identity covariances, unit variances).
  static ModelState zeros(int n_stations, const LagConfig& lags, Variance variance);

  bool all_finite() const;
  bool operator==(const ModelState& other) const;
};

/// Modeling-scale data for the sampler. Outcomes cover every hour of the panel;
/// missing analysis cells carry their current imputed value and are listed in
/// `missing`.
struct ModelData {
  int n_stations = 0;
  int n_hours = 0;
  int warmup = 0;
  HourStamp start = 0;
  LagConfig lags;
  TransformPair transforms;
  std::array<SeriesMatrix, kNumPollutants> y;
  SeriesMatrix tmp;
  SeriesMatrix rh;
  std::vector<int> hour_of_day;
  /// (station, hour) of missing analysis cells per pollutant, ordered by hour.
  std::array<std::vector<std::pair<int, int>>, kNumPollutants> missing;

  int analysis_hours() const { return n_hours - warmup; }
  int n_lags(Pollutant k) const { return static_cast<int>(lags.lags(k).size()); }
  /// Regressor row for the outcome at `hour`: (1, TMP, RH) at hour - 1.
  Eigen::Vector3d design(int station, int hour) const {
    return {1.0, tmp(station, hour - 1), rh(station, hour - 1)};
  }
  double lagged(Pollutant k, int station, int hour, int j) const {
    return y[static_cast<int>(k)](station, hour - lags.lags(k)[j]);
  }
  /// Count of analysis hours at each hour of day.
  std::array<int, kHoursPerDay> hours_per_hour_of_day() const;
};

/// Transforms the panel and validates it for fitting: lags fit in the warm-up,
/// covariates feeding the analysis window and warm-up outcomes are present, and
/// log-scale outcomes are positive. Missing analysis outcomes start at the
/// station's observed mean.
ModelData prepare_model_data(const HourlyPanel& panel, const LagConfig& lags, const TransformPair& transforms);

/// Per-station least squares starting point (see README for the exact rules).
ModelState init_state(const ModelData& data, Variance variance);

/// Versioned text checkpoint with hexadecimal floats (bit-exact round trip).
void write_state(std::ostream& out, const ModelState& state);
ModelState read_state(std::istream& in);

/// Named scalar view of a state, in a fixed order.
std::vector<std::pair<std::string, double>> flatten(const ModelState& state, const LagConfig& lags);

}  // namespace aqcast
