#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "aqcast/model.hpp"
#include "aqcast/panel.hpp"
#include "aqcast/rng.hpp"

namespace aqcast {

/// Everything needed to simulate a panel from the model.
struct SynthSpec {
  std::vector<StationMeta> stations;
  /// First stored hour (start of the warm-up).
  HourStamp start = 0;
  int warmup_hours = 168;
  int analysis_hours = 2000;
  LagConfig lags;
  TransformPair transforms;
  /// True parameters. v1 and v2 are overwritten by CAR draws when draw_spatial is
  /// set; otherwise they are used as given.
  ModelState truth;
  bool draw_spatial = true;
  /// iid Gaussian covariates unless supplied as [station x hour] matrices
  /// covering warm-up and analysis hours.
  double tmp_mean = 17.0;
  double tmp_sd = 4.0;
  double rh_mean = 50.0;
  double rh_sd = 15.0;
  SeriesMatrix tmp_supplied;
  SeriesMatrix rh_supplied;
  /// Simulated hours discarded before the warm-up so lags start near stationarity.
  int preroll_hours = 500;
  std::uint64_t seed = 1;
};

struct SynthResult {
  HourlyPanel panel;
  ModelState truth;
  /// Outcomes on the modeling scale, before back-transformation.
  std::array<SeriesMatrix, kNumPollutants> model_scale;
  /// Set when some station's lag polynomial has a companion root on or outside
  /// the unit circle.
  bool explosive = false;
};

/// Draw from the intrinsic CAR prior with precision Q restricted to the
/// zero-sum subspace.
Eigen::VectorXd draw_car(const Eigen::MatrixXd& q, Rng& rng);

/// Largest companion-matrix eigenvalue modulus of y_t = sum_j g_j y_{t - lags_j}.
double lag_spectral_radius(const std::vector<int>& lags, const Eigen::VectorXd& gamma);

/// Simulates outcomes recursively on the modeling scale and back-transforms them.
/// Warns (and sets `explosive`) for a nonstationary lag polynomial.
SynthResult generate(const SynthSpec& spec);

/// A ready-made spec: stations scattered around central Mexico City, regions
/// assigned round-robin, warm-up starting 2016-12-25T00 so the analysis window
/// opens on 2017-01-01T00, and moderate true parameters on sqrt/log scales.
SynthSpec default_synth_spec(int n_stations, int analysis_hours, const LagConfig& lags, std::uint64_t seed);

}  // namespace aqcast
