#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqcast/model.hpp"
#include "aqcast/panel.hpp"
#include "aqcast/sampler.hpp"

namespace aqcast {

/// Empirical CRPS of samples against y, via the sorted form of
/// (1/M) sum |x_j - y| - (1/2M^2) sum_j sum_k |x_j - x_k|.
double crps_ecdf(std::span<const double> samples, double y);

/// Per-coordinate centering and scaling applied to samples and outcome.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  static Standardizer identity(Eigen::Index dim);
  /// Mean and sample standard deviation of each column of `values` [n x dim].
  static Standardizer from(const Eigen::MatrixXd& values);
};

/// Energy score (beta = 1) of samples [M x dim] against y on standardized
/// coordinates. Throws DataError when any sd is not positive.
double energy_score(const Eigen::MatrixXd& samples, const Eigen::VectorXd& y, const Standardizer& z);

struct PointScore {
  double sq_error = 0.0;
  double abs_error = 0.0;
  bool covered = false;
};

/// Errors of the predictive mean and whether y lies in the central 90% interval
/// (type-7 5th and 95th percentiles).
PointScore point_scores(std::span<const double> samples, double y);

/// (station, hour) pairs in the analysis window where both pollutants are
/// observed; round(fraction * eligible) of them are drawn by a seeded shuffle.
/// Returned sorted by (hour, station).
std::vector<std::pair<int, int>> select_holdout(const HourlyPanel& panel, double fraction, std::uint64_t seed);

/// Copy of the panel with both pollutants removed at the held-out pairs.
HourlyPanel mask_holdout(const HourlyPanel& panel, const std::vector<std::pair<int, int>>& cells);

struct Candidate {
  std::string name;
  LagConfig lags;
};

/// The six lag sets compared in the lag-selection experiment.
std::vector<Candidate> default_candidates();
/// Parses "1,2,24" (applied to both pollutants) or "o3:1,2;pm10:1,24".
Candidate parse_candidate(const std::string& text);

struct ScoreRow {
  std::string name;
  std::string lags;
  double es = 0.0;
  double crps_o3 = 0.0;
  double rmse_o3 = 0.0;
  double mae_o3 = 0.0;
  double cov90_o3 = 0.0;
  double crps_pm = 0.0;
  double rmse_pm = 0.0;
  double mae_pm = 0.0;
  double cov90_pm = 0.0;
  long n_holdout = 0;
};

/// Scores of held-out predictions (posterior draws of the imputed cells, back on
/// the concentration scale) against the true values.
ScoreRow score_holdout(const ChainOutput& chain, const HourlyPanel& truth,
                       const std::vector<std::pair<int, int>>& cells);

struct HoldoutConfig {
  double fraction = 0.1;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// One shared hold-out, one chain per candidate (same chain seed for all),
/// scored on the concentration scale.
std::vector<ScoreRow> holdout_experiment(const HourlyPanel& panel, const std::vector<Candidate>& candidates,
                                         const TransformPair& transforms, const ChainConfig& chain,
                                         const PriorConfig& prior, const HoldoutConfig& cfg);

/// Index of the row with the lowest energy score.
std::size_t best_by_es(const std::vector<ScoreRow>& rows);

/// Columns: model, lags, ES, O3 CRPS/RMSE/MAE/Cov, PM10 CRPS/RMSE/MAE/Cov, n_holdout.
void write_score_csv(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);

}  // namespace aqcast
