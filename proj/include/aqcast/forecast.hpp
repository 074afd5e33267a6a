#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "aqcast/model.hpp"
#include "aqcast/panel.hpp"
#include "aqcast/rng.hpp"
#include "aqcast/sampler.hpp"

namespace aqcast {

inline constexpr int kPm24Window = 24;
inline constexpr int kO3Window = 8;

/// One posterior draw of the next-hour outcomes at every station.
struct OneStepDraw {
  std::array<Eigen::VectorXd, kNumPollutants> mean;   // modeling-scale linear predictor
  std::array<Eigen::VectorXd, kNumPollutants> model;  // modeling-scale draw
  std::array<Eigen::VectorXd, kNumPollutants> conc;   // back-transformed draw
};

/// One-step-ahead predictive draw for panel hour `hour` from a single posterior
/// state. Reads the panel only at hours <= hour - 1. Throws DataError naming the
/// cell when a covariate or lagged outcome it needs is missing.
OneStepDraw one_step_predict(const ModelState& draw, const HourlyPanel& panel, int hour, const LagConfig& lags,
                             const TransformPair& transforms, Rng& rng);

/// Mean of the prediction and the 23 observed values before `hour`.
double predicted_pm24(double prediction, std::span<const double> observed, int hour);
/// Mean of the prediction and the 7 observed values before `hour`.
double predicted_o3_8h(double prediction, std::span<const double> observed, int hour);

/// All draws at one target hour. Matrices are [draw x station].
struct HourDraws {
  int hour = 0;
  HourStamp stamp = 0;
  Eigen::MatrixXd o3;
  Eigen::MatrixXd pm10;
  Eigen::MatrixXd o3_model;
  Eigen::MatrixXd pm10_model;
  Eigen::MatrixXd pm24;
  Eigen::MatrixXd o3_8h;

  Eigen::Index n_draws() const { return o3.rows(); }
};

struct PredictiveDraws {
  std::vector<StationMeta> stations;
  std::vector<HourDraws> hours;

  std::vector<HourStamp> target_hours() const;
};

using HourVisitor = std::function<void(const HourDraws&)>;

/// Predictions for every posterior state at one target hour. Noise for draw m
/// comes from the stream (seed, Predict, stamp, m).
HourDraws predict_hour(const std::vector<ModelState>& draws, const HourlyPanel& panel, int hour, const LagConfig& lags,
                       const TransformPair& transforms, std::uint64_t seed);

/// Analysis-window hours whose hour of day is in `hours_of_day`.
std::vector<int> evaluation_hours(const HourlyPanel& panel, const std::vector<int>& hours_of_day = {10, 15, 20});

/// One-step-ahead draws from a full-record chain at each target hour.
void retrospective_driver(const ChainOutput& chain, const HourlyPanel& panel, const std::vector<int>& target_hours,
                          std::uint64_t seed, const HourVisitor& visit);
PredictiveDraws retrospective_driver(const ChainOutput& chain, const HourlyPanel& panel,
                                     const std::vector<int>& target_hours, std::uint64_t seed);

/// A prospective month: fit on hours [0, train_end), predict `targets`.
struct MonthWindow {
  int year = 0;
  int month = 0;
  int train_end = 0;
  std::vector<int> targets;
};

/// Calendar months of the analysis window, skipping the first one.
std::vector<MonthWindow> prospective_schedule(const HourlyPanel& panel);

/// Fits one chain per scheduled month on data through the end of the previous
/// month and predicts every hour of the month. Month chains use seed
/// stream (cfg.seed, month index); `workers` > 1 fits months concurrently.
void prospective_driver(const HourlyPanel& panel, const LagConfig& lags, const TransformPair& transforms,
                        const ChainConfig& cfg, const PriorConfig& prior, const HourVisitor& visit, int workers = 1);

/// Columnar draw dump: hour, station, draw_index, o3_ppb, pm10_ugm3, pm24, o3_8h.
class DrawCsvWriter {
 public:
  DrawCsvWriter(const std::filesystem::path& path, std::vector<StationMeta> stations);
  ~DrawCsvWriter();
  DrawCsvWriter(const DrawCsvWriter&) = delete;
  DrawCsvWriter& operator=(const DrawCsvWriter&) = delete;

  void write(const HourDraws& h);

 private:
  std::FILE* file_ = nullptr;
  std::vector<StationMeta> stations_;
};

}  // namespace aqcast
