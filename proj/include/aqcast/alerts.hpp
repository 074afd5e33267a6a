#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aqcast/forecast.hpp"
#include "aqcast/panel.hpp"

namespace aqcast {

/// Alert and air-quality-standard thresholds (ppb for ozone, ug/m3 for PM10).
struct Thresholds {
  double l1_o = 154.0;
  double l2_o = 204.0;
  double l1_pm = 214.0;
  double l2_pm = 354.0;
  double maaqs_o3_1h = 95.0;
  double maaqs_o3_8h = 70.0;
  double maaqs_pm24 = 75.0;

  void validate() const;
};

using RegionValues = std::array<double, kNumRegions>;
using RegionPhases = std::array<int, kNumRegions>;

/// Regions plus the "Any" column.
inline constexpr int kNumRegionColumns = kNumRegions + 1;
inline constexpr int kAnyColumn = kNumRegions;
inline constexpr int kNumPhases = 3;

/// Region column label, "Any" for kAnyColumn.
std::string region_column_name(int column);

/// Station-to-region map; every region must hold at least one station.
class RegionMap {
 public:
  explicit RegionMap(const std::vector<StationMeta>& stations);
  /// Maximum over each region's stations of one row of [draw x station] values.
  RegionValues max(const Eigen::Ref<const Eigen::RowVectorXd>& station_values) const;
  int n_stations() const { return static_cast<int>(region_.size()); }

 private:
  std::vector<int> region_;
};

/// Regional maxima for every draw at one hour. Matrices are [draw x region].
struct HourMaxima {
  HourStamp stamp = 0;
  Eigen::MatrixXd o3;     // Z^O
  Eigen::MatrixXd pm24;   // Z^PM
  Eigen::MatrixXd o3_8h;  // Z^O8
};

HourMaxima regional_maxima(const HourDraws& h, const RegionMap& regions);

/// Daily maxima W over a set of hourly maxima belonging to one day.
HourMaxima daily_maxima(const std::vector<HourMaxima>& hours);

/// Phase per region from regional ozone and 24-h PM10 maxima. City-wide phase 2
/// if any ozone >= L2 or two or more regions have PM >= L2; otherwise city-wide
/// phase 1 if any ozone >= L1 or two or more regions have PM >= L1. A region's
/// own PM level raises only that region, and each region takes the highest
/// applicable phase.
RegionPhases classify_phase(const RegionValues& z_o, const RegionValues& z_pm, const Thresholds& th);

/// Posterior mean and central 95% interval.
struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Type-7 sample quantile of unsorted values.
double quantile(std::vector<double> values, double p);
Interval summarize(const std::vector<double>& per_draw);

struct DailyPhaseProbability {
  std::string date;
  /// [column][phase]
  std::array<std::array<double, kNumPhases>, kNumRegionColumns> p{};
};

/// [column][phase] intervals of per-draw counts.
using PhaseCountTable = std::array<std::array<Interval, kNumPhases>, kNumRegionColumns>;

/// Consumes hourly predictive draws in time order and accumulates hourly and
/// daily phase states. Daily phases classify the daily maxima of the hours seen
/// that day.
class PhaseAccumulator {
 public:
  PhaseAccumulator(const std::vector<StationMeta>& stations, Thresholds th);

  void add(const HourDraws& h);
  /// Closes the last open day. Further adds start a new day.
  void finish();

  const std::vector<DailyPhaseProbability>& daily() const { return daily_; }
  /// Hourly phase probabilities in the same layout, keyed by timestamp.
  const std::vector<DailyPhaseProbability>& hourly() const { return hourly_; }
  PhaseCountTable hour_counts() const;
  PhaseCountTable day_counts() const;
  long n_hours() const { return n_hours_; }
  long n_days() const { return static_cast<long>(daily_.size()); }

 private:
  void close_day();
  PhaseCountTable table(const std::vector<std::array<std::array<double, kNumPhases>, kNumRegionColumns>>& c) const;

  RegionMap regions_;
  Thresholds th_;
  Eigen::Index n_draws_ = -1;
  long n_hours_ = 0;
  std::int64_t day_ = 0;
  std::vector<HourMaxima> open_day_;
  std::vector<std::array<std::array<double, kNumPhases>, kNumRegionColumns>> hour_counts_;
  std::vector<std::array<std::array<double, kNumPhases>, kNumRegionColumns>> day_counts_;
  std::vector<DailyPhaseProbability> daily_;
  std::vector<DailyPhaseProbability> hourly_;
};

/// [column] intervals of per-draw exceedance proportions.
using ExceedanceRow = std::array<Interval, kNumRegionColumns>;

struct ExceedanceTable {
  long n_hours = 0;
  long n_days = 0;
  ExceedanceRow hours;
  ExceedanceRow days;
};

/// Posterior mean exceedance proportion per profile bin and column.
struct ExceedanceProfile {
  std::vector<std::string> labels;
  std::vector<std::array<double, kNumRegionColumns>> proportion;
  std::vector<long> hours;
};

/// MAAQS exceedance accumulator. Ozone exceeds when the regional hourly max is
/// above the 1-h limit or the regional 8-h max is above the 8-h limit; PM10
/// exceeds when the regional 24-h max is above its limit. Draw m of every hour is
/// treated as one joint trajectory.
class ExceedanceAccumulator {
 public:
  ExceedanceAccumulator(const std::vector<StationMeta>& stations, Thresholds th);

  void add(const HourDraws& h);
  void finish();

  ExceedanceTable ozone() const;
  ExceedanceTable pm10() const;
  ExceedanceProfile ozone_by_month() const;
  ExceedanceProfile ozone_by_hour() const;
  ExceedanceProfile pm10_by_month() const;

 private:
  using Counts = std::array<double, kNumRegionColumns>;
  void close_day();

  RegionMap regions_;
  Thresholds th_;
  Eigen::Index n_draws_ = -1;
  long n_hours_ = 0;
  long n_days_ = 0;
  std::int64_t day_ = 0;
  bool day_open_ = false;
  // Per draw running daily state: [draw][column].
  std::vector<std::array<bool, kNumRegionColumns>> day_o3_;
  std::vector<std::array<bool, kNumRegionColumns>> day_pm_;
  std::vector<Counts> hour_o3_;
  std::vector<Counts> hour_pm_;
  std::vector<Counts> days_o3_;
  std::vector<Counts> days_pm_;
  // Profile sums of per-hour mean indicators.
  std::vector<std::string> month_labels_;
  std::vector<Counts> month_o3_;
  std::vector<Counts> month_pm_;
  std::vector<long> month_hours_;
  std::array<Counts, 24> hod_o3_{};
  std::array<long, 24> hod_hours_{};
};

void write_phase_probabilities_csv(const std::vector<DailyPhaseProbability>& rows, const std::filesystem::path& path,
                                   const char* key_column = "date");
/// Hours and days panels: phase x (regions, Any), with mean, lo, hi.
void write_phase_counts_csv(const PhaseCountTable& hours, const PhaseCountTable& days, long n_hours, long n_days,
                            const std::filesystem::path& path);
/// Mean / 2.5% / 97.5% rows over (hours: regions, Any) and (days: regions, Any).
void write_exceedance_csv(const ExceedanceTable& t, const std::string& pollutant, const std::filesystem::path& path);
void write_profile_csv(const ExceedanceProfile& p, const std::string& pollutant, const std::string& bin,
                       const std::filesystem::path& path);

}  // namespace aqcast
