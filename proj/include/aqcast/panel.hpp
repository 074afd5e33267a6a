#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqcast/transform.hpp"

namespace aqcast {

struct SpatialStructure;

enum class Region : int { CE = 0, NE = 1, NW = 2, SE = 3, SW = 4 };
inline constexpr int kNumRegions = 5;

std::string_view region_name(Region r);
Region parse_region(std::string_view text);

struct StationMeta {
  std::string id;
  std::string name;
  Region region = Region::CE;
  double lat = 0.0;
  double lon = 0.0;
};

/// Hours since 1970-01-01T00:00 on a naive (no DST) local clock.
using HourStamp = std::int64_t;

/// Accepts "YYYY-MM-DDTHH", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS" (or a space
/// instead of 'T'); minutes and seconds must be zero.
HourStamp parse_timestamp(std::string_view text);
std::string format_timestamp(HourStamp h);
/// "YYYY-MM-DD" of the calendar day containing h.
std::string format_date(HourStamp h);
int hour_of_day(HourStamp h);
/// Days since epoch of the calendar day containing h.
std::int64_t day_index(HourStamp h);
/// (year, month 1..12) of h.
std::pair<int, int> year_month(HourStamp h);

enum class Series : int { Ozone = 0, Pm10 = 1, Rh = 2, Tmp = 3 };
inline constexpr int kNumSeries = 4;
std::string_view series_name(Series s);

/// Row-major so each station's hourly series is contiguous.
using SeriesMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A cell filled by nearest-station imputation and where its value came from.
struct ImputedCell {
  Series series;
  int station;
  int hour;
  int source_station;
};

/// Hourly station panel on a common grid. Matrices are [station x hour]; missing
/// measurements are NaN. The first `warmup_hours` columns precede the analysis
/// period and only feed lags and running averages.
struct HourlyPanel {
  HourStamp start = 0;
  int n_hours = 0;
  int warmup_hours = 0;
  std::vector<StationMeta> stations;
  SeriesMatrix ozone;
  SeriesMatrix pm10;
  SeriesMatrix rh;
  SeriesMatrix tmp;
  /// Missing mask per pollutant (ozone, pm10), [station x hour].
  std::array<MaskMatrix, kNumPollutants> missing;
  std::vector<ImputedCell> imputed;

  int n_stations() const { return static_cast<int>(stations.size()); }
  int analysis_hours() const { return n_hours - warmup_hours; }
  HourStamp stamp(int hour) const { return start + hour; }

  SeriesMatrix& series(Series s);
  const SeriesMatrix& series(Series s) const;
  SeriesMatrix& pollutant(Pollutant k) { return series(static_cast<Series>(k)); }
  const SeriesMatrix& pollutant(Pollutant k) const { return series(static_cast<Series>(k)); }
  /// Contiguous hourly series of one station.
  std::span<const double> row(Series s, int station) const {
    return {series(s).row(station).data(), static_cast<std::size_t>(n_hours)};
  }

  /// Allocates an all-missing panel of the given shape.
  static HourlyPanel empty(HourStamp start, int n_hours, int warmup_hours,
                           std::vector<StationMeta> stations);
  /// Recomputes the pollutant masks from NaN positions.
  void refresh_missing();
  /// Copy restricted to hours [0, end_hour).
  HourlyPanel truncated(int end_hour) const;
};

std::vector<StationMeta> load_stations(const std::filesystem::path& station_csv);

/// Reads stations and observations and aligns them on the hourly grid spanning
/// the earliest to latest observation timestamp.
HourlyPanel load_panel(const std::filesystem::path& station_csv,
                       const std::filesystem::path& observations_csv, int warmup_hours);

/// Writes the panel in the same CSV layout load_panel reads; every grid cell is
/// written, NA for missing, with round-trip precision.
void write_panel(const HourlyPanel& panel, const std::filesystem::path& station_csv,
                 const std::filesystem::path& observations_csv);

/// Fills every missing cell of every series from the nearest station in the same
/// region observed at that hour, falling back to the nearest station anywhere.
/// Distance ties break by station id.
HourlyPanel nearest_station_impute(const HourlyPanel& panel, const SpatialStructure& spatial);

struct LagConfig {
  std::vector<int> ozone_lags;
  std::vector<int> pm10_lags;

  const std::vector<int>& lags(Pollutant k) const {
    return k == Pollutant::Ozone ? ozone_lags : pm10_lags;
  }
  int max_lag() const;
  /// Throws DataError unless both lists are strictly increasing positive offsets.
  void validate() const;
  static LagConfig symmetric(std::vector<int> lags) { return {lags, lags}; }
};

/// Lagged modeling-scale outcomes for every analysis hour.
/// value(k, i, t, j) is the transformed outcome of pollutant k at station i,
/// `lags(k)[j]` hours before analysis hour t (t counted from the first analysis hour).
class LagSet {
 public:
  LagSet(LagConfig cfg, int n_stations, int n_analysis_hours);

  double value(Pollutant k, int station, int t, int j) const;
  double& value(Pollutant k, int station, int t, int j);
  /// All lag values of one cell as a vector.
  Eigen::VectorXd vector(Pollutant k, int station, int t) const;
  const LagConfig& config() const { return cfg_; }
  int n_stations() const { return n_stations_; }
  int n_hours() const { return n_hours_; }

 private:
  std::size_t index(Pollutant k, int station, int t, int j) const;
  LagConfig cfg_;
  int n_stations_;
  int n_hours_;
  std::array<std::vector<double>, kNumPollutants> values_;
};

LagSet build_lags(const HourlyPanel& panel, const LagConfig& cfg, const TransformPair& scale);

/// Mean of series[t - window + 1 .. t]; throws DataError when history is short or
/// any value in the window is missing.
double rolling_mean(std::span<const double> series, int window, int t);

}  // namespace aqcast
