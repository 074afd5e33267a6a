#include "aqcast/panel.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "aqcast/errors.hpp"
#include "aqcast/spatial.hpp"

namespace aqcast {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.emplace_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Header-indexed CSV table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  int column(std::initializer_list<std::string_view> names, const std::string& file) const {
    for (auto name : names) {
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) return static_cast<int>(c);
      }
    }
    throw DataError(file + ": missing column '" + std::string(*names.begin()) + "'");
  }
};

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw DataError(path.string() + ": empty file");
  return t;
}

double parse_double(std::string_view text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError(where + ": not a number: '" + std::string(text) + "'");
  return v;
}

double parse_measurement(std::string_view text, const std::string& where) {
  if (text == "NA" || text.empty()) return kNaN;
  return parse_double(text, where);
}

int parse_int(std::string_view text, std::string_view what) {
  int v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("bad " + std::string(what) + " in timestamp");
  return v;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view region_name(Region r) {
  switch (r) {
    case Region::CE: return "CE";
    case Region::NE: return "NE";
    case Region::NW: return "NW";
    case Region::SE: return "SE";
    case Region::SW: return "SW";
  }
  return "?";
}

Region parse_region(std::string_view text) {
  for (int r = 0; r < kNumRegions; ++r) {
    if (region_name(static_cast<Region>(r)) == text) return static_cast<Region>(r);
  }
  throw DataError("unknown region '" + std::string(text) + "' (expected NE, NW, CE, SE or SW)");
}

std::string_view series_name(Series s) {
  switch (s) {
    case Series::Ozone: return "ozone";
    case Series::Pm10: return "pm10";
    case Series::Rh: return "rh";
    case Series::Tmp: return "tmp";
  }
  return "?";
}

HourStamp parse_timestamp(std::string_view text) {
  text = trim(text);
  // YYYY-MM-DD[T ]HH[:MM[:SS]]
  if (text.size() < 13 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ')) {
    throw DataError("bad timestamp '" + std::string(text) + "'");
  }
  try {
    const int y = parse_int(text.substr(0, 4), "year");
    const int mo = parse_int(text.substr(5, 2), "month");
    const int d = parse_int(text.substr(8, 2), "day");
    const int h = parse_int(text.substr(11, 2), "hour");
    int minute = 0;
    int second = 0;
    if (text.size() >= 16) {
      if (text[13] != ':') throw DataError("bad time separator");
      minute = parse_int(text.substr(14, 2), "minute");
    }
    if (text.size() >= 19) {
      if (text[16] != ':') throw DataError("bad time separator");
      second = parse_int(text.substr(17, 2), "second");
    }
    if (text.size() != 13 && text.size() != 16 && text.size() != 19) throw DataError("trailing characters");
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23) throw DataError("date out of range");
    if (minute != 0 || second != 0) throw DataError("timestamp is not hour-aligned");
    return static_cast<HourStamp>(sys_days{ymd}.time_since_epoch().count()) * 24 + h;
  } catch (const DataError& e) {
    throw DataError("bad timestamp '" + std::string(text) + "': " + e.what());
  }
}

std::int64_t day_index(HourStamp h) {
  return (h >= 0) ? h / 24 : -((-h + 23) / 24);
}

int hour_of_day(HourStamp h) { return static_cast<int>(h - day_index(h) * 24); }

std::string format_date(HourStamp h) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_index(h)}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(HourStamp h) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:00", hour_of_day(h));
  return format_date(h) + buf;
}

std::pair<int, int> year_month(HourStamp h) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_index(h)}}};
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

SeriesMatrix& HourlyPanel::series(Series s) {
  return const_cast<SeriesMatrix&>(static_cast<const HourlyPanel&>(*this).series(s));
}

const SeriesMatrix& HourlyPanel::series(Series s) const {
  switch (s) {
    case Series::Ozone: return ozone;
    case Series::Pm10: return pm10;
    case Series::Rh: return rh;
    case Series::Tmp: return tmp;
  }
  throw DataError("unknown series");
}

HourlyPanel HourlyPanel::empty(HourStamp start, int n_hours, int warmup_hours,
                               std::vector<StationMeta> stations) {
  if (n_hours <= 0) throw DataError("panel needs at least one hour");
  if (warmup_hours < 0 || warmup_hours >= n_hours) {
    throw DataError("warm-up of " + std::to_string(warmup_hours) + " hours leaves no analysis hours in a " +
                    std::to_string(n_hours) + "-hour panel");
  }
  HourlyPanel p;
  p.start = start;
  p.n_hours = n_hours;
  p.warmup_hours = warmup_hours;
  p.stations = std::move(stations);
  const auto ns = static_cast<Eigen::Index>(p.stations.size());
  for (int s = 0; s < kNumSeries; ++s) p.series(static_cast<Series>(s)) = SeriesMatrix::Constant(ns, n_hours, kNaN);
  for (auto& m : p.missing) m = MaskMatrix::Constant(ns, n_hours, true);
  return p;
}

void HourlyPanel::refresh_missing() {
  for (int k = 0; k < kNumPollutants; ++k) {
    missing[k] = pollutant(static_cast<Pollutant>(k)).array().isNaN();
  }
}

HourlyPanel HourlyPanel::truncated(int end_hour) const {
  if (end_hour <= warmup_hours || end_hour > n_hours) throw DataError("truncation leaves no analysis hours");
  HourlyPanel p = *this;
  p.n_hours = end_hour;
  for (int s = 0; s < kNumSeries; ++s) {
    auto& m = p.series(static_cast<Series>(s));
    m = SeriesMatrix(m.leftCols(end_hour));
  }
  for (auto& m : p.missing) m = MaskMatrix(m.leftCols(end_hour));
  std::erase_if(p.imputed, [end_hour](const ImputedCell& c) { return c.hour >= end_hour; });
  return p;
}

std::vector<StationMeta> load_stations(const std::filesystem::path& station_csv) {
  const CsvTable t = read_csv(station_csv);
  const std::string file = station_csv.string();
  const int c_id = t.column({"id"}, file);
  const int c_name = t.column({"name"}, file);
  const int c_region = t.column({"region"}, file);
  const int c_lat = t.column({"lat"}, file);
  const int c_lon = t.column({"lon"}, file);
  std::vector<StationMeta> out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = file + ":" + std::to_string(t.line_numbers[r]);
    StationMeta s;
    s.id = row[c_id];
    s.name = row[c_name];
    s.region = parse_region(row[c_region]);
    s.lat = parse_double(row[c_lat], where);
    s.lon = parse_double(row[c_lon], where);
    if (std::abs(s.lat) > 90.0 || std::abs(s.lon) > 180.0) throw DataError(where + ": coordinates out of range");
    if (!ids.insert(s.id).second) throw DataError(where + ": duplicate station id '" + s.id + "'");
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError(file + ": no stations");
  return out;
}

HourlyPanel load_panel(const std::filesystem::path& station_csv,
                       const std::filesystem::path& observations_csv, int warmup_hours) {
  std::vector<StationMeta> stations = load_stations(station_csv);
  std::map<std::string, int> station_index;
  for (std::size_t i = 0; i < stations.size(); ++i) station_index[stations[i].id] = static_cast<int>(i);

  const CsvTable t = read_csv(observations_csv);
  const std::string file = observations_csv.string();
  if (t.rows.empty()) throw DataError(file + ": no observations");
  const int c_station = t.column({"station_id"}, file);
  const int c_time = t.column({"timestamp"}, file);
  const std::array<int, kNumSeries> c_series = {
      t.column({"ozone_ppb", "ozone"}, file), t.column({"pm10_ugm3", "pm10"}, file),
      t.column({"rh_pct", "rh"}, file), t.column({"tmp_c", "tmp"}, file)};

  struct Record {
    int station;
    HourStamp stamp;
    std::array<double, kNumSeries> values;
  };
  std::vector<Record> records;
  records.reserve(t.rows.size());
  std::set<std::pair<int, HourStamp>> seen;
  std::vector<HourStamp> last_stamp(stations.size(), std::numeric_limits<HourStamp>::min());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = file + ":" + std::to_string(t.line_numbers[r]);
    auto it = station_index.find(row[c_station]);
    if (it == station_index.end()) throw DataError(where + ": unknown station_id '" + row[c_station] + "'");
    Record rec{it->second, parse_timestamp(row[c_time]), {}};
    if (!seen.insert({rec.station, rec.stamp}).second) {
      throw DataError(where + ": duplicate observation for station " + row[c_station] + " at " + row[c_time]);
    }
    if (rec.stamp < last_stamp[rec.station]) {
      throw DataError(where + ": timestamps for station " + row[c_station] + " are not increasing");
    }
    last_stamp[rec.station] = rec.stamp;
    for (int s = 0; s < kNumSeries; ++s) {
      rec.values[s] = parse_measurement(row[c_series[s]], where);
      if (s < kNumPollutants && rec.values[s] < 0.0) throw DataError(where + ": negative pollutant value");
    }
    records.push_back(rec);
  }

  const auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                            [](const Record& a, const Record& b) { return a.stamp < b.stamp; });
  const HourStamp start = lo->stamp;
  const int n_hours = static_cast<int>(hi->stamp - start + 1);
  HourlyPanel panel = HourlyPanel::empty(start, n_hours, warmup_hours, std::move(stations));
  for (const auto& rec : records) {
    const int h = static_cast<int>(rec.stamp - start);
    for (int s = 0; s < kNumSeries; ++s) panel.series(static_cast<Series>(s))(rec.station, h) = rec.values[s];
  }
  panel.refresh_missing();
  return panel;
}

void write_panel(const HourlyPanel& panel, const std::filesystem::path& station_csv,
                 const std::filesystem::path& observations_csv) {
  {
    std::ofstream out(station_csv);
    if (!out) throw DataError("cannot write " + station_csv.string());
    out << "id,name,region,lat,lon\n";
    for (const auto& s : panel.stations) {
      out << s.id << ',' << s.name << ',' << region_name(s.region) << ',' << format_number(s.lat) << ','
          << format_number(s.lon) << '\n';
    }
  }
  std::ofstream out(observations_csv);
  if (!out) throw DataError("cannot write " + observations_csv.string());
  out << "station_id,timestamp,ozone_ppb,pm10_ugm3,rh_pct,tmp_c\n";
  for (int i = 0; i < panel.n_stations(); ++i) {
    for (int h = 0; h < panel.n_hours; ++h) {
      out << panel.stations[i].id << ',' << format_timestamp(panel.stamp(h));
      for (int s = 0; s < kNumSeries; ++s) out << ',' << format_number(panel.series(static_cast<Series>(s))(i, h));
      out << '\n';
    }
  }
}

HourlyPanel nearest_station_impute(const HourlyPanel& panel, const SpatialStructure& spatial) {
  const int ns = panel.n_stations();
  if (spatial.n_stations() != ns) throw DataError("spatial structure does not match panel stations");
  // Donor order per station: same region first, then everyone else; each group by
  // (distance, id).
  std::vector<std::vector<int>> donors(ns);
  for (int i = 0; i < ns; ++i) {
    std::vector<int> same;
    std::vector<int> other;
    for (int j = 0; j < ns; ++j) {
      if (j == i) continue;
      (panel.stations[j].region == panel.stations[i].region ? same : other).push_back(j);
    }
    auto by_distance = [&](int a, int b) {
      const double da = spatial.dist(i, a);
      const double db = spatial.dist(i, b);
      if (da != db) return da < db;
      return panel.stations[a].id < panel.stations[b].id;
    };
    std::sort(same.begin(), same.end(), by_distance);
    std::sort(other.begin(), other.end(), by_distance);
    donors[i] = std::move(same);
    donors[i].insert(donors[i].end(), other.begin(), other.end());
  }

  HourlyPanel out = panel;
  for (int s = 0; s < kNumSeries; ++s) {
    const auto series = static_cast<Series>(s);
    const SeriesMatrix& src = panel.series(series);
    SeriesMatrix& dst = out.series(series);
    for (int h = 0; h < panel.n_hours; ++h) {
      for (int i = 0; i < ns; ++i) {
        if (!std::isnan(src(i, h))) continue;
        int source = -1;
        for (int j : donors[i]) {
          if (!std::isnan(src(j, h))) {
            source = j;
            break;
          }
        }
        if (source < 0) {
          throw DataError("cannot impute " + std::string(series_name(series)) + ": every station is missing at " +
                          format_timestamp(panel.stamp(h)));
        }
        dst(i, h) = src(source, h);
        out.imputed.push_back({series, i, h, source});
      }
    }
  }
  out.refresh_missing();
  return out;
}

int LagConfig::max_lag() const {
  int m = 0;
  for (int l : ozone_lags) m = std::max(m, l);
  for (int l : pm10_lags) m = std::max(m, l);
  return m;
}

void LagConfig::validate() const {
  for (const auto* lags : {&ozone_lags, &pm10_lags}) {
    for (std::size_t j = 0; j < lags->size(); ++j) {
      if ((*lags)[j] <= 0) throw DataError("lag offsets must be positive");
      if (j > 0 && (*lags)[j] <= (*lags)[j - 1]) throw DataError("lag offsets must be strictly increasing");
    }
  }
}

LagSet::LagSet(LagConfig cfg, int n_stations, int n_analysis_hours)
    : cfg_(std::move(cfg)), n_stations_(n_stations), n_hours_(n_analysis_hours) {
  for (int k = 0; k < kNumPollutants; ++k) {
    values_[k].assign(static_cast<std::size_t>(n_stations) * n_analysis_hours *
                          cfg_.lags(static_cast<Pollutant>(k)).size(),
                      0.0);
  }
}

std::size_t LagSet::index(Pollutant k, int station, int t, int j) const {
  const std::size_t nl = cfg_.lags(k).size();
  return (static_cast<std::size_t>(station) * n_hours_ + t) * nl + j;
}

double LagSet::value(Pollutant k, int station, int t, int j) const {
  return values_[static_cast<int>(k)][index(k, station, t, j)];
}

double& LagSet::value(Pollutant k, int station, int t, int j) {
  return values_[static_cast<int>(k)][index(k, station, t, j)];
}

Eigen::VectorXd LagSet::vector(Pollutant k, int station, int t) const {
  const auto nl = static_cast<int>(cfg_.lags(k).size());
  Eigen::VectorXd v(nl);
  for (int j = 0; j < nl; ++j) v(j) = value(k, station, t, j);
  return v;
}

LagSet build_lags(const HourlyPanel& panel, const LagConfig& cfg, const TransformPair& scale) {
  cfg.validate();
  if (panel.warmup_hours < cfg.max_lag()) {
    throw DataError("lags need " + std::to_string(cfg.max_lag()) + " warm-up hours, panel has " +
                    std::to_string(panel.warmup_hours));
  }
  LagSet out(cfg, panel.n_stations(), panel.analysis_hours());
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto pk = static_cast<Pollutant>(k);
    const auto& lags = cfg.lags(pk);
    const SeriesMatrix& y = panel.pollutant(pk);
    for (int i = 0; i < panel.n_stations(); ++i) {
      for (int t = 0; t < panel.analysis_hours(); ++t) {
        const int hour = panel.warmup_hours + t;
        for (std::size_t j = 0; j < lags.size(); ++j) {
          out.value(pk, i, t, static_cast<int>(j)) = forward(y(i, hour - lags[j]), pk, scale);
        }
      }
    }
  }
  return out;
}

double rolling_mean(std::span<const double> series, int window, int t) {
  if (window < 1) throw DataError("rolling window must be at least 1");
  if (t < 0 || static_cast<std::size_t>(t) >= series.size()) throw DataError("rolling_mean: hour out of range");
  if (t - window + 1 < 0) {
    throw DataError("rolling_mean: window of " + std::to_string(window) + " needs " + std::to_string(window - 1) +
                    " prior hours, only " + std::to_string(t) + " available");
  }
  double sum = 0.0;
  for (int h = t - window + 1; h <= t; ++h) {
    if (std::isnan(series[h])) throw DataError("rolling_mean: missing value inside the window");
    sum += series[h];
  }
  return sum / window;
}

}  // namespace aqcast
