#include "aqcast/alerts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "aqcast/errors.hpp"

namespace aqcast {
namespace {

int level(double v, double l1, double l2) { return v >= l2 ? 2 : (v >= l1 ? 1 : 0); }

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  return out;
}

std::string month_label(HourStamp h) {
  const auto [y, m] = year_month(h);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
  return buf;
}

}  // namespace

void Thresholds::validate() const {
  for (double v : {l1_o, l2_o, l1_pm, l2_pm, maaqs_o3_1h, maaqs_o3_8h, maaqs_pm24}) {
    if (!(v > 0.0)) throw DataError("thresholds must be positive");
  }
  if (!(l1_o < l2_o)) throw DataError("ozone phase I threshold must be below phase II");
  if (!(l1_pm < l2_pm)) throw DataError("PM10 phase I threshold must be below phase II");
}

std::string region_column_name(int column) {
  if (column == kAnyColumn) return "Any";
  return std::string(region_name(static_cast<Region>(column)));
}

RegionMap::RegionMap(const std::vector<StationMeta>& stations) {
  std::array<int, kNumRegions> count{};
  for (const auto& s : stations) {
    region_.push_back(static_cast<int>(s.region));
    ++count[static_cast<int>(s.region)];
  }
  for (int j = 0; j < kNumRegions; ++j) {
    if (count[j] == 0) throw DataError("region " + region_column_name(j) + " has no stations");
  }
}

RegionValues RegionMap::max(const Eigen::Ref<const Eigen::RowVectorXd>& v) const {
  RegionValues out;
  out.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < region_.size(); ++i) {
    out[region_[i]] = std::max(out[region_[i]], v(static_cast<Eigen::Index>(i)));
  }
  return out;
}

HourMaxima regional_maxima(const HourDraws& h, const RegionMap& regions) {
  if (h.o3.cols() != regions.n_stations()) throw DataError("draws do not match the station list");
  HourMaxima out;
  out.stamp = h.stamp;
  const Eigen::Index nd = h.n_draws();
  out.o3.resize(nd, kNumRegions);
  out.pm24.resize(nd, kNumRegions);
  out.o3_8h.resize(nd, kNumRegions);
  for (Eigen::Index m = 0; m < nd; ++m) {
    const auto zo = regions.max(h.o3.row(m));
    const auto zp = regions.max(h.pm24.row(m));
    const auto z8 = regions.max(h.o3_8h.row(m));
    for (int j = 0; j < kNumRegions; ++j) {
      out.o3(m, j) = zo[j];
      out.pm24(m, j) = zp[j];
      out.o3_8h(m, j) = z8[j];
    }
  }
  return out;
}

HourMaxima daily_maxima(const std::vector<HourMaxima>& hours) {
  if (hours.empty()) throw DataError("daily maxima of an empty day");
  HourMaxima out = hours.front();
  for (std::size_t t = 1; t < hours.size(); ++t) {
    out.o3 = out.o3.cwiseMax(hours[t].o3);
    out.pm24 = out.pm24.cwiseMax(hours[t].pm24);
    out.o3_8h = out.o3_8h.cwiseMax(hours[t].o3_8h);
  }
  return out;
}

RegionPhases classify_phase(const RegionValues& z_o, const RegionValues& z_pm, const Thresholds& th) {
  int city = 0;
  int pm_l1 = 0;
  int pm_l2 = 0;
  for (int j = 0; j < kNumRegions; ++j) {
    city = std::max(city, level(z_o[j], th.l1_o, th.l2_o));
    pm_l1 += z_pm[j] >= th.l1_pm;
    pm_l2 += z_pm[j] >= th.l2_pm;
  }
  if (pm_l2 >= 2) city = 2;
  else if (pm_l1 >= 2) city = std::max(city, 1);
  RegionPhases out;
  for (int j = 0; j < kNumRegions; ++j) out[j] = std::max(city, level(z_pm[j], th.l1_pm, th.l2_pm));
  return out;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw DataError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval summarize(const std::vector<double>& x) {
  if (x.empty()) throw DataError("summary of zero draws");
  double sum = 0.0;
  for (double v : x) sum += v;
  return {sum / static_cast<double>(x.size()), quantile(x, 0.025), quantile(x, 0.975)};
}

// ---------------------------------------------------------------- phases

PhaseAccumulator::PhaseAccumulator(const std::vector<StationMeta>& stations, Thresholds th)
    : regions_(stations), th_(th) {
  th_.validate();
}

void PhaseAccumulator::add(const HourDraws& h) {
  if (h.n_draws() == 0) throw DataError("phase probabilities need at least one draw");
  if (n_draws_ < 0) {
    n_draws_ = h.n_draws();
    hour_counts_.assign(static_cast<std::size_t>(n_draws_), {});
    day_counts_.assign(static_cast<std::size_t>(n_draws_), {});
  } else if (h.n_draws() != n_draws_) {
    throw DataError("every hour must carry the same number of draws");
  }
  const std::int64_t day = day_index(h.stamp);
  if (!open_day_.empty() && day != day_) close_day();
  day_ = day;
  HourMaxima z = regional_maxima(h, regions_);
  DailyPhaseProbability hp;
  hp.date = format_timestamp(h.stamp);
  for (Eigen::Index m = 0; m < n_draws_; ++m) {
    RegionValues zo;
    RegionValues zp;
    for (int j = 0; j < kNumRegions; ++j) {
      zo[j] = z.o3(m, j);
      zp[j] = z.pm24(m, j);
    }
    const auto s = classify_phase(zo, zp, th_);
    auto& c = hour_counts_[static_cast<std::size_t>(m)];
    int any = 0;
    for (int j = 0; j < kNumRegions; ++j) {
      c[j][s[j]] += 1.0;
      hp.p[j][s[j]] += 1.0;
      any = std::max(any, s[j]);
    }
    c[kAnyColumn][any] += 1.0;
    hp.p[kAnyColumn][any] += 1.0;
  }
  for (auto& col : hp.p) {
    for (auto& v : col) v /= static_cast<double>(n_draws_);
  }
  hourly_.push_back(hp);
  open_day_.push_back(std::move(z));
  ++n_hours_;
}

void PhaseAccumulator::close_day() {
  if (open_day_.empty()) return;
  const HourMaxima w = daily_maxima(open_day_);
  DailyPhaseProbability dp;
  dp.date = format_date(open_day_.front().stamp);
  for (Eigen::Index m = 0; m < n_draws_; ++m) {
    RegionValues wo;
    RegionValues wp;
    for (int j = 0; j < kNumRegions; ++j) {
      wo[j] = w.o3(m, j);
      wp[j] = w.pm24(m, j);
    }
    const auto s = classify_phase(wo, wp, th_);
    auto& c = day_counts_[static_cast<std::size_t>(m)];
    int any = 0;
    for (int j = 0; j < kNumRegions; ++j) {
      c[j][s[j]] += 1.0;
      dp.p[j][s[j]] += 1.0;
      any = std::max(any, s[j]);
    }
    c[kAnyColumn][any] += 1.0;
    dp.p[kAnyColumn][any] += 1.0;
  }
  for (auto& col : dp.p) {
    for (auto& v : col) v /= static_cast<double>(n_draws_);
  }
  daily_.push_back(dp);
  open_day_.clear();
}

void PhaseAccumulator::finish() { close_day(); }

PhaseCountTable PhaseAccumulator::table(
    const std::vector<std::array<std::array<double, kNumPhases>, kNumRegionColumns>>& counts) const {
  if (counts.empty()) throw DataError("phase counts need at least one draw");
  PhaseCountTable out;
  std::vector<double> x(counts.size());
  for (int c = 0; c < kNumRegionColumns; ++c) {
    for (int k = 0; k < kNumPhases; ++k) {
      for (std::size_t m = 0; m < counts.size(); ++m) x[m] = counts[m][c][k];
      out[c][k] = summarize(x);
    }
  }
  return out;
}

PhaseCountTable PhaseAccumulator::hour_counts() const { return table(hour_counts_); }
PhaseCountTable PhaseAccumulator::day_counts() const { return table(day_counts_); }

// ---------------------------------------------------------------- exceedances

ExceedanceAccumulator::ExceedanceAccumulator(const std::vector<StationMeta>& stations, Thresholds th)
    : regions_(stations), th_(th) {
  th_.validate();
}

void ExceedanceAccumulator::add(const HourDraws& h) {
  if (h.n_draws() == 0) throw DataError("exceedance proportions need at least one draw");
  if (n_draws_ < 0) {
    n_draws_ = h.n_draws();
    const auto nd = static_cast<std::size_t>(n_draws_);
    day_o3_.assign(nd, {});
    day_pm_.assign(nd, {});
    hour_o3_.assign(nd, {});
    hour_pm_.assign(nd, {});
    days_o3_.assign(nd, {});
    days_pm_.assign(nd, {});
  } else if (h.n_draws() != n_draws_) {
    throw DataError("every hour must carry the same number of draws");
  }
  const std::int64_t day = day_index(h.stamp);
  if (day_open_ && day != day_) close_day();
  day_ = day;
  day_open_ = true;

  const std::string label = month_label(h.stamp);
  if (month_labels_.empty() || month_labels_.back() != label) {
    month_labels_.push_back(label);
    month_o3_.push_back({});
    month_pm_.push_back({});
    month_hours_.push_back(0);
  }
  const int hod = hour_of_day(h.stamp);

  const HourMaxima z = regional_maxima(h, regions_);
  Counts mean_o3{};
  Counts mean_pm{};
  for (Eigen::Index m = 0; m < n_draws_; ++m) {
    const auto md = static_cast<std::size_t>(m);
    bool any_o3 = false;
    bool any_pm = false;
    for (int j = 0; j < kNumRegions; ++j) {
      const bool o3 = z.o3(m, j) > th_.maaqs_o3_1h || z.o3_8h(m, j) > th_.maaqs_o3_8h;
      const bool pm = z.pm24(m, j) > th_.maaqs_pm24;
      any_o3 = any_o3 || o3;
      any_pm = any_pm || pm;
      hour_o3_[md][j] += o3;
      hour_pm_[md][j] += pm;
      mean_o3[j] += o3;
      mean_pm[j] += pm;
      day_o3_[md][j] = day_o3_[md][j] || o3;
      day_pm_[md][j] = day_pm_[md][j] || pm;
    }
    hour_o3_[md][kAnyColumn] += any_o3;
    hour_pm_[md][kAnyColumn] += any_pm;
    mean_o3[kAnyColumn] += any_o3;
    mean_pm[kAnyColumn] += any_pm;
    day_o3_[md][kAnyColumn] = day_o3_[md][kAnyColumn] || any_o3;
    day_pm_[md][kAnyColumn] = day_pm_[md][kAnyColumn] || any_pm;
  }
  for (int c = 0; c < kNumRegionColumns; ++c) {
    const double po = mean_o3[c] / static_cast<double>(n_draws_);
    const double pp = mean_pm[c] / static_cast<double>(n_draws_);
    month_o3_.back()[c] += po;
    month_pm_.back()[c] += pp;
    hod_o3_[hod][c] += po;
  }
  ++month_hours_.back();
  ++hod_hours_[hod];
  ++n_hours_;
}

void ExceedanceAccumulator::close_day() {
  if (!day_open_) return;
  for (std::size_t m = 0; m < day_o3_.size(); ++m) {
    for (int c = 0; c < kNumRegionColumns; ++c) {
      days_o3_[m][c] += day_o3_[m][c];
      days_pm_[m][c] += day_pm_[m][c];
    }
    day_o3_[m] = {};
    day_pm_[m] = {};
  }
  ++n_days_;
  day_open_ = false;
}

void ExceedanceAccumulator::finish() { close_day(); }

namespace {

ExceedanceRow proportions(const std::vector<std::array<double, kNumRegionColumns>>& counts, long total) {
  if (counts.empty() || total <= 0) throw DataError("exceedance summary needs draws and hours");
  ExceedanceRow row;
  std::vector<double> x(counts.size());
  for (int c = 0; c < kNumRegionColumns; ++c) {
    for (std::size_t m = 0; m < counts.size(); ++m) x[m] = counts[m][c] / static_cast<double>(total);
    row[c] = summarize(x);
  }
  return row;
}

}  // namespace

ExceedanceTable ExceedanceAccumulator::ozone() const {
  return {n_hours_, n_days_, proportions(hour_o3_, n_hours_), proportions(days_o3_, n_days_)};
}

ExceedanceTable ExceedanceAccumulator::pm10() const {
  return {n_hours_, n_days_, proportions(hour_pm_, n_hours_), proportions(days_pm_, n_days_)};
}

ExceedanceProfile ExceedanceAccumulator::ozone_by_month() const {
  ExceedanceProfile p;
  for (std::size_t b = 0; b < month_labels_.size(); ++b) {
    p.labels.push_back(month_labels_[b]);
    Counts c = month_o3_[b];
    for (auto& v : c) v /= static_cast<double>(month_hours_[b]);
    p.proportion.push_back(c);
    p.hours.push_back(month_hours_[b]);
  }
  return p;
}

ExceedanceProfile ExceedanceAccumulator::pm10_by_month() const {
  ExceedanceProfile p;
  for (std::size_t b = 0; b < month_labels_.size(); ++b) {
    p.labels.push_back(month_labels_[b]);
    Counts c = month_pm_[b];
    for (auto& v : c) v /= static_cast<double>(month_hours_[b]);
    p.proportion.push_back(c);
    p.hours.push_back(month_hours_[b]);
  }
  return p;
}

ExceedanceProfile ExceedanceAccumulator::ozone_by_hour() const {
  ExceedanceProfile p;
  for (int q = 0; q < 24; ++q) {
    if (hod_hours_[q] == 0) continue;
    p.labels.push_back(std::to_string(q));
    Counts c = hod_o3_[q];
    for (auto& v : c) v /= static_cast<double>(hod_hours_[q]);
    p.proportion.push_back(c);
    p.hours.push_back(hod_hours_[q]);
  }
  return p;
}

// ---------------------------------------------------------------- CSV

void write_phase_probabilities_csv(const std::vector<DailyPhaseProbability>& rows, const std::filesystem::path& path,
                                   const char* key_column) {
  auto out = open_csv(path);
  out << key_column << ",region,P0,P1,P2\n";
  for (const auto& r : rows) {
    for (int c = 0; c < kNumRegionColumns; ++c) {
      out << r.date << ',' << region_column_name(c) << ',' << r.p[c][0] << ',' << r.p[c][1] << ',' << r.p[c][2]
          << '\n';
    }
  }
}

void write_phase_counts_csv(const PhaseCountTable& hours, const PhaseCountTable& days, long n_hours, long n_days,
                            const std::filesystem::path& path) {
  auto out = open_csv(path);
  static const char* phase_names[] = {"No Phase", "Phase I", "Phase II"};
  out << "panel,total,phase,statistic";
  for (int c = 0; c < kNumRegionColumns; ++c) out << ',' << region_column_name(c);
  out << '\n';
  const auto panel = [&](const char* name, long total, const PhaseCountTable& t) {
    for (int k = 0; k < kNumPhases; ++k) {
      for (const char* stat : {"mean", "2.5%", "97.5%"}) {
        out << name << ',' << total << ',' << phase_names[k] << ',' << stat;
        for (int c = 0; c < kNumRegionColumns; ++c) {
          const Interval& iv = t[c][k];
          const double v = stat[0] == 'm' ? iv.mean : (stat[0] == '2' ? iv.lo : iv.hi);
          out << ',' << v;
        }
        out << '\n';
      }
    }
  };
  panel("hours", n_hours, hours);
  panel("days", n_days, days);
}

void write_exceedance_csv(const ExceedanceTable& t, const std::string& pollutant, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << pollutant;
  for (const char* panel : {"hours", "days"}) {
    for (int c = 0; c < kNumRegionColumns; ++c) out << ',' << panel << '_' << region_column_name(c);
  }
  out << '\n';
  for (const char* stat : {"Mean", "2.5%", "97.5%"}) {
    out << stat;
    for (const ExceedanceRow* row : {&t.hours, &t.days}) {
      for (int c = 0; c < kNumRegionColumns; ++c) {
        const Interval& iv = (*row)[c];
        out << ',' << (stat[0] == 'M' ? iv.mean : (stat[0] == '2' ? iv.lo : iv.hi));
      }
    }
    out << '\n';
  }
  out << "total," << t.n_hours << ',' << t.n_days << '\n';
}

void write_profile_csv(const ExceedanceProfile& p, const std::string& pollutant, const std::string& bin,
                       const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "pollutant," << bin << ",hours";
  for (int c = 0; c < kNumRegionColumns; ++c) out << ',' << region_column_name(c);
  out << '\n';
  for (std::size_t b = 0; b < p.labels.size(); ++b) {
    out << pollutant << ',' << p.labels[b] << ',' << p.hours[b];
    for (double v : p.proportion[b]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace aqcast
