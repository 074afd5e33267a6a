#include "aqcast/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

#include "aqcast/errors.hpp"

namespace aqcast {
namespace {

[[noreturn]] void missing_cell(const HourlyPanel& panel, Series s, int station, int hour, const char* why) {
  throw DataError(std::string("missing ") + std::string(series_name(s)) + " at station " + panel.stations[station].id +
                  ", " + format_timestamp(panel.stamp(hour)) + " (" + why + ")");
}

double window_mean(double prediction, std::span<const double> observed, int hour, int window) {
  const int need = window - 1;
  if (hour < need || static_cast<std::size_t>(hour) > observed.size()) {
    throw DataError("rolling average at hour " + std::to_string(hour) + " needs " + std::to_string(need) +
                    " prior observations");
  }
  double sum = prediction;
  for (int h = hour - need; h < hour; ++h) {
    if (std::isnan(observed[h])) throw DataError("rolling average window contains a missing observation");
    sum += observed[h];
  }
  return sum / window;
}

}  // namespace

OneStepDraw one_step_predict(const ModelState& draw, const HourlyPanel& panel, int hour, const LagConfig& lags,
                             const TransformPair& transforms, Rng& rng) {
  const int ns = static_cast<int>(panel.stations.size());
  if (hour < 1 || hour >= panel.n_hours) throw DataError("prediction hour outside the panel");
  if (hour < lags.max_lag()) throw DataError("prediction hour precedes the deepest lag");
  if (draw.n_stations() != ns) throw DataError("posterior state does not match the panel's stations");
  const int hod = hour_of_day(panel.stamp(hour));
  OneStepDraw out;
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    const auto& kl = lags.lags(kp);
    const auto& y = panel.pollutant(kp);
    out.mean[k].resize(ns);
    out.model[k].resize(ns);
    out.conc[k].resize(ns);
    const double sd = std::sqrt(draw.error_variance(kp, hod));
    for (int i = 0; i < ns; ++i) {
      const double tmp = panel.tmp(i, hour - 1);
      const double rh = panel.rh(i, hour - 1);
      if (std::isnan(tmp)) missing_cell(panel, Series::Tmp, i, hour - 1, "covariate");
      if (std::isnan(rh)) missing_cell(panel, Series::Rh, i, hour - 1, "covariate");
      const auto& b = draw.beta[k];
      double m = b(i, 0) + b(i, 1) * tmp + b(i, 2) * rh;
      for (std::size_t j = 0; j < kl.size(); ++j) {
        const double v = y(i, hour - kl[j]);
        if (std::isnan(v)) missing_cell(panel, static_cast<Series>(k), i, hour - kl[j], "lagged outcome");
        m += draw.gamma[k](i, static_cast<Eigen::Index>(j)) * forward(v, kp, transforms);
      }
      m += draw.psi(kp, i);
      out.mean[k](i) = m;
      out.model[k](i) = m + sd * rng.normal();
      out.conc[k](i) = inverse(out.model[k](i), kp, transforms);
    }
  }
  return out;
}

double predicted_pm24(double prediction, std::span<const double> observed, int hour) {
  return window_mean(prediction, observed, hour, kPm24Window);
}

double predicted_o3_8h(double prediction, std::span<const double> observed, int hour) {
  return window_mean(prediction, observed, hour, kO3Window);
}

std::vector<HourStamp> PredictiveDraws::target_hours() const {
  std::vector<HourStamp> out;
  out.reserve(hours.size());
  for (const auto& h : hours) out.push_back(h.stamp);
  return out;
}

HourDraws predict_hour(const std::vector<ModelState>& draws, const HourlyPanel& panel, int hour, const LagConfig& lags,
                       const TransformPair& transforms, std::uint64_t seed) {
  const auto ns = static_cast<Eigen::Index>(panel.stations.size());
  const auto nd = static_cast<Eigen::Index>(draws.size());
  HourDraws out;
  out.hour = hour;
  out.stamp = panel.stamp(hour);
  for (auto* m : {&out.o3, &out.pm10, &out.o3_model, &out.pm10_model, &out.pm24, &out.o3_8h}) m->resize(nd, ns);
  for (Eigen::Index m = 0; m < nd; ++m) {
    Rng rng = Rng::stream(seed, {key(StreamId::Predict), static_cast<std::uint64_t>(out.stamp),
                                 static_cast<std::uint64_t>(m)});
    const auto d = one_step_predict(draws[static_cast<std::size_t>(m)], panel, hour, lags, transforms, rng);
    for (Eigen::Index i = 0; i < ns; ++i) {
      const int st = static_cast<int>(i);
      out.o3(m, i) = d.conc[0](i);
      out.pm10(m, i) = d.conc[1](i);
      out.o3_model(m, i) = d.model[0](i);
      out.pm10_model(m, i) = d.model[1](i);
      out.pm24(m, i) = predicted_pm24(d.conc[1](i), panel.row(Series::Pm10, st), hour);
      out.o3_8h(m, i) = predicted_o3_8h(d.conc[0](i), panel.row(Series::Ozone, st), hour);
    }
  }
  return out;
}

std::vector<int> evaluation_hours(const HourlyPanel& panel, const std::vector<int>& hours_of_day) {
  std::vector<int> out;
  for (int h = panel.warmup_hours; h < panel.n_hours; ++h) {
    const int q = hour_of_day(panel.stamp(h));
    if (std::find(hours_of_day.begin(), hours_of_day.end(), q) != hours_of_day.end()) out.push_back(h);
  }
  return out;
}

void retrospective_driver(const ChainOutput& chain, const HourlyPanel& panel, const std::vector<int>& target_hours,
                          std::uint64_t seed, const HourVisitor& visit) {
  for (int h : target_hours) visit(predict_hour(chain.draws, panel, h, chain.lags, chain.transforms, seed));
}

PredictiveDraws retrospective_driver(const ChainOutput& chain, const HourlyPanel& panel,
                                     const std::vector<int>& target_hours, std::uint64_t seed) {
  PredictiveDraws out;
  out.stations = panel.stations;
  retrospective_driver(chain, panel, target_hours, seed, [&](const HourDraws& h) { out.hours.push_back(h); });
  return out;
}

std::vector<MonthWindow> prospective_schedule(const HourlyPanel& panel) {
  std::vector<MonthWindow> months;
  for (int h = panel.warmup_hours; h < panel.n_hours; ++h) {
    const auto [y, m] = year_month(panel.stamp(h));
    if (months.empty() || months.back().year != y || months.back().month != m) {
      months.push_back({y, m, h, {}});
    }
    months.back().targets.push_back(h);
  }
  if (!months.empty()) months.erase(months.begin());
  return months;
}

void prospective_driver(const HourlyPanel& panel, const LagConfig& lags, const TransformPair& transforms,
                        const ChainConfig& cfg, const PriorConfig& prior, const HourVisitor& visit, int workers) {
  const auto schedule = prospective_schedule(panel);
  if (schedule.empty()) throw DataError("prospective prediction needs at least two months of analysis data");
  workers = std::max(1, workers);
  const auto run_month = [&](std::size_t idx) {
    const MonthWindow& w = schedule[idx];
    ChainConfig mc = cfg;
    mc.seed = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(w.year), static_cast<std::uint64_t>(w.month)})();
    const HourlyPanel train = panel.truncated(w.train_end);
    const ChainOutput chain = run_chain(train, lags, transforms, mc, prior);
    std::vector<HourDraws> out;
    out.reserve(w.targets.size());
    for (int h : w.targets) out.push_back(predict_hour(chain.draws, panel, h, lags, transforms, mc.seed));
    return out;
  };
  for (std::size_t first = 0; first < schedule.size(); first += static_cast<std::size_t>(workers)) {
    const std::size_t last = std::min(schedule.size(), first + static_cast<std::size_t>(workers));
    std::vector<std::future<std::vector<HourDraws>>> jobs;
    for (std::size_t m = first; m < last; ++m) {
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run_month, m));
    }
    for (auto& j : jobs) {
      for (const auto& h : j.get()) visit(h);
    }
  }
}

DrawCsvWriter::DrawCsvWriter(const std::filesystem::path& path, std::vector<StationMeta> stations)
    : file_(std::fopen(path.string().c_str(), "w")), stations_(std::move(stations)) {
  if (!file_) throw DataError("cannot write " + path.string());
  std::fputs("hour,station,draw_index,o3_ppb,pm10_ugm3,pm24,o3_8h\n", file_);
}

DrawCsvWriter::~DrawCsvWriter() {
  if (file_) std::fclose(file_);
}

void DrawCsvWriter::write(const HourDraws& h) {
  const std::string stamp = format_timestamp(h.stamp);
  for (Eigen::Index i = 0; i < h.o3.cols(); ++i) {
    const std::string& id = stations_[static_cast<std::size_t>(i)].id;
    for (Eigen::Index m = 0; m < h.n_draws(); ++m) {
      std::fprintf(file_, "%s,%s,%ld,%.10g,%.10g,%.10g,%.10g\n", stamp.c_str(), id.c_str(), static_cast<long>(m),
                   h.o3(m, i), h.pm10(m, i), h.pm24(m, i), h.o3_8h(m, i));
    }
  }
}

}  // namespace aqcast
