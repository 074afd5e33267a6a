#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "aqcast/model.hpp"
#include "aqcast/panel.hpp"
#include "aqcast/rng.hpp"
#include "aqcast/spatial.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "aqcast_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Stations on a small grid, regions assigned round-robin.
inline std::vector<aqcast::StationMeta> grid_stations(int n) {
  std::vector<aqcast::StationMeta> out;
  for (int i = 0; i < n; ++i) {
    aqcast::StationMeta s;
    s.id = "T" + std::to_string(10 + i);
    s.name = "Tst";
    s.region = static_cast<aqcast::Region>(i % aqcast::kNumRegions);
    s.lat = 19.3 + 0.02 * (i % 4);
    s.lon = -99.2 + 0.03 * (i / 4) + 0.005 * i;
    out.push_back(s);
  }
  return out;
}

/// Fully observed panel with positive random pollutants and covariates.
inline aqcast::HourlyPanel random_panel(int n_stations, int n_hours, int warmup, std::uint64_t seed,
                                        aqcast::HourStamp start = aqcast::parse_timestamp("2017-01-01T00")) {
  aqcast::Rng rng(seed);
  auto p = aqcast::HourlyPanel::empty(start, n_hours, warmup, grid_stations(n_stations));
  for (int i = 0; i < n_stations; ++i) {
    for (int h = 0; h < n_hours; ++h) {
      p.ozone(i, h) = 20.0 + 30.0 * rng.uniform();
      p.pm10(i, h) = 30.0 + 40.0 * rng.uniform();
      p.tmp(i, h) = 15.0 + 5.0 * rng.normal();
      p.rh(i, h) = 50.0 + 10.0 * rng.normal();
    }
  }
  p.refresh_missing();
  return p;
}

/// Mean and variance (n - 1 denominator) of a sample.
struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return {m, s / static_cast<double>(x.size() - 1)};
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

}  // namespace testing
