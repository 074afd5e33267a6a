#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "aqcast/alerts.hpp"
#include "aqcast/model.hpp"
#include "aqcast/sampler.hpp"
#include "aqcast/scoring.hpp"

namespace aqcast::cli {

/// Every knob the subcommands read, with the documented defaults.
struct RunConfig {
  // [data]
  std::string stations;
  std::string observations;
  int warmup_hours = 168;
  bool impute_nearest = true;
  // [model]
  LagConfig lags = LagConfig::symmetric({1, 2, 24, 168});
  TransformPair transforms;
  // [prior]
  PriorConfig prior;
  // [chain]
  ChainConfig chain = ChainConfig::paper();
  // [thresholds]
  Thresholds thresholds;
  // [predict]
  std::vector<int> evaluation_hours = {10, 15, 20};
  bool all_hours = false;
  // [evaluate]
  double holdout_fraction = 0.1;
  std::uint64_t holdout_seed = 1;
  std::vector<std::string> candidates;
  // [simulate]
  int sim_stations = 10;
  int sim_hours = 24 * 31;
  std::uint64_t sim_seed = 1;
  // [output]
  std::string out_dir = "out";

  int workers = 1;
};

/// Defaults, optionally switched to desk-scale chain settings.
RunConfig default_config(bool desk_scale);

/// Applies an INI file on top of `cfg`. Unknown sections or keys and malformed
/// values throw DataError naming the key.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Applies one "section.key=value" override.
void apply_setting(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

/// Writes the full configuration as INI (round-trips through apply_config_file).
void print_config(std::ostream& out, const RunConfig& cfg);

}  // namespace aqcast::cli
