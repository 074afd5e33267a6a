#pragma once

#include <string>

#include "config.hpp"

namespace aqcast::cli {

inline constexpr const char* kVersion = "aqcast 0.1.0";

/// Fits one chain on the configured panel; resumes from `resume` when non-empty.
/// Writes chain.txt, checkpoint.txt, draws.csv, diagnostics.csv.
void cmd_fit(const RunConfig& cfg, const std::string& resume);

/// One-step-ahead draws from a fitted chain at the evaluation hours.
/// Writes predictions.csv (every draw) and prediction_summary.csv.
void cmd_predict(const RunConfig& cfg, const std::string& chain_path);

/// Retrospective phase probabilities and phase counts from a fitted chain.
/// Writes phase_daily.csv, phase_hourly.csv, phase_counts.csv.
void cmd_alerts(const RunConfig& cfg, const std::string& chain_path);

/// Prospective month-by-month MAAQS exceedance report.
/// Writes exceed_ozone.csv, exceed_pm10.csv and the month/hour profiles.
void cmd_exceed(const RunConfig& cfg);

/// Hold-out comparison of candidate lag sets. Writes scores.csv.
void cmd_evaluate(const RunConfig& cfg);

/// Simulated panel from the model. Writes stations.csv, observations.csv, truth.txt.
void cmd_simulate(const RunConfig& cfg);

/// Parses arguments and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace aqcast::cli
