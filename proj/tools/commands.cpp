#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "aqcast/alerts.hpp"
#include "aqcast/errors.hpp"
#include "aqcast/forecast.hpp"
#include "aqcast/log.hpp"
#include "aqcast/panel.hpp"
#include "aqcast/sampler.hpp"
#include "aqcast/scoring.hpp"
#include "aqcast/spatial.hpp"
#include "aqcast/synthetic.hpp"

namespace fs = std::filesystem;

namespace aqcast::cli {
namespace {

std::uint64_t fnv1a(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

/// Run manifest: inputs, outputs with sizes and hashes, seeds and the resolved
/// configuration. No timestamps, so reruns are byte-identical.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const std::string& name) { outputs_.push_back(name); }
  void seed(const std::string& name, std::uint64_t s) { seeds_.emplace_back(name, s); }

  void write() const {
    const fs::path dir(cfg_.out_dir);
    const fs::path path = dir / ("manifest_" + command_ + ".txt");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "version = " << kVersion << '\n' << "command = " << command_ << '\n';
    char hex[17];
    for (const auto& p : inputs_) {
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(p)));
      out << "input = " << p.string() << " bytes=" << fs::file_size(p) << " fnv1a64=" << hex << '\n';
    }
    for (const auto& [name, s] : seeds_) out << "seed." << name << " = " << s << '\n';
    for (const auto& name : outputs_) {
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(dir / name)));
      out << "output = " << name << " bytes=" << fs::file_size(dir / name) << " fnv1a64=" << hex << '\n';
    }
    out << "\n# resolved configuration\n";
    print_config(out, cfg_);
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::vector<fs::path> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
};

HourlyPanel load_configured_panel(const RunConfig& cfg, Manifest& m) {
  if (cfg.stations.empty() || cfg.observations.empty()) {
    throw DataError("data.stations and data.observations must name the panel files");
  }
  for (const auto& p : {cfg.stations, cfg.observations}) {
    if (!fs::exists(p)) throw DataError("panel file not found: " + p);
    m.input(p);
  }
  HourlyPanel panel = load_panel(cfg.stations, cfg.observations, cfg.warmup_hours);
  if (cfg.impute_nearest) panel = nearest_station_impute(panel, build_car(panel.stations));
  return panel;
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

std::vector<int> target_hours(const RunConfig& cfg, const HourlyPanel& panel) {
  if (cfg.all_hours) {
    std::vector<int> all;
    for (int h = panel.warmup_hours; h < panel.n_hours; ++h) all.push_back(h);
    return all;
  }
  return evaluation_hours(panel, cfg.evaluation_hours);
}

ChainOutput load_chain(const std::string& path, Manifest& m) {
  if (!fs::exists(path)) throw DataError("chain file not found: " + path + " (run fit first)");
  m.input(path);
  return read_chain(path);
}

void write_prediction_summary(const std::vector<HourDraws>& hours, const std::vector<StationMeta>& stations,
                              const fs::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw DataError("cannot write " + path.string());
  std::fputs("hour,station,quantity,mean,lo95,hi95\n", f);
  for (const auto& h : hours) {
    const std::string stamp = format_timestamp(h.stamp);
    const std::pair<const char*, const Eigen::MatrixXd*> cols[] = {
        {"o3_ppb", &h.o3}, {"pm10_ugm3", &h.pm10}, {"pm24", &h.pm24}, {"o3_8h", &h.o3_8h}};
    for (Eigen::Index i = 0; i < h.o3.cols(); ++i) {
      for (const auto& [name, mat] : cols) {
        std::vector<double> v(mat->col(i).data(), mat->col(i).data() + mat->rows());
        const Interval s = summarize(v);
        std::fprintf(f, "%s,%s,%s,%.10g,%.10g,%.10g\n", stamp.c_str(), stations[static_cast<std::size_t>(i)].id.c_str(),
                     name, s.mean, s.lo, s.hi);
      }
    }
  }
  std::fclose(f);
}

}  // namespace

void cmd_fit(const RunConfig& cfg, const std::string& resume) {
  Manifest m("fit", cfg);
  const HourlyPanel panel = load_configured_panel(cfg, m);
  ChainCheckpoint cp;
  const ChainCheckpoint* from = nullptr;
  if (!resume.empty()) {
    if (!fs::exists(resume)) throw DataError("checkpoint not found: " + resume);
    m.input(resume);
    cp = read_checkpoint(resume);
    from = &cp;
  }
  const ChainOutput chain = run_chain(panel, cfg.lags, cfg.transforms, cfg.chain, cfg.prior, from);
  write_chain(chain, out_path(cfg, "chain.txt"));
  write_checkpoint(out_path(cfg, "checkpoint.txt"), chain.final_state);
  write_draws_csv(chain, out_path(cfg, "draws.csv"));
  write_diagnostics_csv(chain, out_path(cfg, "diagnostics.csv"));
  m.seed("chain", cfg.chain.seed);
  for (const char* f : {"chain.txt", "checkpoint.txt", "draws.csv", "diagnostics.csv"}) m.output(f);
  m.write();
  std::cout << "fit: " << chain.draws.size() << " retained draws, iterations through "
            << chain.final_state.iteration << ", output in " << cfg.out_dir << '\n';
}

void cmd_predict(const RunConfig& cfg, const std::string& chain_path) {
  Manifest m("predict", cfg);
  const ChainOutput chain = load_chain(chain_path, m);
  const HourlyPanel panel = load_configured_panel(cfg, m);
  const auto hours = target_hours(cfg, panel);
  DrawCsvWriter writer(out_path(cfg, "predictions.csv"), panel.stations);
  std::vector<HourDraws> kept;
  retrospective_driver(chain, panel, hours, cfg.chain.seed, [&](const HourDraws& h) {
    writer.write(h);
    kept.push_back(h);
  });
  write_prediction_summary(kept, panel.stations, out_path(cfg, "prediction_summary.csv"));
  m.seed("predict", cfg.chain.seed);
  m.output("predictions.csv");
  m.output("prediction_summary.csv");
  m.write();
  std::cout << "predict: " << hours.size() << " target hours x " << chain.draws.size() << " draws\n";
}

void cmd_alerts(const RunConfig& cfg, const std::string& chain_path) {
  Manifest m("alerts", cfg);
  const ChainOutput chain = load_chain(chain_path, m);
  const HourlyPanel panel = load_configured_panel(cfg, m);
  PhaseAccumulator acc(panel.stations, cfg.thresholds);
  retrospective_driver(chain, panel, target_hours(cfg, panel), cfg.chain.seed,
                       [&](const HourDraws& h) { acc.add(h); });
  acc.finish();
  write_phase_probabilities_csv(acc.daily(), out_path(cfg, "phase_daily.csv"));
  write_phase_probabilities_csv(acc.hourly(), out_path(cfg, "phase_hourly.csv"), "timestamp");
  write_phase_counts_csv(acc.hour_counts(), acc.day_counts(), acc.n_hours(), acc.n_days(),
                         out_path(cfg, "phase_counts.csv"));
  m.seed("predict", cfg.chain.seed);
  for (const char* f : {"phase_daily.csv", "phase_hourly.csv", "phase_counts.csv"}) m.output(f);
  m.write();
  std::cout << "alerts: " << acc.n_hours() << " hours over " << acc.n_days() << " days\n";
}

void cmd_exceed(const RunConfig& cfg) {
  Manifest m("exceed", cfg);
  const HourlyPanel panel = load_configured_panel(cfg, m);
  ExceedanceAccumulator acc(panel.stations, cfg.thresholds);
  prospective_driver(panel, cfg.lags, cfg.transforms, cfg.chain, cfg.prior, [&](const HourDraws& h) { acc.add(h); },
                     cfg.workers);
  acc.finish();
  const ExceedanceTable o3 = acc.ozone();
  write_exceedance_csv(o3, "ozone", out_path(cfg, "exceed_ozone.csv"));
  write_exceedance_csv(acc.pm10(), "pm10", out_path(cfg, "exceed_pm10.csv"));
  write_profile_csv(acc.ozone_by_month(), "ozone", "month", out_path(cfg, "ozone_by_month.csv"));
  write_profile_csv(acc.ozone_by_hour(), "ozone", "hour", out_path(cfg, "ozone_by_hour.csv"));
  write_profile_csv(acc.pm10_by_month(), "pm10", "month", out_path(cfg, "pm10_by_month.csv"));
  m.seed("chain", cfg.chain.seed);
  for (const char* f : {"exceed_ozone.csv", "exceed_pm10.csv", "ozone_by_month.csv", "ozone_by_hour.csv",
                        "pm10_by_month.csv"}) {
    m.output(f);
  }
  m.write();
  std::cout << "exceed: " << o3.n_hours << " hours over " << o3.n_days << " days\n";
}

void cmd_evaluate(const RunConfig& cfg) {
  Manifest m("evaluate", cfg);
  const HourlyPanel panel = load_configured_panel(cfg, m);
  std::vector<Candidate> candidates;
  if (cfg.candidates.empty()) {
    candidates = default_candidates();
  } else {
    for (const auto& c : cfg.candidates) candidates.push_back(parse_candidate(c));
  }
  const HoldoutConfig hc{cfg.holdout_fraction, cfg.holdout_seed, cfg.workers};
  const auto rows = holdout_experiment(panel, candidates, cfg.transforms, cfg.chain, cfg.prior, hc);
  write_score_csv(rows, out_path(cfg, "scores.csv"));
  m.seed("chain", cfg.chain.seed);
  m.seed("holdout", cfg.holdout_seed);
  m.output("scores.csv");
  m.write();
  std::printf("%-8s %-22s %10s %10s %10s\n", "model", "lags", "ES", "CRPS_O3", "CRPS_PM10");
  for (const auto& r : rows) {
    std::printf("%-8s %-22s %10.5f %10.5f %10.5f\n", r.name.c_str(), r.lags.c_str(), r.es, r.crps_o3, r.crps_pm);
  }
  std::printf("lowest ES: %s\n", rows[best_by_es(rows)].name.c_str());
}

void cmd_simulate(const RunConfig& cfg) {
  Manifest m("simulate", cfg);
  SynthSpec spec = default_synth_spec(cfg.sim_stations, cfg.sim_hours, cfg.lags, cfg.sim_seed);
  spec.transforms = cfg.transforms;
  const SynthResult r = generate(spec);
  write_panel(r.panel, out_path(cfg, "stations.csv"), out_path(cfg, "observations.csv"));
  {
    std::ofstream t(out_path(cfg, "truth.txt"));
    write_state(t, r.truth);
  }
  m.seed("simulate", cfg.sim_seed);
  for (const char* f : {"stations.csv", "observations.csv", "truth.txt"}) m.output(f);
  m.write();
  std::cout << "simulate: " << cfg.sim_stations << " stations, " << r.panel.warmup_hours << " warm-up + "
            << cfg.sim_hours << " analysis hours in " << cfg.out_dir << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian spatiotemporal air quality forecasting"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  bool desk = false;
  bool show_config = false;
  std::vector<std::string> settings;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "seed for the command's random streams");
  app.add_option("--workers", workers, "parallel chains (default: available cores)")->check(CLI::PositiveNumber);
  app.add_flag("--desk-scale", desk, "short chains (6000 iterations, 1000 burn-in, thin 5)");
  app.add_flag("--print-config", show_config, "print the resolved configuration and exit");
  app.add_option("--set", settings, "override one key, e.g. --set chain.thin=10")->take_all();

  std::string resume;
  std::string chain_path;
  auto* fit = app.add_subcommand("fit", "fit the model to a panel");
  fit->add_option("--resume", resume, "continue from a checkpoint");
  auto* predict = app.add_subcommand("predict", "one-step-ahead predictions from a fitted chain");
  predict->add_option("--chain", chain_path, "chain file (default: <output.dir>/chain.txt)");
  auto* alerts = app.add_subcommand("alerts", "phase probabilities from a fitted chain");
  alerts->add_option("--chain", chain_path, "chain file (default: <output.dir>/chain.txt)");
  auto* exceed = app.add_subcommand("exceed", "prospective monthly exceedance report");
  auto* evaluate = app.add_subcommand("evaluate", "hold-out comparison of lag sets");
  auto* simulate = app.add_subcommand("simulate", "write a synthetic panel");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = default_config(desk);
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw DataError("--set expects section.key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (*seed_opt) {
      if (simulate->parsed()) cfg.sim_seed = seed;
      else cfg.chain.seed = seed;
    }
    cfg.workers = workers;
    cfg.lags.validate();
    cfg.prior.validate();
    cfg.chain.validate();
    cfg.thresholds.validate();

    if (show_config) {
      print_config(std::cout, cfg);
      return 0;
    }
    if (chain_path.empty()) chain_path = (fs::path(cfg.out_dir) / "chain.txt").string();

    if (fit->parsed()) cmd_fit(cfg, resume);
    else if (predict->parsed()) cmd_predict(cfg, chain_path);
    else if (alerts->parsed()) cmd_alerts(cfg, chain_path);
    else if (exceed->parsed()) cmd_exceed(cfg);
    else if (evaluate->parsed()) cmd_evaluate(cfg);
    else if (simulate->parsed()) cmd_simulate(cfg);
    else {
      std::cerr << app.help();
      return 2;
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace aqcast::cli
